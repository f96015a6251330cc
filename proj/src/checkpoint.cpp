#include "fairclust/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace fairclust {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows()}, {"cols", t.cols()}, {"data", std::vector<double>(t.data(), t.data() + t.size())}};
}

Tensor tensor_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw ShapeError("tensor json: data length does not match shape");
  }
  Tensor t(rows, cols);
  std::copy(data.begin(), data.end(), t.data());
  return t;
}

json params_to_json(const ParamSet& p) {
  json layers = json::array();
  for (const auto& l : p.layers()) {
    layers.push_back(json{{"name", l.name},
                          {"activation", to_string(l.activation)},
                          {"in", l.in()},
                          {"out", l.out()},
                          {"weight", std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size())},
                          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return json{{"layers", layers}};
}

ParamSet params_from_json(const json& j) {
  ParamSet p;
  for (const auto& lj : j.at("layers")) {
    AffineLayer l;
    l.name = lj.at("name").get<std::string>();
    l.activation = activation_from_string(lj.at("activation").get<std::string>());
    const auto in = lj.at("in").get<Eigen::Index>();
    const auto out = lj.at("out").get<Eigen::Index>();
    const auto w = lj.at("weight").get<std::vector<double>>();
    const auto b = lj.at("bias").get<std::vector<double>>();
    if (static_cast<std::size_t>(in * out) != w.size() || static_cast<std::size_t>(out) != b.size()) {
      throw ShapeError("checkpoint: layer '" + l.name + "' values do not match its shape");
    }
    l.weight.resize(in, out);
    std::copy(w.begin(), w.end(), l.weight.data());
    l.bias = Eigen::Map<const RowVector>(b.data(), out);
    p.push_back(std::move(l));
  }
  return p;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_params(const std::filesystem::path& path, const ParamSet& p, std::size_t encoder_depth) {
  write_json_file(path, json{{"format", "fairclust.params"},
                             {"version", kCheckpointVersion},
                             {"encoder_depth", encoder_depth},
                             {"params", params_to_json(p)}});
}

ParamSet load_params(const std::filesystem::path& path, std::size_t* encoder_depth) {
  const json j = read_json_file(path);
  if (j.value("format", "") != "fairclust.params") {
    throw std::runtime_error(path.string() + " is not a network checkpoint");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  }
  if (encoder_depth != nullptr) *encoder_depth = j.at("encoder_depth").get<std::size_t>();
  return params_from_json(j.at("params"));
}

}  // namespace fairclust
