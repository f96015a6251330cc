#include "fairclust/network.hpp"

#include <cmath>
#include <stdexcept>

namespace fairclust {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector ParamSet::flatten() const {
  Vector flat(static_cast<Eigen::Index>(size()));
  Eigen::Index pos = 0;
  for (const auto& l : layers_) {
    flat.segment(pos, l.weight.size()) = Eigen::Map<const Vector>(l.weight.data(), l.weight.size());
    pos += l.weight.size();
    flat.segment(pos, l.bias.size()) = l.bias.transpose();
    pos += l.bias.size();
  }
  return flat;
}

void ParamSet::unflatten(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) {
    throw ShapeError("unflatten: expected " + std::to_string(size()) + " values, got " +
                     std::to_string(flat.size()));
  }
  Eigen::Index pos = 0;
  for (auto& l : layers_) {
    Eigen::Map<Vector>(l.weight.data(), l.weight.size()) = flat.segment(pos, l.weight.size());
    pos += l.weight.size();
    l.bias = flat.segment(pos, l.bias.size()).transpose();
    pos += l.bias.size();
  }
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  for (auto& l : out.layers_) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return out;
}

std::span<const AffineLayer> ParamSet::slice(std::size_t first, std::size_t count) const {
  if (first + count > layers_.size()) throw std::out_of_range("ParamSet::slice out of range");
  return std::span<const AffineLayer>(layers_).subspan(first, count);
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.name != b.name || a.activation != b.activation) return false;
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.bias.size() != b.bias.size()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

AffineLayer make_layer(std::string name, Eigen::Index in, Eigen::Index out, Activation act, Rng& rng,
                       double init_std) {
  if (in <= 0 || out <= 0) throw ShapeError("make_layer " + name + ": widths must be positive");
  AffineLayer layer{std::move(name), Tensor(in, out), RowVector::Zero(out), act};
  if (init_std <= 0.0) init_std = std::sqrt((act == Activation::kRelu ? 2.0 : 1.0) / static_cast<double>(in));
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = init_std * rng.normal();
  return layer;
}

namespace {

void apply_activation(Tensor& y, Activation act) {
  if (act == Activation::kRelu) y = y.cwiseMax(0.0);
}

void check_input(const AffineLayer& layer, const Tensor& x) {
  if (x.cols() != layer.in()) {
    throw ShapeError("layer '" + layer.name + "' expects " + std::to_string(layer.in()) + " inputs, got " +
                     shape_str(x));
  }
  if (layer.bias.size() != layer.out()) {
    throw ShapeError("layer '" + layer.name + "' bias size does not match weight columns");
  }
}

}  // namespace

ForwardResult forward(std::span<const AffineLayer> layers, const Tensor& x, const ForwardOptions& opts) {
  if (opts.dropout < 0.0 || opts.dropout >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (opts.dropout > 0.0 && opts.rng == nullptr) throw std::invalid_argument("dropout requires an rng");

  ForwardResult res;
  res.tape.inputs.reserve(layers.size());
  res.tape.masks.reserve(layers.size());
  res.tape.outputs.reserve(layers.size());

  Tensor h = x;
  const double keep_scale = 1.0 / (1.0 - opts.dropout);
  for (const auto& layer : layers) {
    check_input(layer, h);
    Tensor mask;
    if (opts.dropout > 0.0) {
      mask.resize(h.rows(), h.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = opts.rng->bernoulli(opts.dropout) ? 0.0 : keep_scale;
      }
      h = h.cwiseProduct(mask);
    }
    Tensor y = h * layer.weight;
    y.rowwise() += layer.bias;
    apply_activation(y, layer.activation);
    res.tape.inputs.push_back(std::move(h));
    res.tape.masks.push_back(std::move(mask));
    res.tape.outputs.push_back(y);
    h = std::move(y);
  }
  res.output = std::move(h);
  return res;
}

Tensor infer(std::span<const AffineLayer> layers, const Tensor& x) {
  Tensor h = x;
  for (const auto& layer : layers) {
    check_input(layer, h);
    Tensor y = h * layer.weight;
    y.rowwise() += layer.bias;
    apply_activation(y, layer.activation);
    h = std::move(y);
  }
  return h;
}

BackwardResult backward(std::span<const AffineLayer> layers, const Tape& tape, const Tensor& upstream) {
  const std::size_t depth = layers.size();
  if (tape.inputs.size() != depth || tape.outputs.size() != depth || tape.masks.size() != depth) {
    throw ShapeError("backward: tape has " + std::to_string(tape.inputs.size()) + " layers, network has " +
                     std::to_string(depth));
  }
  if (depth > 0 && (upstream.rows() != tape.outputs.back().rows() || upstream.cols() != tape.outputs.back().cols())) {
    throw ShapeError("backward: upstream gradient " + shape_str(upstream) + " does not match output " +
                     shape_str(tape.outputs.back()));
  }

  BackwardResult res;
  std::vector<AffineLayer> grads(depth);
  Tensor g = upstream;
  for (std::size_t li = depth; li-- > 0;) {
    const auto& layer = layers[li];
    if (layer.activation == Activation::kRelu) {
      g = (tape.outputs[li].array() > 0.0).select(g, 0.0);
    }
    const Tensor& in = tape.inputs[li];
    grads[li].name = layer.name;
    grads[li].activation = layer.activation;
    grads[li].weight.noalias() = in.transpose() * g;
    grads[li].bias = g.colwise().sum();
    Tensor gin = g * layer.weight.transpose();
    if (tape.masks[li].size() > 0) gin = gin.cwiseProduct(tape.masks[li]);
    g = std::move(gin);
  }
  res.grads = ParamSet(std::move(grads));
  res.input_grad = std::move(g);
  return res;
}

}  // namespace fairclust
