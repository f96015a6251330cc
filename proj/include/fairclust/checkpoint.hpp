#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fairclust/network.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

/// {"layers": [{"name", "activation", "in", "out", "weight": [...], "bias": [...]}]}
/// Values are written with round-trip precision, so load(save(p)) == p bit for bit.
nlohmann::json params_to_json(const ParamSet& p);
ParamSet params_from_json(const nlohmann::json& j);

/// Network checkpoint file: {"format": "fairclust.params", "version", "encoder_depth", "params"}.
void save_params(const std::filesystem::path& path, const ParamSet& p, std::size_t encoder_depth);
ParamSet load_params(const std::filesystem::path& path, std::size_t* encoder_depth = nullptr);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace fairclust
