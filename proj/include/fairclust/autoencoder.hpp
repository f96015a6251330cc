#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairclust/network.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust {

/// Stacked denoising autoencoder hyper-parameters.
///
/// `dims` is the encoder half: input width D, hidden widths, bottleneck d.
/// The decoder mirrors it. The reference architecture for large inputs is
/// {D, 500, 500, 2000, d}.
struct AeConfig {
  std::vector<Eigen::Index> dims;
  std::size_t layerwise_epochs = 150;
  std::size_t global_epochs = 100;
  double lr_pretrain = 0.1;
  double momentum = 0.9;
  double dropout = 0.2;
  std::size_t batch = 256;
  double init_std = 0.0;  // <= 0: fan-in scaled
  std::uint64_t seed = 0;

  void validate() const;
};

/// Encoder layers enc0..enc{L-1} followed by decoder layers dec{L-1}..dec0.
/// ReLU everywhere except the bottleneck (enc{L-1}) and the reconstruction (dec0).
struct Autoencoder {
  ParamSet params;
  std::size_t encoder_depth = 0;

  [[nodiscard]] std::span<const AffineLayer> encoder() const { return params.slice(0, encoder_depth); }
  [[nodiscard]] std::span<const AffineLayer> decoder() const {
    return params.slice(encoder_depth, params.depth() - encoder_depth);
  }
  [[nodiscard]] Eigen::Index input_dim() const { return params[0].in(); }
  [[nodiscard]] Eigen::Index latent_dim() const { return params[encoder_depth - 1].out(); }
};

/// Each layer draws from its own named substream of `rng`, so a layer's
/// initial weights do not depend on the widths of the others.
Autoencoder make_autoencoder(const std::vector<Eigen::Index>& dims, const Rng& rng, double init_std = 0.0);

/// The untrained network pretrain_layerwise() starts from for this config.
Autoencoder initial_autoencoder(const AeConfig& cfg);

struct TrainLogEntry {
  std::string stage;  // "layerwise" or "global"
  int layer = -1;     // layer pair index for layerwise, -1 for global
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;

  [[nodiscard]] nlohmann::json to_json() const;
};
using TrainLog = std::vector<TrainLogEntry>;

/// Greedy layer-wise pretraining. Layer pair l is trained as a one-hidden-layer
/// denoising autoencoder on the clean output of encoder layers 0..l-1, with
/// dropout corruption on its inputs and mean squared reconstruction error.
Autoencoder pretrain_layerwise(const Tensor& x, const AeConfig& cfg, TrainLog* log = nullptr);

struct FinetuneOptions {
  std::size_t epochs = 100;
  double lr = 0.1;
  double momentum = 0.9;
  std::size_t batch = 256;
  std::uint64_t seed = 0;
};

/// End-to-end reconstruction training without corruption. The recorded loss
/// is the full-data MSE after each epoch. An epoch whose loss is non-finite or
/// more than twice the previous one is rolled back and retried once at half
/// the learning rate. If the final loss ends above the initial one, the best
/// parameters seen are returned.
Autoencoder finetune_global(const Tensor& x, Autoencoder ae, const FinetuneOptions& opts, TrainLog* log = nullptr);

/// Layer-wise then global stage, as configured.
Autoencoder pretrain(const Tensor& x, const AeConfig& cfg, TrainLog* log = nullptr);

Tensor encode(const Autoencoder& ae, const Tensor& x);
Tensor decode(const Autoencoder& ae, const Tensor& z);
/// Mean over all entries of the squared reconstruction error.
double reconstruction_mse(const Autoencoder& ae, const Tensor& x);

double mse(const Tensor& pred, const Tensor& target);

}  // namespace fairclust
