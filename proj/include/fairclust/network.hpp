#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairclust/rng.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust {

enum class Activation { kIdentity, kRelu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// y = act(x W + b), with x laid out as (batch x in).
struct AffineLayer {
  std::string name;
  Tensor weight;   // in x out
  RowVector bias;  // out
  Activation activation = Activation::kIdentity;

  [[nodiscard]] Eigen::Index in() const { return weight.rows(); }
  [[nodiscard]] Eigen::Index out() const { return weight.cols(); }
};

/// Ordered list of named layers. Gradients use the same shape.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {}

  [[nodiscard]] std::span<const AffineLayer> layers() const { return layers_; }
  [[nodiscard]] std::span<AffineLayer> layers() { return layers_; }
  [[nodiscard]] std::size_t depth() const { return layers_.size(); }
  const AffineLayer& operator[](std::size_t i) const { return layers_.at(i); }
  AffineLayer& operator[](std::size_t i) { return layers_.at(i); }

  void push_back(AffineLayer layer) { layers_.push_back(std::move(layer)); }

  /// Total number of scalar parameters.
  [[nodiscard]] std::size_t size() const;

  /// Layer by layer, weight (row-major) then bias.
  [[nodiscard]] Vector flatten() const;
  void unflatten(const Vector& flat);

  /// Same names and shapes, all values zero.
  [[nodiscard]] ParamSet zeros_like() const;

  /// Contiguous sub-range of layers.
  [[nodiscard]] std::span<const AffineLayer> slice(std::size_t first, std::size_t count) const;

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<AffineLayer> layers_;
};

/// Gaussian(0, std) weights, zero biases. init_std <= 0 picks a fan-in
/// scale: sqrt(2 / in) ahead of a relu, sqrt(1 / in) otherwise.
AffineLayer make_layer(std::string name, Eigen::Index in, Eigen::Index out, Activation act, Rng& rng,
                       double init_std = 0.0);

struct ForwardOptions {
  /// Inverted dropout applied to the input of every layer when > 0.
  double dropout = 0.0;
  Rng* rng = nullptr;
};

/// Everything backward() needs: per layer, the input it saw (after dropout),
/// the dropout mask (empty when no dropout) and its output.
struct Tape {
  std::vector<Tensor> inputs;
  std::vector<Tensor> masks;
  std::vector<Tensor> outputs;
};

struct ForwardResult {
  Tensor output;
  Tape tape;
};

ForwardResult forward(std::span<const AffineLayer> layers, const Tensor& x, const ForwardOptions& opts = {});

/// Forward pass without dropout or tape.
Tensor infer(std::span<const AffineLayer> layers, const Tensor& x);

struct BackwardResult {
  ParamSet grads;
  Tensor input_grad;
};

BackwardResult backward(std::span<const AffineLayer> layers, const Tape& tape, const Tensor& upstream);

}  // namespace fairclust
