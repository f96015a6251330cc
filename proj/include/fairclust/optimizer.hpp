#pragma once

#include <vector>

#include "fairclust/network.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust {

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.9;
};

/// Classic momentum SGD: v <- m v + g; p <- p - lr v.
///
/// One instance owns the velocity buffers of one parameter group (a ParamSet
/// or a single matrix). Buffers are allocated on the first step and the group
/// shape must stay fixed afterwards.
class Sgd {
 public:
  explicit Sgd(SgdOptions opts = {});

  void step(ParamSet& params, const ParamSet& grads);
  void step(Tensor& params, const Tensor& grad);

  [[nodiscard]] double lr() const { return opts_.lr; }
  void set_lr(double lr);
  [[nodiscard]] double momentum() const { return opts_.momentum; }
  void reset() { velocity_.clear(); }

 private:
  void update(std::size_t slot, double* p, const double* g, Eigen::Index n);
  void ensure_slots(const std::vector<Eigen::Index>& sizes);

  SgdOptions opts_;
  std::vector<Vector> velocity_;
};

}  // namespace fairclust
