#include "fairclust/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace fairclust {

Sgd::Sgd(SgdOptions opts) : opts_(opts) {
  if (!(opts_.lr > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
  if (opts_.momentum < 0.0 || opts_.momentum >= 1.0) throw std::invalid_argument("sgd: momentum must be in [0, 1)");
}

void Sgd::set_lr(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
  opts_.lr = lr;
}

void Sgd::ensure_slots(const std::vector<Eigen::Index>& sizes) {
  if (velocity_.empty()) {
    for (auto n : sizes) velocity_.push_back(Vector::Zero(n));
    return;
  }
  if (velocity_.size() != sizes.size()) throw ShapeError("sgd: parameter group changed shape between steps");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (velocity_[i].size() != sizes[i]) throw ShapeError("sgd: parameter group changed shape between steps");
  }
}

void Sgd::update(std::size_t slot, double* p, const double* g, Eigen::Index n) {
  Eigen::Map<Vector> pv(p, n);
  Eigen::Map<const Vector> gv(g, n);
  Vector& v = velocity_[slot];
  v = opts_.momentum * v + gv;
  pv -= opts_.lr * v;
}

void Sgd::step(ParamSet& params, const ParamSet& grads) {
  if (params.depth() != grads.depth()) throw ShapeError("sgd: gradient depth does not match parameters");
  std::vector<Eigen::Index> sizes;
  for (std::size_t i = 0; i < params.depth(); ++i) {
    const auto& p = params[i];
    const auto& g = grads[i];
    if (p.weight.rows() != g.weight.rows() || p.weight.cols() != g.weight.cols() || p.bias.size() != g.bias.size()) {
      throw ShapeError("sgd: gradient shape mismatch at layer '" + p.name + "'");
    }
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw TrainingDivergence("sgd: non-finite gradient at layer '" + p.name + "'");
    }
    sizes.push_back(p.weight.size());
    sizes.push_back(p.bias.size());
  }
  ensure_slots(sizes);
  for (std::size_t i = 0; i < params.depth(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    update(2 * i, p.weight.data(), g.weight.data(), p.weight.size());
    update(2 * i + 1, p.bias.data(), g.bias.data(), p.bias.size());
  }
}

void Sgd::step(Tensor& params, const Tensor& grad) {
  if (params.rows() != grad.rows() || params.cols() != grad.cols()) {
    throw ShapeError("sgd: gradient " + shape_str(grad) + " does not match parameters " + shape_str(params));
  }
  if (!grad.allFinite()) throw TrainingDivergence("sgd: non-finite gradient");
  ensure_slots({params.size()});
  update(0, params.data(), grad.data(), params.size());
}

}  // namespace fairclust
