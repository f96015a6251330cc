#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cstdint>

#include <Eigen/QR>

#include "fairclust/autoencoder.hpp"
#include "fairclust/fair_dec.hpp"
#include "fairclust/gradcheck.hpp"
#include "fairclust/network.hpp"

namespace fairclust::oracle {

inline Tensor gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
  return t;
}

/// Finite differences on a 3-layer relu network under mean squared error.
inline GradCheckResult network_mse_check(std::uint64_t seed, double h = 1e-4) {
  Rng rng(seed);
  ParamSet net({make_layer("l0", 4, 6, Activation::kRelu, rng, 0.7), make_layer("l1", 6, 5, Activation::kRelu, rng, 0.7),
                make_layer("l2", 5, 3, Activation::kIdentity, rng, 0.7)});
  for (auto& l : net.layers()) {
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias(j) = 0.1 * rng.normal();
  }
  const Tensor x = gaussian(8, 4, rng);
  const Tensor y = gaussian(8, 3, rng);
  const auto fr = forward(net.layers(), x);
  const Tensor up = (2.0 / static_cast<double>(y.size())) * (fr.output - y);
  const Vector analytic = backward(net.layers(), fr.tape, up).grads.flatten();
  auto loss = [&](const Vector& v) {
    ParamSet p = net;
    p.unflatten(v);
    return mse(infer(p.layers(), x), y);
  };
  const Vector flat = net.flatten();
  return finite_diff_check(loss, analytic, flat, h, static_cast<std::size_t>(flat.size()), seed);
}

/// Finite differences on the full clustering objective with respect to every
/// network weight and every centroid coordinate, on N=12, D=4, d=2, K=T=2.
inline GradCheckResult objective_check(double gamma, double recon_weight, std::uint64_t seed, double h = 1e-5) {
  Rng rng(seed);
  const Autoencoder ae = make_autoencoder({4, 5, 2}, rng.substream("net"), 0.5);
  const Tensor x = gaussian(12, 4, rng);
  std::vector<int> groups(12);
  for (std::size_t i = 0; i < 12; ++i) groups[i] = static_cast<int>(i % 2);
  TrainConfig cfg;
  cfg.k = 2;
  cfg.gamma = gamma;
  cfg.recon_weight = recon_weight;
  const Tensor m = gaussian(2, 2, rng);
  const Tensor z = encode(ae, x);
  const Tensor pi = compute_fairoids(z, groups, 2);
  const Tensor p = sharpen_target(soft_assign(z, m, cfg.dof));
  const Tensor psi = smooth_target(fair_assign(m, pi, cfg.dof), 3.0, 1e-9);

  const auto g = objective_with_grad(ae, m, pi, x, p, psi, cfg);
  const Vector w = ae.params.flatten();
  const Eigen::Index nw = w.size();
  Vector all(nw + m.size());
  all << w, Eigen::Map<const Vector>(m.data(), m.size());
  Vector analytic(all.size());
  analytic << g.net_grads.flatten(), Eigen::Map<const Vector>(g.centre_grad.data(), g.centre_grad.size());

  auto loss = [&](const Vector& v) {
    Autoencoder a = ae;
    a.params.unflatten(v.head(nw));
    Tensor mm = m;
    Eigen::Map<Vector>(mm.data(), mm.size()) = v.tail(m.size());
    return objective_value(a, mm, pi, x, p, psi, cfg).total;
  };
  return finite_diff_check(loss, analytic, all, h, static_cast<std::size_t>(all.size()), seed);
}

/// argmin_M |P M - Z| via column-pivoting QR on P itself (no normal equations).
inline Tensor least_squares(const Tensor& p, const Tensor& z) {
  return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(p).solve(z);
}

/// Large-beta limit of the smoothed target: every row equals
/// (1 / f_t) / sum_t' (1 / f_t'), with f the column sums of phi.
inline Tensor inverse_frequency_limit(const Tensor& phi) {
  const RowVector inv = phi.colwise().sum().cwiseInverse();
  Tensor out(phi.rows(), phi.cols());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) out.row(k) = inv / inv.sum();
  return out;
}

/// Random row-stochastic matrix with entries bounded away from zero.
inline Tensor random_stochastic(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = 0.01 + rng.uniform();
  for (Eigen::Index r = 0; r < rows; ++r) t.row(r) /= t.row(r).sum();
  return t;
}

}  // namespace fairclust::oracle
