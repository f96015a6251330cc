#include "fairclust/fair_dec.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fairclust/checkpoint.hpp"
#include "fairclust/kmeans.hpp"
#include "fairclust/metrics.hpp"
#include "fairclust/optimizer.hpp"
#include "fairclust/rng.hpp"

namespace fairclust {

using nlohmann::json;

const char* to_string(RefreshMode m) { return m == RefreshMode::kStreaming ? "streaming" : "in-core"; }

RefreshMode refresh_mode_from_string(const std::string& s) {
  if (s == "in-core") return RefreshMode::kInCore;
  if (s == "streaming") return RefreshMode::kStreaming;
  throw std::invalid_argument("unknown refresh mode '" + s + "' (expected in-core or streaming)");
}

void TrainConfig::validate() const {
  if (k < 2) throw std::invalid_argument("train: K must be at least 2");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("train: gamma must be non-negative");
  if (!(beta >= 2.0)) throw std::invalid_argument("train: beta must be at least 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("train: epsilon must be positive");
  if (!(dof > 0.0)) throw std::invalid_argument("train: dof must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train: momentum must be in [0, 1)");
  if (batch == 0) throw std::invalid_argument("train: batch must be positive");
  if (kmeans_restarts == 0) throw std::invalid_argument("train: kmeans_restarts must be positive");
  if (!(convergence_tol >= 0.0)) throw std::invalid_argument("train: convergence_tol must be non-negative");
  if (!(recon_weight >= 0.0)) throw std::invalid_argument("train: recon_weight must be non-negative");
}

json TrainConfig::to_json() const {
  return json{{"k", k},
              {"gamma", gamma},
              {"beta", beta},
              {"epsilon", epsilon},
              {"dof", dof},
              {"lr", lr},
              {"momentum", momentum},
              {"batch", batch},
              {"max_epochs", max_epochs},
              {"convergence_tol", convergence_tol},
              {"recon_weight", recon_weight},
              {"kmeans_restarts", kmeans_restarts},
              {"lloyd_iters", lloyd_iters},
              {"lloyd_tol", lloyd_tol},
              {"refresh", fairclust::to_string(refresh)},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.k = j.at("k").get<std::size_t>();
  c.gamma = j.at("gamma").get<double>();
  c.beta = j.at("beta").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.dof = j.at("dof").get<double>();
  c.lr = j.at("lr").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.batch = j.at("batch").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.convergence_tol = j.at("convergence_tol").get<double>();
  c.recon_weight = j.at("recon_weight").get<double>();
  c.kmeans_restarts = j.at("kmeans_restarts").get<std::size_t>();
  c.lloyd_iters = j.at("lloyd_iters").get<std::size_t>();
  c.lloyd_tol = j.at("lloyd_tol").get<double>();
  c.refresh = refresh_mode_from_string(j.at("refresh").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Tensor student_t_assign(const Tensor& points, const Tensor& centres, double dof) {
  if (points.cols() != centres.cols()) {
    throw ShapeError("student_t_assign: points " + shape_str(points) + " vs centres " + shape_str(centres));
  }
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_assign: dof must be positive");
  Tensor q = pairwise_sq_dist(points, centres);
  const double power = -(dof + 1.0) / 2.0;
  q = (1.0 + q.array() / dof).pow(power).matrix();
  const Vector row_sum = q.rowwise().sum();
  for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) /= row_sum(i);
  return q;
}

Tensor soft_assign(const Tensor& z, const Tensor& centres, double dof) { return student_t_assign(z, centres, dof); }

Tensor sharpen_target(const Tensor& q) {
  const RowVector f = q.colwise().sum();
  Tensor p(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index k = 0; k < q.cols(); ++k) p(i, k) = f(k) > 0.0 ? q(i, k) * q(i, k) / f(k) : 0.0;
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Tensor compute_fairoids(const Tensor& z, const std::vector<int>& groups, int num_groups) {
  if (static_cast<std::size_t>(z.rows()) != groups.size()) throw ShapeError("compute_fairoids: length mismatch");
  if (num_groups < 2) throw std::invalid_argument("compute_fairoids: T must be at least 2");
  Tensor pi = Tensor::Zero(num_groups, z.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_groups), 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int g = groups[static_cast<std::size_t>(i)];
    if (g < 0 || g >= num_groups) throw std::invalid_argument("compute_fairoids: protected state out of range");
    pi.row(g) += z.row(i);
    ++counts[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < num_groups; ++g) {
    if (counts[static_cast<std::size_t>(g)] == 0) {
      throw std::invalid_argument("compute_fairoids: protected state " + std::to_string(g) + " has no members");
    }
    pi.row(g) /= static_cast<double>(counts[static_cast<std::size_t>(g)]);
  }
  return pi;
}

Tensor fair_assign(const Tensor& centres, const Tensor& fairoids, double dof) {
  return student_t_assign(centres, fairoids, dof);
}

Tensor smooth_target(const Tensor& phi, double beta, double epsilon) {
  if (!(beta >= 2.0)) throw std::invalid_argument("smooth_target: beta must be at least 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("smooth_target: epsilon must be positive");
  const RowVector f = phi.colwise().sum();
  Tensor psi(phi.rows(), phi.cols());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    for (Eigen::Index t = 0; t < phi.cols(); ++t) psi(k, t) = std::pow(phi(k, t) + epsilon, 1.0 / beta) / f(t);
    psi.row(k) /= psi.row(k).sum();
  }
  return psi;
}

double kl_loss(const Tensor& target, const Tensor& model) {
  if (target.rows() != model.rows() || target.cols() != model.cols()) {
    throw ShapeError("kl_loss: target " + shape_str(target) + " vs model " + shape_str(model));
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double t = target.data()[i];
    if (t > 0.0) s += t * std::log(t / model.data()[i]);
  }
  return s;
}

BatchCentroids batch_centroids(const Tensor& p, const Tensor& z, double ridge) {
  if (p.rows() != z.rows()) throw ShapeError("batch_centroids: P and Z need the same number of rows");
  if (p.rows() < 1) throw std::invalid_argument("batch_centroids: empty batch");
  if (ridge < 0.0) throw std::invalid_argument("batch_centroids: ridge must be non-negative");
  const Eigen::Index k = p.cols();

  BatchCentroids out;
  const RowVector mass = p.colwise().sum();
  out.present.resize(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) out.present[static_cast<std::size_t>(c)] = mass(c) > 0.0;

  const Eigen::MatrixXd gram = p.transpose() * p;
  const Eigen::MatrixXd rhs = p.transpose() * z;
  auto solve = [&](double r) -> std::optional<Eigen::MatrixXd> {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += r;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    const auto pivots = ldlt.vectorD().cwiseAbs();
    if (pivots.minCoeff() <= 1e-12 * pivots.maxCoeff() || ldlt.rcond() < 1e-12) return std::nullopt;
    return Eigen::MatrixXd(ldlt.solve(rhs));
  };

  auto m = solve(ridge);
  if (!m && ridge == 0.0) {
    m = solve(1e-6);
    out.ridge_used = true;
  }
  if (!m) throw std::runtime_error("batch_centroids: normal equations are singular even with ridge");
  out.centres = *m;
  return out;
}

namespace {

// Gradient of weight * KL(target || student_t_assign(points, centres)) with
// respect to points and centres.
struct KernelKl {
  double loss = 0.0;
  Tensor d_points;
  Tensor d_centres;
};

KernelKl kernel_kl_grad(const Tensor& target, const Tensor& points, const Tensor& centres, double dof,
                        double weight) {
  KernelKl r;
  const Tensor d2 = pairwise_sq_dist(points, centres);
  const Tensor s = student_t_assign(points, centres, dof);
  r.loss = weight * kl_loss(target, s);
  r.d_points = Tensor::Zero(points.rows(), points.cols());
  r.d_centres = Tensor::Zero(centres.rows(), centres.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double mass = target.row(i).sum();
    for (Eigen::Index k = 0; k < centres.rows(); ++k) {
      // dL/d(d2_ik) = (t_ik - mass * s_ik) (dof + 1) / (2 (dof + d2_ik)); d(d2)/dx = 2 (x - c).
      const double g = weight * (target(i, k) - mass * s(i, k)) * (dof + 1.0) / (dof + d2(i, k));
      const RowVector diff = points.row(i) - centres.row(k);
      r.d_points.row(i) += g * diff;
      r.d_centres.row(k) -= g * diff;
    }
  }
  return r;
}

void check_objective_inputs(const Autoencoder& ae, const Tensor& centres, const Tensor& fairoids, const Tensor& x,
                            const Tensor& p, const Tensor& psi) {
  if (x.cols() != ae.input_dim()) throw ShapeError("objective: batch has wrong feature width " + shape_str(x));
  if (centres.cols() != ae.latent_dim() || fairoids.cols() != ae.latent_dim()) {
    throw ShapeError("objective: centroid/fairoid width does not match the latent dimension");
  }
  if (p.rows() != x.rows() || p.cols() != centres.rows()) throw ShapeError("objective: P_j has shape " + shape_str(p));
  if (psi.rows() != centres.rows() || psi.cols() != fairoids.rows()) {
    throw ShapeError("objective: Psi has shape " + shape_str(psi));
  }
}

}  // namespace

ObjectiveGrad objective_with_grad(const Autoencoder& ae, const Tensor& centres, const Tensor& fairoids,
                                  const Tensor& x_batch, const Tensor& p_batch, const Tensor& psi,
                                  const TrainConfig& cfg) {
  check_objective_inputs(ae, centres, fairoids, x_batch, p_batch, psi);
  const auto n = static_cast<double>(x_batch.rows());
  ObjectiveGrad out;

  auto enc = forward(ae.encoder(), x_batch);
  const Tensor& z = enc.output;

  auto cl = kernel_kl_grad(p_batch, z, centres, cfg.dof, 1.0 / n);
  out.terms.cluster = cl.loss;
  Tensor dz = std::move(cl.d_points);
  out.centre_grad = std::move(cl.d_centres);

  if (cfg.gamma > 0.0) {
    auto fr = kernel_kl_grad(psi, centres, fairoids, cfg.dof, cfg.gamma);
    out.terms.fairness = fr.loss / cfg.gamma;
    out.centre_grad += fr.d_points;
  } else {
    out.terms.fairness = kl_loss(psi, fair_assign(centres, fairoids, cfg.dof));
  }

  ParamSet dec_grads;
  if (cfg.recon_weight > 0.0) {
    auto dec = forward(ae.decoder(), z);
    out.terms.recon = mse(dec.output, x_batch);
    const Tensor up = (cfg.recon_weight * 2.0 / static_cast<double>(dec.output.size())) * (dec.output - x_batch);
    auto db = backward(ae.decoder(), dec.tape, up);
    dz += db.input_grad;
    dec_grads = std::move(db.grads);
  }

  auto eb = backward(ae.encoder(), enc.tape, dz);
  out.net_grads = ae.params.zeros_like();
  for (std::size_t l = 0; l < ae.encoder_depth; ++l) {
    out.net_grads[l].weight = std::move(eb.grads[l].weight);
    out.net_grads[l].bias = std::move(eb.grads[l].bias);
  }
  for (std::size_t l = 0; l < dec_grads.depth(); ++l) {
    out.net_grads[ae.encoder_depth + l].weight = std::move(dec_grads[l].weight);
    out.net_grads[ae.encoder_depth + l].bias = std::move(dec_grads[l].bias);
  }
  out.terms.total = out.terms.cluster + cfg.gamma * out.terms.fairness + cfg.recon_weight * out.terms.recon;
  return out;
}

ObjectiveTerms objective_value(const Autoencoder& ae, const Tensor& centres, const Tensor& fairoids,
                               const Tensor& x_batch, const Tensor& p_batch, const Tensor& psi,
                               const TrainConfig& cfg) {
  check_objective_inputs(ae, centres, fairoids, x_batch, p_batch, psi);
  ObjectiveTerms t;
  const Tensor z = encode(ae, x_batch);
  t.cluster = kl_loss(p_batch, soft_assign(z, centres, cfg.dof)) / static_cast<double>(x_batch.rows());
  t.fairness = kl_loss(psi, fair_assign(centres, fairoids, cfg.dof));
  if (cfg.recon_weight > 0.0) t.recon = mse(decode(ae, z), x_batch);
  t.total = t.cluster + cfg.gamma * t.fairness + cfg.recon_weight * t.recon;
  return t;
}

json EpochRecord::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"epoch", epoch},       {"L_cl", l_cl},     {"L_fr", l_fr},         {"L", l_total},
              {"acc", opt(acc)},      {"nmi", opt(nmi)},  {"fwd_mean", fwd_mean}, {"fwd_max", fwd_max},
              {"balance", opt(balance)}, {"changed_fraction", changed_fraction}};
}

namespace {

std::optional<double> opt_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json TrainedModel::to_json() const {
  json hist = json::array();
  for (const auto& h : history) hist.push_back(h.to_json());
  return json{{"format", "fairclust.model"},
              {"version", kModelVersion},
              {"encoder_depth", ae.encoder_depth},
              {"params", params_to_json(ae.params)},
              {"centres", tensor_to_json(centres)},
              {"fairoids", tensor_to_json(fairoids)},
              {"config", cfg.to_json()},
              {"num_groups", num_groups},
              {"input_dim", ae.input_dim()},
              {"latent_dim", ae.latent_dim()},
              {"converged", converged},
              {"normalizer", norm.to_json()},
              {"feature_names", feature_names},
              {"group_levels", group_levels},
              {"label_levels", label_levels},
              {"history", hist}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  if (j.value("format", "") != "fairclust.model") throw std::runtime_error("not a fairclust model checkpoint");
  if (j.at("version").get<int>() != kModelVersion) throw std::runtime_error("unsupported model checkpoint version");
  TrainedModel m;
  m.ae.params = params_from_json(j.at("params"));
  m.ae.encoder_depth = j.at("encoder_depth").get<std::size_t>();
  if (m.ae.encoder_depth == 0 || m.ae.encoder_depth >= m.ae.params.depth()) {
    throw std::runtime_error("model checkpoint: invalid encoder depth");
  }
  m.centres = tensor_from_json(j.at("centres"));
  m.fairoids = tensor_from_json(j.at("fairoids"));
  m.cfg = TrainConfig::from_json(j.at("config"));
  m.num_groups = j.at("num_groups").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.norm = NormStats::from_json(j.at("normalizer"));
  m.feature_names = j.value("feature_names", std::vector<std::string>{});
  m.group_levels = j.value("group_levels", std::vector<std::string>{});
  m.label_levels = j.value("label_levels", std::vector<std::string>{});
  for (const auto& h : j.at("history")) {
    EpochRecord r;
    r.epoch = h.at("epoch").get<std::size_t>();
    r.l_cl = h.at("L_cl").get<double>();
    r.l_fr = h.at("L_fr").get<double>();
    r.l_total = h.at("L").get<double>();
    r.acc = opt_from_json(h, "acc");
    r.nmi = opt_from_json(h, "nmi");
    r.fwd_mean = h.at("fwd_mean").get<double>();
    r.fwd_max = h.at("fwd_max").get<double>();
    r.balance = opt_from_json(h, "balance");
    r.changed_fraction = h.at("changed_fraction").get<double>();
    m.history.push_back(r);
  }
  if (m.centres.cols() != m.ae.latent_dim()) throw std::runtime_error("model checkpoint: centroid width mismatch");
  return m;
}

void save_model(const std::filesystem::path& path, const TrainedModel& m) { write_json_file(path, m.to_json()); }

TrainedModel load_model(const std::filesystem::path& path) { return TrainedModel::from_json(read_json_file(path)); }

Tensor initial_centroids(const Tensor& z, const TrainConfig& cfg) {
  const Rng base = Rng(cfg.seed).substream("kmeans");
  Tensor best;
  double best_distortion = 0.0;
  for (std::size_t r = 0; r < cfg.kmeans_restarts; ++r) {
    Rng rng = base.substream(r);
    auto fit = lloyd(z, kmeans_pp_init(z, cfg.k, rng), cfg.lloyd_iters, cfg.lloyd_tol);
    const double d = distortion(z, fit.centres, nearest_centre(z, fit.centres));
    if (r == 0 || d < best_distortion) {
      best = std::move(fit.centres);
      best_distortion = d;
    }
  }
  return best;
}

namespace {

struct Refresh {
  Tensor fairoids;
  Tensor p;
  Tensor psi;
  Tensor phi;
  Tensor q;
  std::vector<int> hard;
};

Refresh refresh_targets(const Dataset& ds, const Autoencoder& ae, const Tensor& centres, const TrainConfig& cfg) {
  Refresh r;
  const Tensor z = encode(ae, ds.features);
  r.fairoids = compute_fairoids(z, ds.groups, ds.num_groups);
  r.q = soft_assign(z, centres, cfg.dof);
  r.p = sharpen_target(r.q);
  r.hard = row_argmax(r.q);

  Tensor ref_centres = centres;
  if (cfg.refresh == RefreshMode::kStreaming) {
    // Average of per-batch least-squares estimates, weighted by target mass.
    const Eigen::Index k = centres.rows();
    Tensor sum = Tensor::Zero(k, centres.cols());
    RowVector weight = RowVector::Zero(k);
    for (Eigen::Index start = 0; start < z.rows(); start += static_cast<Eigen::Index>(cfg.batch)) {
      const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.batch), z.rows() - start);
      const Tensor pj = r.p.middleRows(start, len);
      const auto est = batch_centroids(pj, z.middleRows(start, len));
      const RowVector mass = pj.colwise().sum();
      for (Eigen::Index c = 0; c < k; ++c) {
        if (!est.present[static_cast<std::size_t>(c)]) continue;
        sum.row(c) += mass(c) * est.centres.row(c);
        weight(c) += mass(c);
      }
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (weight(c) > 0.0) ref_centres.row(c) = sum.row(c) / weight(c);
    }
  }
  r.phi = fair_assign(ref_centres, r.fairoids, cfg.dof);
  r.psi = smooth_target(r.phi, cfg.beta, cfg.epsilon);
  return r;
}

EpochRecord make_record(std::size_t epoch, const Dataset& ds, const Refresh& r, const Tensor& centres,
                        const TrainConfig& cfg, double changed) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.l_cl = kl_loss(r.p, r.q) / static_cast<double>(ds.size());
  rec.l_fr = kl_loss(r.psi, fair_assign(centres, r.fairoids, cfg.dof));
  rec.l_total = rec.l_cl + cfg.gamma * rec.l_fr;
  const auto m = evaluate_assignments(r.hard, ds, cfg.k);
  rec.acc = m.acc;
  rec.nmi = m.nmi;
  rec.fwd_mean = m.fwd_mean;
  rec.fwd_max = m.fwd_max;
  rec.balance = m.balance_min;
  rec.changed_fraction = changed;
  return rec;
}

}  // namespace

TrainedModel train(const Dataset& ds, const Autoencoder& ae, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.num_groups < 2) throw std::invalid_argument("train: T must be at least 2");
  if (cfg.k > ds.size()) {
    throw std::invalid_argument("train: K=" + std::to_string(cfg.k) + " exceeds N=" + std::to_string(ds.size()));
  }
  if (static_cast<Eigen::Index>(ds.dims()) != ae.input_dim()) {
    throw ShapeError("train: autoencoder expects " + std::to_string(ae.input_dim()) + " features, dataset has " +
                     std::to_string(ds.dims()));
  }

  TrainedModel model;
  model.ae = ae;
  model.cfg = cfg;
  model.num_groups = ds.num_groups;
  model.feature_names = ds.feature_names;
  model.group_levels = ds.group_levels;
  model.label_levels = ds.label_levels;
  model.centres = initial_centroids(encode(ae, ds.features), cfg);

  Sgd net_opt({cfg.lr, cfg.momentum});
  Sgd centre_opt({cfg.lr, cfg.momentum});
  Rng shuffle_rng = Rng(cfg.seed).substream("shuffle");
  const auto n = ds.size();
  std::vector<std::size_t> order(n);
  std::vector<int> prev_hard;

  for (std::size_t epoch = 0;; ++epoch) {
    const Refresh r = refresh_targets(ds, model.ae, model.centres, cfg);
    model.fairoids = r.fairoids;

    double changed = 1.0;
    if (!prev_hard.empty()) {
      std::size_t diff = 0;
      for (std::size_t i = 0; i < n; ++i) diff += r.hard[i] != prev_hard[i];
      changed = static_cast<double>(diff) / static_cast<double>(n);
    }
    model.history.push_back(make_record(epoch, ds, r, model.centres, cfg, changed));
    if (!prev_hard.empty() && changed < cfg.convergence_tol) {
      model.converged = true;
      break;
    }
    if (epoch >= cfg.max_epochs) break;
    prev_hard = r.hard;

    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch, ++batch_no) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(cfg.batch, n - start));
      const Tensor xb = take_rows(ds.features, rows);
      const Tensor pb = take_rows(r.p, rows);
      auto g = objective_with_grad(model.ae, model.centres, model.fairoids, xb, pb, r.psi, cfg);
      if (!std::isfinite(g.terms.total)) {
        throw TrainingDivergence("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_no));
      }
      net_opt.step(model.ae.params, g.net_grads);
      centre_opt.step(model.centres, g.centre_grad);
    }
  }
  return model;
}

std::vector<int> predict(const TrainedModel& model, const Tensor& x) {
  if (x.cols() != model.ae.input_dim()) {
    throw ShapeError("predict: model expects " + std::to_string(model.ae.input_dim()) + " features, got " +
                     std::to_string(x.cols()));
  }
  return row_argmax(soft_assign(encode(model.ae, x), model.centres, model.cfg.dof));
}

}  // namespace fairclust
