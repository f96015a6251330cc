#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairclust/autoencoder.hpp"
#include "fairclust/dataset.hpp"
#include "fairclust/tensor.hpp"

namespace fairclust {

/// How the per-epoch fairness targets are formed. kInCore uses the current
/// (trainable) centroids; kStreaming re-estimates centroids batch by batch
/// with batch_centroids() and uses their average.
enum class RefreshMode { kInCore, kStreaming };

const char* to_string(RefreshMode m);
RefreshMode refresh_mode_from_string(const std::string& s);

struct TrainConfig {
  std::size_t k = 2;
  double gamma = 0.0;             // fairness weight
  double beta = 1000.0;           // smoothing root, >= 2
  double epsilon = 1e-9;          // smoothing offset
  double dof = 1.0;               // Student's t degrees of freedom
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 256;
  std::size_t max_epochs = 100;
  double convergence_tol = 0.001;  // fraction of hard assignments changed
  double recon_weight = 0.0;       // weight of the reconstruction term
  std::size_t kmeans_restarts = 10;  // best-distortion of this many seeded runs
  std::size_t lloyd_iters = 20;
  double lloyd_tol = 1e-4;
  RefreshMode refresh = RefreshMode::kInCore;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Student's t similarity between each row of `points` and each row of
/// `centres`, normalised per row: (1 + |x - c|^2 / dof)^(-(dof + 1) / 2).
Tensor student_t_assign(const Tensor& points, const Tensor& centres, double dof);

/// Soft cluster assignment Q (N x K).
Tensor soft_assign(const Tensor& z, const Tensor& centres, double dof);

/// Sharpened target: p_ik proportional to q_ik^2 / f_k with f_k = sum_i q_ik.
Tensor sharpen_target(const Tensor& q);

/// Mean latent vector per protected group (T x d). Every group must be non-empty.
Tensor compute_fairoids(const Tensor& z, const std::vector<int>& groups, int num_groups);

/// Fairness assignment Phi (K x T) between centroids and fairoids.
Tensor fair_assign(const Tensor& centres, const Tensor& fairoids, double dof);

/// Smoothed target: psi_kt proportional to (phi_kt + eps)^(1/beta) / f_t with
/// f_t = sum_k phi_kt. Large beta flattens every row toward the
/// inverse-frequency distribution.
Tensor smooth_target(const Tensor& phi, double beta, double epsilon);

/// sum target * log(target / model), with 0 log 0 = 0.
double kl_loss(const Tensor& target, const Tensor& model);

struct BatchCentroids {
  Tensor centres;             // K x d
  std::vector<bool> present;  // cluster has non-zero target mass in the batch
  bool ridge_used = false;
};

/// Least-squares centroid estimate from a batch: solves
/// (P^T P + ridge I) M = P^T Z. A singular system at ridge 0 is retried with
/// ridge 1e-6.
BatchCentroids batch_centroids(const Tensor& p, const Tensor& z, double ridge = 0.0);

struct ObjectiveTerms {
  double cluster = 0.0;   // KL(P_j || Q_j) / n
  double fairness = 0.0;  // KL(Psi || Phi)
  double recon = 0.0;     // MSE(decode(Z_j), X_j)
  double total = 0.0;     // cluster + gamma fairness + recon_weight recon
};

struct ObjectiveGrad {
  ObjectiveTerms terms;
  ParamSet net_grads;  // full autoencoder shape; decoder part is zero when recon_weight == 0
  Tensor centre_grad;
};

/// Minibatch objective and its exact gradient with respect to the network
/// parameters and the centroids. Fairoids and both targets are constants.
ObjectiveGrad objective_with_grad(const Autoencoder& ae, const Tensor& centres, const Tensor& fairoids,
                                  const Tensor& x_batch, const Tensor& p_batch, const Tensor& psi,
                                  const TrainConfig& cfg);

ObjectiveTerms objective_value(const Autoencoder& ae, const Tensor& centres, const Tensor& fairoids,
                               const Tensor& x_batch, const Tensor& p_batch, const Tensor& psi,
                               const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double l_cl = 0.0;
  double l_fr = 0.0;
  double l_total = 0.0;
  std::optional<double> acc;
  std::optional<double> nmi;
  double fwd_mean = 0.0;
  double fwd_max = 0.0;
  std::optional<double> balance;
  double changed_fraction = 1.0;

  [[nodiscard]] nlohmann::json to_json() const;
};

struct TrainedModel {
  Autoencoder ae;
  Tensor centres;   // K x d
  Tensor fairoids;  // T x d, from the last refresh
  TrainConfig cfg;
  std::vector<EpochRecord> history;
  bool converged = false;
  int num_groups = 0;
  NormStats norm;  // input transform fitted at training time
  std::vector<std::string> feature_names;
  std::vector<std::string> group_levels;
  std::vector<std::string> label_levels;

  [[nodiscard]] nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

inline constexpr int kModelVersion = 1;

void save_model(const std::filesystem::path& path, const TrainedModel& m);
TrainedModel load_model(const std::filesystem::path& path);

/// Initial centroids: k-means++ seeding refined by Lloyd iterations on the
/// pretrained embedding, keeping the lowest-distortion restart.
Tensor initial_centroids(const Tensor& z, const TrainConfig& cfg);

/// Joint training of encoder and centroids (and decoder when recon_weight > 0).
/// Each epoch refreshes fairoids and targets from a full encode, stops when
/// fewer than convergence_tol of the hard assignments changed, then takes one
/// SGD pass over shuffled minibatches.
TrainedModel train(const Dataset& ds, const Autoencoder& ae, const TrainConfig& cfg);

/// Hard assignments: argmax of the soft assignment; ties to the lowest index.
std::vector<int> predict(const TrainedModel& model, const Tensor& x);

}  // namespace fairclust
