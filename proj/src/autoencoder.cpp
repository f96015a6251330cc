#include "fairclust/autoencoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fairclust/optimizer.hpp"
#include "fairclust/rng.hpp"

namespace fairclust {

void AeConfig::validate() const {
  if (dims.size() < 2) throw std::invalid_argument("autoencoder: dims needs at least input and bottleneck widths");
  for (const auto w : dims) {
    if (w <= 0) throw std::invalid_argument("autoencoder: layer widths must be positive");
  }
  if (!(lr_pretrain > 0.0)) throw std::invalid_argument("autoencoder: lr_pretrain must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("autoencoder: momentum must be in [0, 1)");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("autoencoder: dropout must be in [0, 1)");
  if (batch == 0) throw std::invalid_argument("autoencoder: batch must be positive");
}

Autoencoder make_autoencoder(const std::vector<Eigen::Index>& dims, const Rng& rng, double init_std) {
  if (dims.size() < 2) throw std::invalid_argument("autoencoder: dims needs at least input and bottleneck widths");
  const std::size_t depth = dims.size() - 1;
  Autoencoder ae;
  ae.encoder_depth = depth;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto act = l + 1 == depth ? Activation::kIdentity : Activation::kRelu;
    const std::string name = "enc" + std::to_string(l);
    Rng layer_rng = rng.substream(name);
    ae.params.push_back(make_layer(name, dims[l], dims[l + 1], act, layer_rng, init_std));
  }
  for (std::size_t l = depth; l-- > 0;) {
    const auto act = l == 0 ? Activation::kIdentity : Activation::kRelu;
    const std::string name = "dec" + std::to_string(l);
    Rng layer_rng = rng.substream(name);
    ae.params.push_back(make_layer(name, dims[l + 1], dims[l], act, layer_rng, init_std));
  }
  return ae;
}

Autoencoder initial_autoencoder(const AeConfig& cfg) {
  cfg.validate();
  return make_autoencoder(cfg.dims, Rng(cfg.seed).substream("init"), cfg.init_std);
}

nlohmann::json TrainLogEntry::to_json() const {
  return nlohmann::json{{"stage", stage}, {"layer", layer}, {"epoch", epoch}, {"loss", loss}, {"lr", lr}};
}

double mse(const Tensor& pred, const Tensor& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse: " + shape_str(pred) + " vs " + shape_str(target));
  }
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

namespace {

struct EpochContext {
  std::size_t batch;
  double dropout;
  Rng* shuffle_rng;
  Rng* dropout_rng;
};

// One pass of minibatch SGD on `net` mapping x to target; returns the mean of
// the minibatch losses (weighted by batch size).
double run_epoch(ParamSet& net, const Tensor& x, const Tensor& target, Sgd& opt, const EpochContext& ctx) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ctx.shuffle_rng->shuffle(std::span<std::size_t>(order));

  double total = 0.0;
  ForwardOptions fo{ctx.dropout, ctx.dropout_rng};
  for (std::size_t start = 0; start < n; start += ctx.batch) {
    const std::size_t stop = std::min(n, start + ctx.batch);
    const std::span<const std::size_t> rows(order.data() + start, stop - start);
    const Tensor xb = take_rows(x, rows);
    const Tensor yb = take_rows(target, rows);
    auto fr = forward(net.layers(), xb, fo);
    const double loss = mse(fr.output, yb);
    if (!std::isfinite(loss)) return loss;
    total += loss * static_cast<double>(rows.size());
    const Tensor upstream = (2.0 / static_cast<double>(fr.output.size())) * (fr.output - yb);
    auto br = backward(net.layers(), fr.tape, upstream);
    bool finite = true;
    for (const auto& g : br.grads.layers()) finite = finite && g.weight.allFinite() && g.bias.allFinite();
    if (!finite) return std::numeric_limits<double>::quiet_NaN();
    opt.step(net, br.grads);
  }
  return total / static_cast<double>(n);
}

}  // namespace

Autoencoder pretrain_layerwise(const Tensor& x, const AeConfig& cfg, TrainLog* log) {
  cfg.validate();
  if (x.cols() != cfg.dims.front()) {
    throw std::invalid_argument("autoencoder: dims start at " + std::to_string(cfg.dims.front()) +
                                " but the data has " + std::to_string(x.cols()) + " columns");
  }
  Autoencoder ae = initial_autoencoder(cfg);
  const std::size_t depth = ae.encoder_depth;
  const Rng root(cfg.seed);

  Tensor h = x;  // clean input of the current layer pair
  for (std::size_t l = 0; l < depth; ++l) {
    AffineLayer& enc = ae.params[l];
    AffineLayer& dec = ae.params[2 * depth - 1 - l];
    ParamSet pair({enc, dec});
    Sgd opt({cfg.lr_pretrain, cfg.momentum});
    Rng shuffle_rng = root.substream("shuffle").substream(l);
    Rng dropout_rng = root.substream("dropout").substream(l);
    const EpochContext ctx{cfg.batch, cfg.dropout, &shuffle_rng, &dropout_rng};

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 0; epoch < cfg.layerwise_epochs; ++epoch) {
      const ParamSet snapshot = pair;
      const Sgd opt_snapshot = opt;
      double loss = run_epoch(pair, h, h, opt, ctx);
      if (!std::isfinite(loss) || loss > 2.0 * prev) {
        pair = snapshot;
        opt = opt_snapshot;
        opt.set_lr(opt.lr() * 0.5);
        loss = run_epoch(pair, h, h, opt, ctx);
        if (!std::isfinite(loss)) {
          throw TrainingDivergence("layer-wise pretraining diverged at layer " + std::to_string(l) + ", epoch " +
                                   std::to_string(epoch));
        }
      }
      prev = loss;
      if (log) log->push_back({"layerwise", static_cast<int>(l), epoch, loss, opt.lr()});
    }
    enc = pair[0];
    dec = pair[1];
    h = infer(std::span<const AffineLayer>(&enc, 1), h);
  }
  return ae;
}

Autoencoder finetune_global(const Tensor& x, Autoencoder ae, const FinetuneOptions& opts, TrainLog* log) {
  if (x.cols() != ae.input_dim()) {
    throw ShapeError("finetune: network expects " + std::to_string(ae.input_dim()) + " inputs, data has " +
                     std::to_string(x.cols()));
  }
  if (opts.epochs == 0) return ae;
  if (opts.batch == 0) throw std::invalid_argument("finetune: batch must be positive");

  Sgd opt({opts.lr, opts.momentum});
  Rng shuffle_rng = Rng(opts.seed).substream("finetune-shuffle");
  const EpochContext ctx{opts.batch, 0.0, &shuffle_rng, nullptr};

  const double initial = reconstruction_mse(ae, x);
  if (!std::isfinite(initial)) throw TrainingDivergence("finetune: initial reconstruction loss is not finite");
  double prev = initial;
  double best = initial;
  ParamSet best_params = ae.params;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const ParamSet snapshot = ae.params;
    const Sgd opt_snapshot = opt;
    run_epoch(ae.params, x, x, opt, ctx);
    double loss = reconstruction_mse(ae, x);
    if (!std::isfinite(loss) || loss > 2.0 * prev) {
      ae.params = snapshot;
      opt = opt_snapshot;
      opt.set_lr(opt.lr() * 0.5);
      run_epoch(ae.params, x, x, opt, ctx);
      loss = reconstruction_mse(ae, x);
      if (!std::isfinite(loss)) {
        throw TrainingDivergence("global fine-tuning diverged at epoch " + std::to_string(epoch));
      }
    }
    prev = loss;
    if (loss < best) {
      best = loss;
      best_params = ae.params;
    }
    if (log) log->push_back({"global", -1, epoch, loss, opt.lr()});
  }
  if (prev > initial) ae.params = best_params;
  return ae;
}

Autoencoder pretrain(const Tensor& x, const AeConfig& cfg, TrainLog* log) {
  Autoencoder ae = pretrain_layerwise(x, cfg, log);
  FinetuneOptions fo;
  fo.epochs = cfg.global_epochs;
  fo.lr = cfg.lr_pretrain;
  fo.momentum = cfg.momentum;
  fo.batch = cfg.batch;
  fo.seed = cfg.seed;
  return finetune_global(x, std::move(ae), fo, log);
}

Tensor encode(const Autoencoder& ae, const Tensor& x) { return infer(ae.encoder(), x); }

Tensor decode(const Autoencoder& ae, const Tensor& z) { return infer(ae.decoder(), z); }

double reconstruction_mse(const Autoencoder& ae, const Tensor& x) { return mse(infer(ae.params.layers(), x), x); }

}  // namespace fairclust
