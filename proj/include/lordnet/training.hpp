#pragma once

// Training pipelines for the unfolded detector.
//
// Stage 1 learns surrogate system parameters with the fixed-step policy
// G_i = delta I, minimizing the mean squared distance between network output
// and labels. Stage 2 freezes them and learns per-layer preconditioners
// G_i = W_i W_i^T on the same loss. One-stage (joint) and alternating
// schedules are provided for comparison.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lordnet/adam.hpp"
#include "lordnet/channel.hpp"
#include "lordnet/metrics.hpp"
#include "lordnet/parallel.hpp"
#include "lordnet/rng.hpp"
#include "lordnet/unfolded.hpp"

namespace lordnet {

enum class TrainMode { TwoStage, OneStage, Alternating };

inline const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::TwoStage: return "two-stage";
    case TrainMode::OneStage: return "one-stage";
    case TrainMode::Alternating: return "alternating";
  }
  return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "two-stage" || s == "two_stage") return TrainMode::TwoStage;
  if (s == "one-stage" || s == "one_stage") return TrainMode::OneStage;
  if (s == "alternating") return TrainMode::Alternating;
  throw ConfigError("unknown training mode '" + s + "'");
}

struct TrainConfig {
  std::size_t L = 30;
  std::size_t stage2_layers = 0;  // 0: same as L
  double delta = 0.01;
  double lr_stage1 = 1e-3;
  double lr_stage2 = 1e-4;
  long epochs_stage1 = 400;
  long epochs_stage2 = 400;
  long batch_size = 512;         // Stage 2, one-stage and the phi half of alternating
  long stage1_batch_size = 0;    // 0: full batch up to full_batch_limit samples, else batch_size
  bool train_h = true;
  bool train_c = false;
  bool full_preconditioner = false;
  TrainMode mode = TrainMode::TwoStage;
  std::uint64_t seed = 0;
  double h_init_std = 0.1;
  long full_batch_limit = 2048;  // Stage 1 uses the whole set up to this size
  AdamHyper adam;
  unsigned threads = 1;

  std::size_t stage2_L() const { return stage2_layers ? stage2_layers : L; }

  void validate() const {
    if (L < 1) throw ConfigError("L must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(lr_stage1 >= 0.0) || !(lr_stage2 >= 0.0)) throw ConfigError("learning rates must be >= 0");
    if (epochs_stage1 < 0 || epochs_stage2 < 0) throw ConfigError("epoch counts must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (stage1_batch_size < 0) throw ConfigError("stage-1 batch size must be >= 0");
    if (!(h_init_std > 0.0)) throw ConfigError("H init std must be > 0");
    if (mode != TrainMode::TwoStage && stage2_layers && stage2_layers != L)
      throw ConfigError("one-stage and alternating training need the same L in both problems");
  }
};

struct LogRecord {
  long epoch = 0;
  std::string stage;
  double loss_train = 0.0;
  std::optional<double> loss_heldout;
  std::optional<double> ber_heldout;
  double wall_ms = 0.0;
};

struct TrainOptions {
  const Dataset* heldout = nullptr;
  long eval_every = 10;  // held-out evaluation period (the last epoch of a stage is always evaluated)
  std::function<void(const LogRecord&)> on_record;
};

struct TrainResult {
  SystemParams theta;
  UnfoldedWeights phi;
  std::vector<LogRecord> log;
};

// ---------------------------------------------------------------------------
// Losses and batch gradients
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::size_t kChunk = 16;

inline std::vector<std::size_t> all_indices(Eigen::Index count) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

inline void check_dataset_matches(const Dataset& ds, const SystemParams& theta) {
  if (ds.meta.m != theta.m() || ds.meta.n != theta.n())
    throw ShapeError("dataset dimensions (" + std::to_string(ds.meta.m) + "x" + std::to_string(ds.meta.n) +
                     ") do not match the model (" + std::to_string(theta.m()) + "x" + std::to_string(theta.n()) + ")");
}

}  // namespace detail

/// Mean over `indices` of ||G_phi(0; theta, r_p) - x_p||^2. Samples are
/// summed in fixed chunks so the value does not depend on `threads`.
inline double unfolded_loss(const SystemParams& theta, const UnfoldedWeights& phi, const Dataset& ds,
                            std::span<const std::size_t> indices, unsigned threads = 1) {
  detail::check_dataset_matches(ds, theta);
  if (indices.empty()) return 0.0;
  const std::size_t chunks = (indices.size() + detail::kChunk - 1) / detail::kChunk;
  std::vector<double> partial(chunks, 0.0);
  const Vector x0 = Vector::Zero(theta.n());
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(indices.size(), (c + 1) * detail::kChunk);
    for (std::size_t k = c * detail::kChunk; k < end; ++k) {
      const auto p = static_cast<Eigen::Index>(indices[k]);
      partial[c] += (forward_output(x0, theta, ds.observation(p), phi) - ds.symbols(p)).squaredNorm();
    }
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total / static_cast<double>(indices.size());
}

inline double unfolded_loss(const SystemParams& theta, const UnfoldedWeights& phi, const Dataset& ds,
                            unsigned threads = 1) {
  const auto idx = detail::all_indices(ds.size());
  return unfolded_loss(theta, phi, ds, idx, threads);
}

/// Stage-1 loss: the unfolded loss under the fixed policy G_i = delta I.
inline double stage1_loss(const SystemParams& theta, const Dataset& ds, std::size_t L, double delta,
                          unsigned threads = 1) {
  return unfolded_loss(theta, UnfoldedWeights::basic_policy(L, delta), ds, threads);
}

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// Unfolded loss over `indices` and its gradients with respect to H, sigma
/// (when requested) and every preconditioner factor.
inline LossAndGradients unfolded_loss_and_gradients(const SystemParams& theta, const UnfoldedWeights& phi,
                                                    const Dataset& ds, std::span<const std::size_t> indices,
                                                    BackwardOptions options = {}, unsigned threads = 1) {
  detail::check_dataset_matches(ds, theta);
  LossAndGradients out{0.0, Gradients::zeros_like(theta, phi)};
  if (indices.empty()) return out;
  const std::size_t chunks = (indices.size() + detail::kChunk - 1) / detail::kChunk;
  std::vector<LossAndGradients> partial(chunks);
  const Vector x0 = Vector::Zero(theta.n());
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto& acc = partial[c];
    acc.grads = Gradients::zeros_like(theta, phi);
    const std::size_t end = std::min(indices.size(), (c + 1) * detail::kChunk);
    for (std::size_t k = c * detail::kChunk; k < end; ++k) {
      const auto p = static_cast<Eigen::Index>(indices[k]);
      const auto r = ds.observation(p);
      const auto fw = forward(x0, theta, r, phi);
      const Vector diff = fw.x_out - ds.symbols(p);
      acc.loss += diff.squaredNorm();
      backward_accumulate(fw.trace, theta, r, phi, 2.0 * diff, acc.grads, options);
    }
  });
  for (const auto& part : partial) {
    out.loss += part.loss;
    out.grads += part.grads;
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  out.loss *= scale;
  out.grads.dH *= scale;
  out.grads.dsigma *= scale;
  out.grads.dx0 *= scale;
  for (auto& d : out.grads.dw) d *= scale;
  for (auto& d : out.grads.dW) d *= scale;
  return out;
}

/// Bit error rate of detect() over a labeled set.
inline ErrorCount evaluate_errors(const SystemParams& theta, const UnfoldedWeights& phi, const Dataset& ds,
                                  unsigned threads = 1) {
  detail::check_dataset_matches(ds, theta);
  RowMatrix estimates(ds.size(), ds.meta.n);
  parallel_for(static_cast<std::size_t>(ds.size()), threads, [&](std::size_t idx) {
    const auto p = static_cast<Eigen::Index>(idx);
    estimates.row(p) = detect(ds.observation(p), theta, phi, ds.constellation).transpose();
  });
  return count_errors(estimates, ds.x_true);
}

/// True when every epoch-to-epoch change of the `window`-epoch moving
/// average is <= tolerance (relative to the previous average).
inline bool moving_average_non_increasing(std::span<const double> losses, std::size_t window = 50,
                                          double tolerance = 1e-12) {
  if (losses.size() <= window) return true;
  double sum = 0.0;
  for (std::size_t k = 0; k < window; ++k) sum += losses[k];
  double prev = sum / static_cast<double>(window);
  for (std::size_t k = window; k < losses.size(); ++k) {
    sum += losses[k] - losses[k - window];
    const double avg = sum / static_cast<double>(window);
    if (avg > prev + tolerance * std::abs(prev)) return false;
    prev = avg;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Training drivers
// ---------------------------------------------------------------------------

namespace detail {

inline std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> as_cspan(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<const double> as_cspan(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Mutable training state shared by all schedules.
class Trainer {
 public:
  Trainer(const Dataset& ds, const TrainConfig& config, const TrainOptions& options)
      : ds_(ds), config_(config), options_(options), start_(std::chrono::steady_clock::now()) {
    config_.validate();
    ds_.validate();
    theta_adam_.hyper = config_.adam;
    phi_adam_.hyper = config_.adam;
  }

  /// Surrogate parameters at their initial point: H ~ N(0, h_init_std^2),
  /// sigma from the dataset SNR, thresholds from the dataset.
  SystemParams initial_theta() const {
    const Eigen::Index m = ds_.meta.m, n = ds_.meta.n;
    CounterRng rng(config_.seed, rng_streams::kInit);
    Matrix H(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) H(i, j) = config_.h_init_std * rng.normal();
    return SystemParams{std::move(H), Vector::Constant(m, sigma_for_snr(ds_.meta.snr_db, n)), ds_.b};
  }

  UnfoldedWeights initial_phi(std::size_t layers) const {
    return config_.full_preconditioner ? UnfoldedWeights::full_from_delta(layers, ds_.meta.n, config_.delta)
                                       : UnfoldedWeights::diagonal_from_delta(layers, ds_.meta.n, config_.delta);
  }

  void set_theta(SystemParams theta) {
    theta_ = std::move(theta);
    log_sigma_ = theta_.sigma.array().log().matrix();
  }
  void set_phi(UnfoldedWeights phi) { phi_ = std::move(phi); }

  const SystemParams& theta() const { return theta_; }
  const UnfoldedWeights& phi() const { return phi_; }
  std::vector<LogRecord>& log() { return log_; }

  enum class Update { Theta, Phi, Both };

  /// One epoch of Adam on the unfolded loss under `policy`. Returns the
  /// mean pre-step batch loss.
  double run_epoch(long global_epoch, Update update, bool basic_policy, bool stage1_batching, const char* stage) {
    const auto B = ds_.size();
    const bool full_batch = stage1_batching && config_.stage1_batch_size == 0 && B <= config_.full_batch_limit;
    const long batch_size =
        stage1_batching && config_.stage1_batch_size > 0 ? config_.stage1_batch_size : config_.batch_size;
    std::vector<std::size_t> order;
    if (full_batch) {
      order = all_indices(B);
    } else {
      CounterRng rng(mix_seed(config_.seed, static_cast<std::uint64_t>(global_epoch)), rng_streams::kShuffle);
      order = rng.permutation(static_cast<std::size_t>(B));
    }
    const std::size_t batch = full_batch ? order.size() : static_cast<std::size_t>(batch_size);
    const UnfoldedWeights basic = UnfoldedWeights::basic_policy(config_.L, config_.delta);
    const UnfoldedWeights& policy = basic_policy ? basic : phi_;
    BackwardOptions backward_options{.sigma = config_.train_c && update != Update::Phi};

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      LossAndGradients lg;
      try {
        lg = unfolded_loss_and_gradients(theta_, policy, ds_, idx, backward_options, config_.threads);
      } catch (const DomainError& e) {
        throw TrainingError(std::string(stage) + ": iterate became non-finite at epoch " +
                            std::to_string(global_epoch) + " (" + e.what() + ")");
      }
      if (!std::isfinite(lg.loss) || !lg.grads.dH.allFinite())
        throw TrainingError(std::string(stage) + ": loss became non-finite at epoch " + std::to_string(global_epoch) +
                            " (loss = " + std::to_string(lg.loss) + ")");
      loss_sum += lg.loss;
      ++batches;
      if (update != Update::Phi) step_theta(lg.grads);
      if (update != Update::Theta) step_phi(lg.grads);
    }
    return loss_sum / static_cast<double>(batches);
  }

  void record(long epoch, const char* stage, double loss_train, bool evaluate, bool basic_policy) {
    LogRecord rec;
    rec.epoch = epoch;
    rec.stage = stage;
    rec.loss_train = loss_train;
    if (evaluate && options_.heldout) {
      const UnfoldedWeights policy =
          basic_policy ? UnfoldedWeights::basic_policy(config_.L, config_.delta) : phi_;
      rec.loss_heldout = unfolded_loss(theta_, policy, *options_.heldout, config_.threads);
      rec.ber_heldout = evaluate_errors(theta_, policy, *options_.heldout, config_.threads).rate();
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    if (options_.on_record) options_.on_record(rec);
    log_.push_back(std::move(rec));
  }

  bool should_evaluate(long epoch_in_stage, long stage_epochs) const {
    if (!options_.heldout) return false;
    if (epoch_in_stage == stage_epochs) return true;
    return options_.eval_every > 0 && epoch_in_stage % options_.eval_every == 0;
  }

  const TrainConfig& config() const { return config_; }

 private:
  void step_theta(const Gradients& g) {
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    Vector dlog_sigma;
    if (config_.train_h) {
      params.push_back(as_span(theta_.H));
      grads.push_back(as_cspan(g.dH));
    }
    if (config_.train_c) {
      dlog_sigma = g.dsigma.cwiseProduct(theta_.sigma);
      params.push_back(as_span(log_sigma_));
      grads.push_back(as_cspan(dlog_sigma));
    }
    if (params.empty()) return;
    adam_step(params, grads, theta_adam_, config_.lr_stage1);
    if (config_.train_c) theta_.sigma = log_sigma_.array().exp().matrix();
  }

  void step_phi(const Gradients& g) {
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    for (std::size_t i = 0; i < phi_.L(); ++i) {
      auto& layer = phi_.layers[i];
      if (layer.kind() == Preconditioner::Kind::Diagonal) {
        params.push_back(as_span(layer.w()));
        grads.push_back(as_cspan(g.dw[i]));
      } else if (layer.kind() == Preconditioner::Kind::Full) {
        params.push_back(as_span(layer.W()));
        grads.push_back(as_cspan(g.dW[i]));
      }
    }
    if (params.empty()) return;
    adam_step(params, grads, phi_adam_, config_.lr_stage2);
  }

  const Dataset& ds_;
  TrainConfig config_;
  TrainOptions options_;
  std::chrono::steady_clock::time_point start_;
  SystemParams theta_;
  Vector log_sigma_;
  UnfoldedWeights phi_;
  AdamState theta_adam_;
  AdamState phi_adam_;
  std::vector<LogRecord> log_;
};

}  // namespace detail

/// Stage 1 from an explicit starting point.
inline TrainResult train_stage1_from(const Dataset& ds, const TrainConfig& config, SystemParams theta0,
                                     const TrainOptions& options = {}) {
  detail::Trainer trainer(ds, config, options);
  detail::check_dataset_matches(ds, theta0);
  trainer.set_theta(std::move(theta0));
  for (long e = 1; e <= config.epochs_stage1; ++e) {
    const double loss = trainer.run_epoch(e, detail::Trainer::Update::Theta, true, true, "stage1");
    trainer.record(e, "stage1", loss, trainer.should_evaluate(e, config.epochs_stage1), true);
  }
  return TrainResult{trainer.theta(), UnfoldedWeights::basic_policy(config.L, config.delta), std::move(trainer.log())};
}

/// Stage 1: learns the surrogate parameters with G_i = delta I pinned.
inline TrainResult train_stage1(const Dataset& ds, const TrainConfig& config, const TrainOptions& options = {}) {
  detail::Trainer init(ds, config, options);
  return train_stage1_from(ds, config, init.initial_theta(), options);
}

/// Stage 2: learns the preconditioner factors with theta_star frozen. The
/// factors start at sqrt(delta), reproducing the Stage-1 policy exactly.
inline TrainResult train_stage2(const Dataset& ds, const SystemParams& theta_star, const TrainConfig& config,
                                const TrainOptions& options = {}, long epoch_offset = 0) {
  detail::Trainer trainer(ds, config, options);
  detail::check_dataset_matches(ds, theta_star);
  trainer.set_theta(theta_star);
  trainer.set_phi(trainer.initial_phi(config.stage2_L()));
  for (long e = 1; e <= config.epochs_stage2; ++e) {
    const double loss =
        trainer.run_epoch(epoch_offset + e, detail::Trainer::Update::Phi, false, false, "stage2");
    trainer.record(epoch_offset + e, "stage2", loss, trainer.should_evaluate(e, config.epochs_stage2), false);
  }
  return TrainResult{trainer.theta(), trainer.phi(), std::move(trainer.log())};
}

/// Algorithm: Stage 1 then Stage 2; the log covers both stages.
inline TrainResult train_two_stage(const Dataset& ds, const TrainConfig& config, const TrainOptions& options = {}) {
  auto first = train_stage1(ds, config, options);
  auto second = train_stage2(ds, first.theta, config, options, config.epochs_stage1);
  first.log.insert(first.log.end(), second.log.begin(), second.log.end());
  return TrainResult{std::move(first.theta), std::move(second.phi), std::move(first.log)};
}

/// Joint Adam over theta and phi on the unfolded loss, epochs_stage1 +
/// epochs_stage2 epochs of mini-batches. Theta uses lr_stage1, phi lr_stage2.
inline TrainResult train_one_stage(const Dataset& ds, const TrainConfig& config, const TrainOptions& options = {}) {
  detail::Trainer trainer(ds, config, options);
  trainer.set_theta(trainer.initial_theta());
  trainer.set_phi(trainer.initial_phi(config.L));
  const long total = config.epochs_stage1 + config.epochs_stage2;
  for (long e = 1; e <= total; ++e) {
    const double loss = trainer.run_epoch(e, detail::Trainer::Update::Both, false, false, "joint");
    trainer.record(e, "joint", loss, trainer.should_evaluate(e, total), false);
  }
  return TrainResult{trainer.theta(), trainer.phi(), std::move(trainer.log())};
}

/// Alternates the two problems epoch by epoch: odd epochs (1-based) update
/// theta on the Stage-1 loss, even epochs update phi on the Stage-2 loss.
inline TrainResult train_alternating(const Dataset& ds, const TrainConfig& config, const TrainOptions& options = {}) {
  detail::Trainer trainer(ds, config, options);
  trainer.set_theta(trainer.initial_theta());
  trainer.set_phi(trainer.initial_phi(config.L));
  const long total = config.epochs_stage1 + config.epochs_stage2;
  for (long e = 1; e <= total; ++e) {
    const bool theta_epoch = (e % 2) == 1;
    const char* stage = theta_epoch ? "alt-theta" : "alt-phi";
    const double loss = theta_epoch ? trainer.run_epoch(e, detail::Trainer::Update::Theta, true, true, stage)
                                    : trainer.run_epoch(e, detail::Trainer::Update::Phi, false, false, stage);
    trainer.record(e, stage, loss, trainer.should_evaluate(e, total), false);
  }
  return TrainResult{trainer.theta(), trainer.phi(), std::move(trainer.log())};
}

/// Dispatches on config.mode.
inline TrainResult train(const Dataset& ds, const TrainConfig& config, const TrainOptions& options = {}) {
  switch (config.mode) {
    case TrainMode::TwoStage: return train_two_stage(ds, config, options);
    case TrainMode::OneStage: return train_one_stage(ds, config, options);
    case TrainMode::Alternating: return train_alternating(ds, config, options);
  }
  throw ConfigError("unknown training mode");
}

// ---------------------------------------------------------------------------
// Unfolded benchmarks
// ---------------------------------------------------------------------------

/// Benchmark 1 starts where the unfolded detector starts (A_i = delta H0^T
/// C^{-1/2}, B_i = C^{-1/2} H0 with H0 ~ N(0, h_init_std^2)); Benchmark 2
/// draws every factor from N(0, h_init_std^2).
inline VariantWeights initial_variant(const Dataset& ds, const TrainConfig& config, VariantWeights::Kind kind,
                                      Eigen::Index rank = 1) {
  const Eigen::Index m = ds.meta.m, n = ds.meta.n;
  CounterRng rng(config.seed, rng_streams::kInit);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = config.h_init_std * rng.normal();
    return M;
  };
  if (kind == VariantWeights::Kind::Full) {
    const double inv_sigma = 1.0 / sigma_for_snr(ds.meta.snr_db, n);
    const Matrix H0 = draw(m, n);
    return VariantWeights::benchmark1(
        std::vector<VariantLayer>(config.L, VariantLayer{config.delta * inv_sigma * H0.transpose(), inv_sigma * H0}));
  }
  if (rank < 1 || rank >= std::min(m, n)) throw ConfigError("benchmark-2 rank must satisfy 1 <= r < min(m, n)");
  std::vector<LowRankLayer> layers;
  for (std::size_t i = 0; i < config.L; ++i) {
    LowRankLayer l;
    l.P = draw(n, rank);
    l.Q = draw(rank, m);
    l.R = draw(m, rank);
    l.S = draw(rank, n);
    layers.push_back(std::move(l));
  }
  return VariantWeights::benchmark2(std::move(layers));
}

struct VariantTrainResult {
  VariantWeights weights;
  std::vector<LogRecord> log;
};

inline double variant_loss(const VariantWeights& vw, const Dataset& ds) {
  double total = 0.0;
  const Vector x0 = Vector::Zero(ds.meta.n);
  for (Eigen::Index p = 0; p < ds.size(); ++p)
    total += (variant_forward(x0, ds.observation(p), vw, ds.b) - ds.symbols(p)).squaredNorm();
  return total / static_cast<double>(ds.size());
}

inline ErrorCount variant_errors(const VariantWeights& vw, const Dataset& ds, unsigned threads = 1) {
  RowMatrix estimates(ds.size(), ds.meta.n);
  const Vector x0 = Vector::Zero(ds.meta.n);
  parallel_for(static_cast<std::size_t>(ds.size()), threads, [&](std::size_t idx) {
    const auto p = static_cast<Eigen::Index>(idx);
    estimates.row(p) = project(variant_forward(x0, ds.observation(p), vw, ds.b), ds.constellation).transpose();
  });
  return count_errors(estimates, ds.x_true);
}

/// End-to-end Adam on the unfolded loss for either benchmark, with the same
/// settings for both: lr_stage1, batch_size mini-batches and
/// epochs_stage1 + epochs_stage2 epochs. Stage label "variant".
inline VariantTrainResult train_variant(const Dataset& ds, const TrainConfig& config, VariantWeights vw,
                                        const TrainOptions& options = {}) {
  config.validate();
  ds.validate();
  if (vw.m != ds.meta.m || vw.n != ds.meta.n) throw ShapeError("variant dimensions do not match the dataset");
  const auto start_time = std::chrono::steady_clock::now();
  const bool full = vw.kind == VariantWeights::Kind::Full;
  AdamState adam;
  adam.hyper = config.adam;
  VariantTrainResult out;
  const long total = config.epochs_stage1 + config.epochs_stage2;
  const Vector x0 = Vector::Zero(ds.meta.n);
  for (long e = 1; e <= total; ++e) {
    CounterRng rng(mix_seed(config.seed, static_cast<std::uint64_t>(e)), rng_streams::kShuffle);
    const auto order = rng.permutation(static_cast<std::size_t>(ds.size()));
    const auto batch = static_cast<std::size_t>(config.batch_size);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t s = 0; s < order.size(); s += batch) {
      const std::size_t end = std::min(order.size(), s + batch);
      VariantGradients acc;
      double loss = 0.0;
      for (std::size_t k = s; k < end; ++k) {
        const auto p = static_cast<Eigen::Index>(order[k]);
        const auto r = ds.observation(p);
        VariantTrace trace;
        Vector diff;
        try {
          diff = variant_forward(x0, r, vw, ds.b, &trace) - ds.symbols(p);
        } catch (const DomainError& err) {
          throw TrainingError("variant: iterate became non-finite at epoch " + std::to_string(e) + " (" + err.what() +
                              ")");
        }
        loss += diff.squaredNorm();
        auto g = variant_backward(trace, r, vw, 2.0 * diff);
        if (k == s) {
          acc = std::move(g);
          continue;
        }
        for (std::size_t i = 0; i < vw.L(); ++i) {
          if (full) {
            acc.full[i].A += g.full[i].A;
            acc.full[i].B += g.full[i].B;
          } else {
            acc.low_rank[i].P += g.low_rank[i].P;
            acc.low_rank[i].Q += g.low_rank[i].Q;
            acc.low_rank[i].R += g.low_rank[i].R;
            acc.low_rank[i].S += g.low_rank[i].S;
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(end - s);
      loss *= scale;
      if (!std::isfinite(loss))
        throw TrainingError("variant: loss became non-finite at epoch " + std::to_string(e));
      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> grads;
      for (std::size_t i = 0; i < vw.L(); ++i) {
        auto add = [&](Matrix& param, Matrix& grad) {
          grad *= scale;
          params.push_back(detail::as_span(param));
          grads.push_back(detail::as_cspan(grad));
        };
        if (full) {
          add(vw.full[i].A, acc.full[i].A);
          add(vw.full[i].B, acc.full[i].B);
        } else {
          add(vw.low_rank[i].P, acc.low_rank[i].P);
          add(vw.low_rank[i].Q, acc.low_rank[i].Q);
          add(vw.low_rank[i].R, acc.low_rank[i].R);
          add(vw.low_rank[i].S, acc.low_rank[i].S);
        }
      }
      adam_step(params, grads, adam, config.lr_stage1);
      loss_sum += loss;
      ++batches;
    }
    LogRecord rec;
    rec.epoch = e;
    rec.stage = "variant";
    rec.loss_train = loss_sum / static_cast<double>(batches);
    const bool evaluate = options.heldout && (e == total || (options.eval_every > 0 && e % options.eval_every == 0));
    if (evaluate) {
      rec.loss_heldout = variant_loss(vw, *options.heldout);
      rec.ber_heldout = variant_errors(vw, *options.heldout, config.threads).rate();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_time).count();
    if (options.on_record) options.on_record(rec);
    out.log.push_back(std::move(rec));
  }
  out.weights = std::move(vw);
  return out;
}

}  // namespace lordnet
