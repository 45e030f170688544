#pragma once

// Monte-Carlo BER evaluation: sweeps over SNR, training-set size and layer
// index, with JSON and CSV report output.

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lordnet/baselines.hpp"
#include "lordnet/channel.hpp"
#include "lordnet/metrics.hpp"
#include "lordnet/text_io.hpp"
#include "lordnet/training.hpp"

namespace lordnet {

enum class BerAxis { SnrDb, TrainSize, Layer };

inline const char* to_string(BerAxis axis) {
  switch (axis) {
    case BerAxis::SnrDb: return "snr_db";
    case BerAxis::TrainSize: return "train_size";
    case BerAxis::Layer: return "layer";
  }
  return "?";
}

struct BerPoint {
  double axis_value = 0.0;
  double ber = 0.0;
  std::int64_t num_bits = 0;
  std::int64_t num_errors = 0;
};

struct BerContext {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::size_t L = 0;
  std::string mode;
  std::uint64_t seed = 0;
  std::string detector_name;
};

struct BerReport {
  BerAxis axis = BerAxis::SnrDb;
  std::vector<BerPoint> points;
  BerContext context;
  text_io::json config;  // resolved experiment configuration

  void add_point(double axis_value, const ErrorCount& count) {
    points.push_back(BerPoint{axis_value, count.rate(), count.bits, count.errors});
  }

  ErrorCount totals() const {
    ErrorCount c;
    for (const auto& p : points) c += ErrorCount{p.num_errors, p.num_bits};
    return c;
  }

  text_io::json to_json() const {
    text_io::json pts = text_io::json::array();
    for (const auto& p : points)
      pts.push_back({{"axis_value", p.axis_value}, {"ber", p.ber}, {"num_bits", p.num_bits}, {"num_errors", p.num_errors}});
    text_io::json out = {
        {"format", "lordnet-ber-report"},
        {"format_version", 1},
        {"axis", to_string(axis)},
        {"context",
         {{"m", context.m},
          {"n", context.n},
          {"L", context.L},
          {"mode", context.mode},
          {"seed", context.seed},
          {"detector_name", context.detector_name}}},
        {"points", pts},
    };
    if (!config.is_null()) out["config"] = config;
    return out;
  }

  /// Columns: axis_value, ber, num_errors, num_bits, detector, seed.
  std::string to_csv() const {
    std::ostringstream os;
    os << "axis_value,ber,num_errors,num_bits,detector,seed\n";
    for (const auto& p : points)
      os << text_io::format_double(p.axis_value) << ',' << text_io::format_double(p.ber) << ',' << p.num_errors << ','
         << p.num_bits << ',' << context.detector_name << ',' << context.seed << '\n';
    return os.str();
  }
};

inline void write_report(const BerReport& report, const std::string& prefix) {
  {
    auto out = text_io::open_write(prefix + ".json");
    out << report.to_json().dump(2) << '\n';
  }
  auto out = text_io::open_write(prefix + ".csv");
  out << report.to_csv();
}

enum class DetectorKind { LordNet, Nml, Relaxed, BruteForce };

inline const char* to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::LordNet: return "lordnet";
    case DetectorKind::Nml: return "nml";
    case DetectorKind::Relaxed: return "relaxed";
    case DetectorKind::BruteForce: return "bruteforce";
  }
  return "?";
}

inline DetectorKind detector_kind_from_string(const std::string& s) {
  if (s == "lordnet") return DetectorKind::LordNet;
  if (s == "nml") return DetectorKind::Nml;
  if (s == "relaxed") return DetectorKind::Relaxed;
  if (s == "bruteforce") return DetectorKind::BruteForce;
  throw ConfigError("unknown detector '" + s + "'");
}

/// One experiment: a channel (Rayleigh from the seed, or imported), a
/// detector and how to train or tune it.
struct ExperimentConfig {
  Eigen::Index m = 32;
  Eigen::Index n = 8;
  DetectorKind detector = DetectorKind::LordNet;
  TrainConfig train;
  long train_size = 512;
  long test_size = 2048;
  long validation_size = 512;  // step search set for the coherent baseline
  int nml_iters = kNmlIterations;
  std::vector<double> step_grid = default_step_grid();
  int relaxed_iters = kNmlIterations;
  double relaxed_step = 0.01;
  std::optional<Matrix> channel;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  Matrix channel_matrix() const {
    if (channel) return *channel;
    return sample_rayleigh_channel(m, n, mix_seed(seed, 0));
  }

  text_io::json to_json() const {
    return {{"m", m},
            {"n", n},
            {"detector", to_string(detector)},
            {"train_size", train_size},
            {"test_size", test_size},
            {"validation_size", validation_size},
            {"nml_iters", nml_iters},
            {"step_grid", step_grid},
            {"relaxed_iters", relaxed_iters},
            {"relaxed_step", relaxed_step},
            {"channel_kind", channel ? "imported" : "rayleigh"},
            {"seed", seed},
            {"train",
             {{"L", train.L},
              {"stage2_layers", train.stage2_L()},
              {"delta", train.delta},
              {"lr_stage1", train.lr_stage1},
              {"lr_stage2", train.lr_stage2},
              {"epochs_stage1", train.epochs_stage1},
              {"epochs_stage2", train.epochs_stage2},
              {"batch_size", train.batch_size},
              {"stage1_batch_size", train.stage1_batch_size},
              {"train_h", train.train_h},
              {"train_c", train.train_c},
              {"mode", to_string(train.mode)}}}};
  }
};

/// Per-trial data sets, all drawn from the same channel.
struct TrialData {
  SystemParams theta_true;
  Dataset train;
  Dataset test;
  Dataset validation;
};

inline TrialData make_trial(const ExperimentConfig& cfg, const Matrix& H, double snr_db, std::uint64_t trial_seed,
                            long train_size) {
  const auto kind = cfg.channel ? ChannelKind::Imported : ChannelKind::Rayleigh;
  TrialData t{make_system(H, snr_db), {}, {}, {}};
  const GenerationInfo info{snr_db, kind};
  const auto bpsk = Constellation::bpsk();
  t.train = generate_dataset(t.theta_true, bpsk, train_size, mix_seed(trial_seed, 1), info, cfg.threads);
  t.test = generate_dataset(t.theta_true, bpsk, cfg.test_size, mix_seed(trial_seed, 2), info, cfg.threads);
  if (cfg.detector == DetectorKind::Nml)
    t.validation = generate_dataset(t.theta_true, bpsk, cfg.validation_size, mix_seed(trial_seed, 3), info, cfg.threads);
  return t;
}

/// Trains or tunes the configured detector on `train` / `validation` and
/// counts its errors on `test`.
inline ErrorCount run_detector(const ExperimentConfig& cfg, const SystemParams& theta_true, const Dataset& train,
                               const Dataset& test, const Dataset& validation, std::uint64_t train_seed) {
  switch (cfg.detector) {
    case DetectorKind::LordNet: {
      TrainConfig tc = cfg.train;
      tc.seed = train_seed;
      tc.threads = cfg.threads;
      const auto model = lordnet::train(train, tc);
      return evaluate_errors(model.theta, model.phi, test, cfg.threads);
    }
    case DetectorKind::Nml: {
      const double step = grid_search_step(theta_true, validation, cfg.step_grid, cfg.nml_iters, cfg.threads);
      return relaxed_errors(theta_true, test, cfg.nml_iters, step, cfg.threads);
    }
    case DetectorKind::Relaxed: return relaxed_errors(theta_true, test, cfg.relaxed_iters, cfg.relaxed_step, cfg.threads);
    case DetectorKind::BruteForce: {
      RowMatrix est(test.size(), test.meta.n);
      parallel_for(static_cast<std::size_t>(test.size()), cfg.threads, [&](std::size_t idx) {
        const auto p = static_cast<Eigen::Index>(idx);
        est.row(p) = brute_force_mle(test.observation(p), theta_true, test.constellation).transpose();
      });
      return count_errors(est, test.x_true);
    }
  }
  throw ConfigError("unknown detector");
}

inline BerContext make_context(const ExperimentConfig& cfg) {
  const bool learned = cfg.detector == DetectorKind::LordNet;
  return BerContext{cfg.m, cfg.n, learned ? cfg.train.L : std::size_t{0},
                    learned ? to_string(cfg.train.mode) : std::string("coherent"), cfg.seed, to_string(cfg.detector)};
}

/// BER versus SNR. One channel per run; every SNR point trains (when the
/// detector is learned) on data generated at that SNR. Trials redraw
/// symbols and noise only.
inline BerReport sweep_snr(const ExperimentConfig& cfg, const std::vector<double>& snr_list, int trials) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (snr_list.empty()) throw ConfigError("SNR list is empty");
  const Matrix H = cfg.channel_matrix();
  BerReport report;
  report.axis = BerAxis::SnrDb;
  report.context = make_context(cfg);
  report.config = cfg.to_json();
  for (std::size_t k = 0; k < snr_list.size(); ++k) {
    ErrorCount total;
    const std::uint64_t snr_seed = mix_seed(cfg.seed, 1 + k);
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed = mix_seed(snr_seed, static_cast<std::uint64_t>(t));
      const auto data = make_trial(cfg, H, snr_list[k], trial_seed, cfg.train_size);
      total += run_detector(cfg, data.theta_true, data.train, data.test, data.validation, mix_seed(trial_seed, 4));
    }
    report.add_point(snr_list[k], total);
  }
  return report;
}

/// BER versus training-set size at one SNR. Each trial draws one test set
/// and one training pool of max(B) samples; size B trains on its first B.
inline BerReport sweep_train_size(const ExperimentConfig& cfg, const std::vector<long>& sizes, double snr_db,
                                  int trials) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (sizes.empty()) throw ConfigError("training size list is empty");
  std::set<long> seen;
  for (long b : sizes) {
    if (b < 1) throw ConfigError("training sizes must be >= 1");
    if (!seen.insert(b).second) throw ConfigError("duplicate training size " + std::to_string(b));
  }
  const long pool = *std::max_element(sizes.begin(), sizes.end());
  const Matrix H = cfg.channel_matrix();
  std::vector<ErrorCount> totals(sizes.size());
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(t));
    const auto data = make_trial(cfg, H, snr_db, trial_seed, pool);
    for (std::size_t k = 0; k < sizes.size(); ++k)
      totals[k] += run_detector(cfg, data.theta_true, data.train.head(sizes[k]), data.test, data.validation,
                                mix_seed(trial_seed, 4));
  }
  BerReport report;
  report.axis = BerAxis::TrainSize;
  report.context = make_context(cfg);
  report.config = cfg.to_json();
  report.config["snr_db"] = snr_db;
  for (std::size_t k = 0; k < sizes.size(); ++k) report.add_point(static_cast<double>(sizes[k]), totals[k]);
  return report;
}

/// BER of the projected output of every layer 0..L (layer 0 is x_0 = 0).
inline BerReport per_layer_ber(const SystemParams& theta, const UnfoldedWeights& phi, const Dataset& test,
                               unsigned threads = 1) {
  detail::check_dataset_matches(test, theta);
  const auto L = phi.L();
  const Eigen::Index n = theta.n();
  std::vector<RowMatrix> estimates(L + 1, RowMatrix(test.size(), n));
  parallel_for(static_cast<std::size_t>(test.size()), threads, [&](std::size_t idx) {
    const auto p = static_cast<Eigen::Index>(idx);
    const auto fw = forward(Vector::Zero(n), theta, test.observation(p), phi);
    for (std::size_t i = 0; i <= L; ++i)
      estimates[i].row(p) =
          project(fw.trace.x_layers.row(static_cast<Eigen::Index>(i)).transpose(), test.constellation).transpose();
  });
  BerReport report;
  report.axis = BerAxis::Layer;
  report.context = BerContext{theta.m(), n, L, "trained", test.meta.seed, "lordnet"};
  for (std::size_t i = 0; i <= L; ++i) report.add_point(static_cast<double>(i), count_errors(estimates[i], test.x_true));
  return report;
}

}  // namespace lordnet
