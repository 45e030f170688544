#pragma once

// Model-based reference detectors that know the true system parameters.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "lordnet/channel.hpp"
#include "lordnet/metrics.hpp"
#include "lordnet/parallel.hpp"
#include "lordnet/unfolded.hpp"

namespace lordnet {

inline constexpr int kNmlIterations = 700;

/// Default step grid for the coherent baseline.
inline const std::vector<double>& default_step_grid() {
  static const std::vector<double> grid{0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
  return grid;
}

struct RelaxedEstimate {
  Vector x_bar;    // unprojected iterate
  Vector symbols;  // its projection
};

/// `iters` plain gradient steps of size `step` on the negative log-likelihood
/// from x = 0, then projection. Bitwise identical to forward() under the
/// fixed policy G_i = step I with `iters` layers.
inline RelaxedEstimate relaxed_mle_detect(const OneBitObservation& r, const SystemParams& theta, int iters, double step,
                                          const Constellation& constellation = Constellation::bpsk()) {
  if (iters < 0) throw ConfigError("iteration count must be >= 0");
  RelaxedEstimate out;
  try {
    out.x_bar = forward_output(Vector::Zero(theta.n()), theta, r,
                               UnfoldedWeights::basic_policy(static_cast<std::size_t>(iters), step));
  } catch (const DomainError&) {
    throw NumericalError("relaxed MLE iterate became non-finite (step " + std::to_string(step) + ")");
  }
  if (!out.x_bar.allFinite()) throw NumericalError("relaxed MLE iterate became non-finite");
  out.symbols = project(out.x_bar, constellation);
  return out;
}

/// Coherent near-ML baseline: the first-order relaxed-ML iteration with
/// true parameters, a fixed iteration budget and a given step.
inline Vector nml_detect(const OneBitObservation& r, const SystemParams& theta_true, const Constellation& constellation,
                         int iters, double step) {
  return relaxed_mle_detect(r, theta_true, iters, step, constellation).symbols;
}

inline ErrorCount relaxed_errors(const SystemParams& theta, const Dataset& ds, int iters, double step,
                                 unsigned threads = 1) {
  RowMatrix estimates(ds.size(), ds.meta.n);
  parallel_for(static_cast<std::size_t>(ds.size()), threads, [&](std::size_t idx) {
    const auto p = static_cast<Eigen::Index>(idx);
    estimates.row(p) = nml_detect(ds.observation(p), theta, ds.constellation, iters, step).transpose();
  });
  return count_errors(estimates, ds.x_true);
}

/// Grid point with the lowest validation BER; ties go to the smaller step.
/// Steps whose iteration diverges on any validation sample are skipped.
inline double grid_search_step(const SystemParams& theta_true, const Dataset& validation, std::span<const double> grid,
                               int iters = kNmlIterations, unsigned threads = 1) {
  if (grid.empty()) throw ConfigError("step grid is empty");
  double best_step = 0.0;
  std::int64_t best_errors = std::numeric_limits<std::int64_t>::max();
  for (double step : grid) {
    if (!(step > 0.0)) throw ConfigError("grid steps must be > 0");
    std::int64_t errors;
    try {
      errors = relaxed_errors(theta_true, validation, iters, step, threads).errors;
    } catch (const NumericalError&) {
      continue;
    }
    if (errors < best_errors || (errors == best_errors && step < best_step)) {
      best_errors = errors;
      best_step = step;
    }
  }
  if (best_errors == std::numeric_limits<std::int64_t>::max())
    throw NumericalError("every step in the grid diverged on the validation set");
  return best_step;
}

inline constexpr std::uint64_t kBruteForceLimit = std::uint64_t{1} << 20;

/// Exact argmin of nll over every candidate in M^n, enumerated in
/// lexicographic order (first coordinate most significant); the first
/// minimizer wins ties.
inline Vector brute_force_mle(const OneBitObservation& r, const SystemParams& theta,
                              const Constellation& constellation = Constellation::bpsk()) {
  const auto n = theta.n();
  const auto& points = constellation.points();
  const std::uint64_t base = points.size();
  std::uint64_t total = 1;
  for (Eigen::Index j = 0; j < n; ++j) {
    total *= base;
    if (total > kBruteForceLimit)
      throw CapacityError("brute-force search over " + std::to_string(base) + "^" + std::to_string(n) +
                          " candidates exceeds the 2^20 guard");
  }
  std::vector<std::size_t> digits(static_cast<std::size_t>(n), 0);
  Vector candidate(n);
  Vector best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::uint64_t c = 0; c < total; ++c) {
    for (Eigen::Index j = 0; j < n; ++j) candidate[j] = points[digits[static_cast<std::size_t>(j)]];
    const double value = nll(candidate, r, theta);
    if (value < best_value || best.size() == 0) {
      best_value = value;
      best = candidate;
    }
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      auto& d = digits[static_cast<std::size_t>(j)];
      if (++d < base) break;
      d = 0;
    }
  }
  return best;
}

}  // namespace lordnet
