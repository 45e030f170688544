#pragma once

// One-bit Gaussian likelihood primitives: the Gaussian tail Q, its logarithm,
// the ratio eta = Q'/Q and its derivative, plus the negative log-likelihood of
// a one-bit observation vector and its gradient.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lordnet/errors.hpp"

namespace lordnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Above this argument eta and log Q come from the continued fraction for
// the Mills ratio instead of erfc.
inline constexpr double kMillsSwitch = 8.0;

inline void require_finite(double u, const char* fn) {
  if (!std::isfinite(u)) throw DomainError(std::string(fn) + ": argument is not finite");
}

inline double normal_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

// Backward evaluation of K(u) = u + 1/(u + 2/(u + 3/(u + ...))), the
// reciprocal of the Mills ratio Q(u)/pdf(u). Returns {K, tail} where tail
// is the continued fraction started at the second partial numerator, i.e.
// K = u + 1/tail. Valid for u >= kMillsSwitch.
inline std::pair<double, double> mills_reciprocal(double u) {
  // 24 terms give ~1e-22 relative error at u = 8; 8 suffice beyond u = 20.
  const int depth = u > 20.0 ? 8 : 24;
  double t = u;
  for (int k = depth; k >= 2; --k) t = u + k / t;
  return {u + 1.0 / t, t};
}

}  // namespace detail

/// Standard Gaussian tail probability P(Z >= u).
inline double q_tail(double u) {
  detail::require_finite(u, "q_tail");
  return 0.5 * std::erfc(u * detail::kInvSqrt2);
}

/// ln Q(u), finite for every finite u (no underflow for large positive u).
inline double log_q_tail(double u) {
  detail::require_finite(u, "log_q_tail");
  if (u < 0.0) return std::log1p(-0.5 * std::erfc(-u * detail::kInvSqrt2));
  if (u <= 30.0) return std::log(0.5 * std::erfc(u * detail::kInvSqrt2));
  const auto [k, tail] = detail::mills_reciprocal(u);
  (void)tail;
  return -0.5 * u * u - detail::kLogSqrt2Pi - std::log(k);
}

/// eta(u) = Q'(u)/Q(u) = -pdf(u)/Q(u). Strictly negative: when pdf(u)
/// underflows (u below about -38.5) the magnitude is floored at the smallest
/// subnormal so the sign is kept.
inline double eta(double u) {
  detail::require_finite(u, "eta");
  if (u >= detail::kMillsSwitch) return -detail::mills_reciprocal(u).first;
  const double value = detail::normal_pdf(u) / (0.5 * std::erfc(u * detail::kInvSqrt2));
  return -std::max(value, std::numeric_limits<double>::denorm_min());
}

/// Derivative of eta: eta'(u) = -u eta(u) - eta(u)^2.
inline double eta_prime(double u) {
  detail::require_finite(u, "eta_prime");
  if (u >= detail::kMillsSwitch) {
    // -eta (u + eta) with u + eta = -1/tail, free of the cancellation in u - K.
    const auto [k, tail] = detail::mills_reciprocal(u);
    return -k / tail;
  }
  const double e = eta(u);
  return -e * (u + e);
}

/// Finite ordered alphabet of real symbols.
class Constellation {
 public:
  Constellation() : points_{-1.0, 1.0} {}

  explicit Constellation(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw ValidationError("constellation needs at least 2 points");
    for (double p : points_)
      if (!std::isfinite(p)) throw ValidationError("constellation point is not finite");
    for (std::size_t i = 1; i < points_.size(); ++i)
      if (!(points_[i - 1] < points_[i]))
        throw ValidationError("constellation points must be distinct and sorted ascending");
  }

  static Constellation bpsk() { return Constellation(); }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool is_bpsk() const noexcept { return points_.size() == 2 && points_[0] == -1.0 && points_[1] == 1.0; }

  bool contains(double s) const { return std::binary_search(points_.begin(), points_.end(), s); }

  /// Nearest point; ties go to the larger point (BPSK: sign with sign(0) = +1).
  double nearest(double x) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), x);
    if (it == points_.begin()) return *it;
    if (it == points_.end()) return points_.back();
    const double hi = *it, lo = *(it - 1);
    return (x - lo < hi - x) ? lo : hi;
  }

  friend bool operator==(const Constellation&, const Constellation&) = default;

 private:
  std::vector<double> points_;
};

/// Vector of one-bit ADC outputs; every entry is exactly -1 or +1.
class OneBitObservation {
 public:
  OneBitObservation() = default;

  explicit OneBitObservation(Vector signs) : r_(std::move(signs)) {
    for (Eigen::Index i = 0; i < r_.size(); ++i)
      if (r_[i] != 1.0 && r_[i] != -1.0)
        throw ValidationError("one-bit entry " + std::to_string(i) + " is " + std::to_string(r_[i]) +
                              ", expected -1 or +1");
  }

  const Vector& values() const noexcept { return r_; }
  Eigen::Index size() const noexcept { return r_.size(); }
  double operator[](Eigen::Index i) const { return r_[i]; }

 private:
  Vector r_;
};

/// System parameters {H, C = Diag(sigma^2)} and the quantizer thresholds b.
struct SystemParams {
  Matrix H;
  Vector sigma;
  Vector b;

  Eigen::Index m() const noexcept { return H.rows(); }
  Eigen::Index n() const noexcept { return H.cols(); }

  void validate() const {
    if (H.rows() < 1 || H.cols() < 1) throw ValidationError("H must be non-empty");
    if (sigma.size() != H.rows()) throw ValidationError("sigma length does not match H rows");
    if (b.size() != H.rows()) throw ValidationError("b length does not match H rows");
    if (!H.allFinite()) throw ValidationError("H has non-finite entries");
    if (!b.allFinite()) throw ValidationError("b has non-finite entries");
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
        throw ValidationError("sigma[" + std::to_string(i) + "] must be finite and > 0");
  }

  /// Diagonal of the semi-whitened one-bit matrix: r_i / sigma_i.
  Vector whitened_signs(const OneBitObservation& r) const { return r.values().cwiseQuotient(sigma); }

  friend bool operator==(const SystemParams& a, const SystemParams& c) {
    return a.H.rows() == c.H.rows() && a.H.cols() == c.H.cols() && a.H == c.H && a.sigma.size() == c.sigma.size() &&
           a.sigma == c.sigma && a.b.size() == c.b.size() && a.b == c.b;
  }
};

namespace detail {

inline void check_likelihood_shapes(Eigen::Index x_size, const OneBitObservation& r, const SystemParams& theta) {
  require_shape(theta.sigma.size() == theta.m() && theta.b.size() == theta.m(),
                "SystemParams: sigma/b length must equal rows of H");
  require_shape(r.size() == theta.m(), "observation length " + std::to_string(r.size()) +
                                           " does not match m = " + std::to_string(theta.m()));
  require_shape(x_size == theta.n(),
                "x length " + std::to_string(x_size) + " does not match n = " + std::to_string(theta.n()));
}

}  // namespace detail

/// Negative log-likelihood  -sum_i ln Q((r_i / sigma_i)(b_i - h_i^T x)).
inline double nll(const Eigen::Ref<const Vector>& x, const OneBitObservation& r, const SystemParams& theta) {
  detail::check_likelihood_shapes(x.size(), r, theta);
  const Vector u = theta.whitened_signs(r).cwiseProduct(theta.b - theta.H * x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) total -= log_q_tail(u[i]);
  return total;
}

/// Gradient of nll: H^T R~ eta(R~ (b - H x)).
inline Vector nll_grad(const Eigen::Ref<const Vector>& x, const OneBitObservation& r, const SystemParams& theta) {
  detail::check_likelihood_shapes(x.size(), r, theta);
  const Vector rho = theta.whitened_signs(r);
  const Vector u = rho.cwiseProduct(theta.b - theta.H * x);
  Vector v(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) v[i] = rho[i] * eta(u[i]);
  return theta.H.transpose() * v;
}

}  // namespace lordnet
