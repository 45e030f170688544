#pragma once

// The unfolded detector: L preconditioned gradient steps on the one-bit
// negative log-likelihood, x_{i+1} = x_i - G_i H^T R~ eta(R~ (b - H x_i)),
// its hand-derived reverse pass, the output projection, and the two
// over-parameterized unfolded benchmarks.

#include <cmath>
#include <string>
#include <vector>

#include "lordnet/likelihood.hpp"

namespace lordnet {

/// Per-layer preconditioner G = W W^T, stored through its factor.
///  - Scalar:   G = scale * I exactly (the fixed-step policy)
///  - Diagonal: W = Diag(w), G = Diag(w^2)
///  - Full:     W is n x n, G = W W^T
class Preconditioner {
 public:
  enum class Kind { Scalar, Diagonal, Full };

  static Preconditioner scalar(double scale) {
    Preconditioner p;
    p.kind_ = Kind::Scalar;
    p.scale_ = scale;
    return p;
  }
  static Preconditioner diagonal(Vector w) {
    Preconditioner p;
    p.kind_ = Kind::Diagonal;
    p.w_ = std::move(w);
    return p;
  }
  static Preconditioner full(Matrix W) {
    if (W.rows() != W.cols()) throw ShapeError("full preconditioner factor must be square");
    Preconditioner p;
    p.kind_ = Kind::Full;
    p.W_ = std::move(W);
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  const Vector& w() const noexcept { return w_; }
  Vector& w() noexcept { return w_; }
  const Matrix& W() const noexcept { return W_; }
  Matrix& W() noexcept { return W_; }

  /// G z.
  Vector apply(const Vector& z) const {
    switch (kind_) {
      case Kind::Scalar: return scale_ * z;
      case Kind::Diagonal:
        detail::require_shape(w_.size() == z.size(), "preconditioner size does not match n");
        return w_.array().square().matrix().cwiseProduct(z);
      case Kind::Full:
        detail::require_shape(W_.cols() == z.size(), "preconditioner size does not match n");
        return W_ * (W_.transpose() * z);
    }
    return z;
  }

  /// Dense G (n x n).
  Matrix dense(Eigen::Index n) const {
    switch (kind_) {
      case Kind::Scalar: return scale_ * Matrix::Identity(n, n);
      case Kind::Diagonal: return w_.array().square().matrix().asDiagonal();
      case Kind::Full: return W_ * W_.transpose();
    }
    return {};
  }

  /// Trainable entries (the fixed scalar policy has none).
  Eigen::Index parameter_count() const noexcept {
    switch (kind_) {
      case Kind::Scalar: return 0;
      case Kind::Diagonal: return w_.size();
      case Kind::Full: return W_.size();
    }
    return 0;
  }

  void check_size(Eigen::Index n) const {
    if (kind_ == Kind::Diagonal && w_.size() != n) throw ShapeError("diagonal preconditioner length does not match n");
    if (kind_ == Kind::Full && W_.rows() != n) throw ShapeError("full preconditioner size does not match n");
  }

 private:
  Kind kind_ = Kind::Scalar;
  double scale_ = 0.0;
  Vector w_;
  Matrix W_;
};

/// The weights phi = {G_0, ..., G_{L-1}}.
struct UnfoldedWeights {
  std::vector<Preconditioner> layers;

  std::size_t L() const noexcept { return layers.size(); }

  /// G_i = delta I exactly, for every layer.
  static UnfoldedWeights basic_policy(std::size_t L, double delta) {
    return UnfoldedWeights{std::vector<Preconditioner>(L, Preconditioner::scalar(delta))};
  }

  /// Trainable diagonal factors initialized to sqrt(delta), so G_i = delta I.
  static UnfoldedWeights diagonal_from_delta(std::size_t L, Eigen::Index n, double delta) {
    return UnfoldedWeights{std::vector<Preconditioner>(L, Preconditioner::diagonal(Vector::Constant(n, std::sqrt(delta))))};
  }

  /// Trainable full factors initialized to sqrt(delta) I.
  static UnfoldedWeights full_from_delta(std::size_t L, Eigen::Index n, double delta) {
    return UnfoldedWeights{
        std::vector<Preconditioner>(L, Preconditioner::full(std::sqrt(delta) * Matrix::Identity(n, n)))};
  }

  Eigen::Index parameter_count() const {
    Eigen::Index total = 0;
    for (const auto& g : layers) total += g.parameter_count();
    return total;
  }

  /// Copy truncated to the first `count` layers.
  UnfoldedWeights truncated(std::size_t count) const {
    return UnfoldedWeights{std::vector<Preconditioner>(layers.begin(), layers.begin() + static_cast<long>(count))};
  }
};

/// Layer inputs/outputs and the per-layer likelihood quantities of one pass.
struct ForwardTrace {
  RowMatrix x_layers;    // (L + 1) x n, row 0 is x_0
  RowMatrix u_layers;    // L x m, R~ (b - H x_i)
  RowMatrix eta_layers;  // L x m, eta(u_i)

  Eigen::Index L() const noexcept { return u_layers.rows(); }
  Vector x(Eigen::Index i) const { return x_layers.row(i).transpose(); }
};

struct LayerResult {
  Vector x_next;
  Vector u;
  Vector eta;
};

namespace detail {

inline void check_forward_shapes(Eigen::Index x_size, const SystemParams& theta, const OneBitObservation& r) {
  check_likelihood_shapes(x_size, r, theta);
}

inline LayerResult layer_step(const Vector& x, const SystemParams& theta, const Vector& rho, const Preconditioner& G) {
  LayerResult out;
  out.u = rho.cwiseProduct(theta.b - theta.H * x);
  out.eta.resize(out.u.size());
  for (Eigen::Index k = 0; k < out.u.size(); ++k) out.eta[k] = lordnet::eta(out.u[k]);
  const Vector z = theta.H.transpose() * rho.cwiseProduct(out.eta);
  out.x_next = x - G.apply(z);
  return out;
}

}  // namespace detail

/// One layer: x_next = x_i - G_i z_i with z_i the likelihood gradient at x_i.
inline LayerResult layer_forward(const Vector& x, const SystemParams& theta, const OneBitObservation& r,
                                 const Preconditioner& G) {
  detail::check_forward_shapes(x.size(), theta, r);
  G.check_size(theta.n());
  return detail::layer_step(x, theta, theta.whitened_signs(r), G);
}

struct ForwardResult {
  Vector x_out;
  ForwardTrace trace;
};

/// Composition of the L layers of phi, starting from x0.
inline ForwardResult forward(const Vector& x0, const SystemParams& theta, const OneBitObservation& r,
                             const UnfoldedWeights& phi) {
  detail::check_forward_shapes(x0.size(), theta, r);
  const auto L = static_cast<Eigen::Index>(phi.L());
  const Eigen::Index m = theta.m(), n = theta.n();
  for (const auto& g : phi.layers) g.check_size(n);
  const Vector rho = theta.whitened_signs(r);
  ForwardResult res;
  res.trace.x_layers.resize(L + 1, n);
  res.trace.u_layers.resize(L, m);
  res.trace.eta_layers.resize(L, m);
  res.trace.x_layers.row(0) = x0.transpose();
  Vector x = x0;
  for (Eigen::Index i = 0; i < L; ++i) {
    auto step = detail::layer_step(x, theta, rho, phi.layers[static_cast<std::size_t>(i)]);
    res.trace.u_layers.row(i) = step.u.transpose();
    res.trace.eta_layers.row(i) = step.eta.transpose();
    x = std::move(step.x_next);
    res.trace.x_layers.row(i + 1) = x.transpose();
  }
  res.x_out = std::move(x);
  return res;
}

/// Network output without recording a trace.
inline Vector forward_output(const Vector& x0, const SystemParams& theta, const OneBitObservation& r,
                             const UnfoldedWeights& phi) {
  detail::check_forward_shapes(x0.size(), theta, r);
  for (const auto& g : phi.layers) g.check_size(theta.n());
  const Vector rho = theta.whitened_signs(r);
  Vector x = x0;
  for (const auto& g : phi.layers) x = detail::layer_step(x, theta, rho, g).x_next;
  return x;
}

/// Elementwise nearest constellation point (ties toward the larger point).
inline Vector project(const Eigen::Ref<const Vector>& x, const Constellation& constellation) {
  Vector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) out[j] = constellation.nearest(x[j]);
  return out;
}

/// Symbol estimate: project the network output once, starting from x0 = 0.
inline Vector detect(const OneBitObservation& r, const SystemParams& theta, const UnfoldedWeights& phi,
                     const Constellation& constellation) {
  return project(forward_output(Vector::Zero(theta.n()), theta, r, phi), constellation);
}

/// Reverse-mode derivatives of upstream^T x_L.
struct Gradients {
  Matrix dH;                    // m x n
  Vector dsigma;                // m, filled when requested
  std::vector<Vector> dw;       // per layer; Diagonal layers
  std::vector<Matrix> dW;       // per layer; Full layers
  Vector dx0;                   // n

  static Gradients zeros_like(const SystemParams& theta, const UnfoldedWeights& phi) {
    Gradients g;
    g.dH = Matrix::Zero(theta.m(), theta.n());
    g.dsigma = Vector::Zero(theta.m());
    g.dx0 = Vector::Zero(theta.n());
    g.dw.resize(phi.L());
    g.dW.resize(phi.L());
    for (std::size_t i = 0; i < phi.L(); ++i) {
      const auto& layer = phi.layers[i];
      if (layer.kind() == Preconditioner::Kind::Diagonal) g.dw[i] = Vector::Zero(layer.w().size());
      if (layer.kind() == Preconditioner::Kind::Full) g.dW[i] = Matrix::Zero(layer.W().rows(), layer.W().cols());
    }
    return g;
  }

  Gradients& operator+=(const Gradients& o) {
    dH += o.dH;
    dsigma += o.dsigma;
    dx0 += o.dx0;
    for (std::size_t i = 0; i < dw.size(); ++i) {
      if (dw[i].size()) dw[i] += o.dw[i];
      if (dW[i].size()) dW[i] += o.dW[i];
    }
    return *this;
  }
};

struct BackwardOptions {
  bool sigma = false;
};

/// Propagates `upstream` (d loss / d x_L) back through the recorded pass and
/// accumulates into `grads` (which must be shaped by Gradients::zeros_like).
inline void backward_accumulate(const ForwardTrace& trace, const SystemParams& theta, const OneBitObservation& r,
                                const UnfoldedWeights& phi, const Vector& upstream, Gradients& grads,
                                BackwardOptions options = {}) {
  const Eigen::Index m = theta.m(), n = theta.n();
  const auto L = static_cast<Eigen::Index>(phi.L());
  if (trace.L() != L || trace.x_layers.rows() != L + 1 || trace.x_layers.cols() != n || trace.u_layers.cols() != m ||
      trace.eta_layers.rows() != L || trace.eta_layers.cols() != m)
    throw ConsistencyError("trace does not match the network shape (L, m, n)");
  detail::require_shape(upstream.size() == n, "upstream length does not match n");
  detail::require_shape(r.size() == m, "observation length does not match m");

  const Vector rho = theta.whitened_signs(r);
  Vector g = upstream;  // d loss / d x_{i+1}
  Vector grho = Vector::Zero(m);
  for (Eigen::Index i = L - 1; i >= 0; --i) {
    const auto& layer = phi.layers[static_cast<std::size_t>(i)];
    const Vector x = trace.x_layers.row(i).transpose();
    const Vector u = trace.u_layers.row(i).transpose();
    const Vector e = trace.eta_layers.row(i).transpose();
    const Vector v = rho.cwiseProduct(e);
    const Vector z = theta.H.transpose() * v;

    switch (layer.kind()) {
      case Preconditioner::Kind::Scalar: break;
      case Preconditioner::Kind::Diagonal:
        grads.dw[static_cast<std::size_t>(i)].array() -= 2.0 * layer.w().array() * g.array() * z.array();
        break;
      case Preconditioner::Kind::Full:
        grads.dW[static_cast<std::size_t>(i)] -= (g * z.transpose() + z * g.transpose()) * layer.W();
        break;
    }

    const Vector gz = -layer.apply(g);
    grads.dH.noalias() += v * gz.transpose();
    const Vector gv = theta.H * gz;
    if (options.sigma) grho.array() += e.array() * gv.array();
    Vector gu(m);
    for (Eigen::Index k = 0; k < m; ++k) gu[k] = eta_prime(u[k]) * rho[k] * gv[k];
    const Vector gd = rho.cwiseProduct(gu);  // d loss / d (b - H x_i)
    if (options.sigma) grho.array() += (theta.b - theta.H * x).array() * gu.array();
    grads.dH.noalias() -= gd * x.transpose();
    g.noalias() -= theta.H.transpose() * gd;
  }
  if (options.sigma) grads.dsigma.array() -= grho.array() * rho.array() / theta.sigma.array();
  grads.dx0 += g;
}

inline Gradients backward(const ForwardTrace& trace, const SystemParams& theta, const OneBitObservation& r,
                          const UnfoldedWeights& phi, const Vector& upstream, BackwardOptions options = {}) {
  Gradients grads = Gradients::zeros_like(theta, phi);
  backward_accumulate(trace, theta, r, phi, upstream, grads, options);
  return grads;
}

/// Trainable parameter count of the unfolded detector: m n for a trainable
/// H, m for a trainable noise diagonal, plus the preconditioner factors.
inline Eigen::Index lordnet_parameter_count(Eigen::Index m, Eigen::Index n, const UnfoldedWeights& phi, bool train_h,
                                            bool train_c) {
  return (train_h ? m * n : 0) + (train_c ? m : 0) + phi.parameter_count();
}

// ---------------------------------------------------------------------------
// Over-parameterized unfolded benchmarks:
//   x_{i+1} = x_i - A_i R eta(R (b - B_i x_i)),  R = Diag(r)
// Benchmark 1 learns A_i (n x m) and B_i (m x n) freely; Benchmark 2 uses
// rank-r factors A_i = P_i Q_i, B_i = R_i S_i.
// ---------------------------------------------------------------------------

struct VariantLayer {
  Matrix A;  // n x m
  Matrix B;  // m x n
};

struct LowRankLayer {
  Matrix P;  // n x r
  Matrix Q;  // r x m
  Matrix R;  // m x r
  Matrix S;  // r x n
};

struct VariantWeights {
  enum class Kind { Full, LowRank };

  Kind kind = Kind::Full;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index rank = 0;
  std::vector<VariantLayer> full;
  std::vector<LowRankLayer> low_rank;

  std::size_t L() const noexcept { return kind == Kind::Full ? full.size() : low_rank.size(); }

  static VariantWeights benchmark1(std::vector<VariantLayer> layers) {
    VariantWeights vw;
    vw.kind = Kind::Full;
    if (layers.empty()) throw ShapeError("variant needs at least one layer");
    vw.n = layers.front().A.rows();
    vw.m = layers.front().A.cols();
    vw.full = std::move(layers);
    vw.validate();
    return vw;
  }

  static VariantWeights benchmark2(std::vector<LowRankLayer> layers) {
    VariantWeights vw;
    vw.kind = Kind::LowRank;
    if (layers.empty()) throw ShapeError("variant needs at least one layer");
    vw.n = layers.front().P.rows();
    vw.rank = layers.front().P.cols();
    vw.m = layers.front().Q.cols();
    vw.low_rank = std::move(layers);
    vw.validate();
    return vw;
  }

  void validate() const {
    if (kind == Kind::Full) {
      for (const auto& l : full)
        if (l.A.rows() != n || l.A.cols() != m || l.B.rows() != m || l.B.cols() != n)
          throw ShapeError("benchmark-1 layer shapes must be A: n x m, B: m x n");
    } else {
      if (rank < 1) throw ShapeError("low-rank variant needs rank >= 1");
      for (const auto& l : low_rank)
        if (l.P.rows() != n || l.P.cols() != rank || l.Q.rows() != rank || l.Q.cols() != m || l.R.rows() != m ||
            l.R.cols() != rank || l.S.rows() != rank || l.S.cols() != n)
          throw ShapeError("benchmark-2 layer shapes must be P: n x r, Q: r x m, R: m x r, S: r x n");
    }
  }

  /// Realized (A_i, B_i).
  VariantLayer realize(std::size_t i) const {
    if (kind == Kind::Full) return full[i];
    const auto& l = low_rank[i];
    return VariantLayer{l.P * l.Q, l.R * l.S};
  }

  Eigen::Index parameter_count() const {
    const auto layers = static_cast<Eigen::Index>(L());
    return kind == Kind::Full ? 2 * layers * n * m : 2 * layers * rank * (m + n);
  }
};

inline Eigen::Index benchmark1_parameter_count(Eigen::Index m, Eigen::Index n, Eigen::Index L) { return 2 * L * n * m; }

inline Eigen::Index benchmark2_parameter_count(Eigen::Index m, Eigen::Index n, Eigen::Index L, Eigen::Index rank) {
  return 2 * L * rank * (m + n);
}

struct VariantTrace {
  RowMatrix x_layers;  // (L + 1) x n
  RowMatrix u_layers;  // L x m
};

inline Vector variant_forward(const Vector& x0, const OneBitObservation& r, const VariantWeights& vw, const Vector& b,
                              VariantTrace* trace = nullptr) {
  vw.validate();
  detail::require_shape(x0.size() == vw.n, "x0 length does not match variant n");
  detail::require_shape(r.size() == vw.m && b.size() == vw.m, "observation/threshold length does not match variant m");
  const auto L = static_cast<Eigen::Index>(vw.L());
  if (trace) {
    trace->x_layers.resize(L + 1, vw.n);
    trace->u_layers.resize(L, vw.m);
    trace->x_layers.row(0) = x0.transpose();
  }
  const Vector& rv = r.values();
  Vector x = x0;
  for (Eigen::Index i = 0; i < L; ++i) {
    const auto layer = vw.realize(static_cast<std::size_t>(i));
    const Vector u = rv.cwiseProduct(b - layer.B * x);
    Vector v(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) v[k] = rv[k] * eta(u[k]);
    x -= layer.A * v;
    if (trace) {
      trace->u_layers.row(i) = u.transpose();
      trace->x_layers.row(i + 1) = x.transpose();
    }
  }
  return x;
}

/// Gradients of upstream^T x_L for every variant layer, shaped like the
/// layers of `vw` (full: A/B; low rank: P/Q/R/S).
struct VariantGradients {
  std::vector<VariantLayer> full;
  std::vector<LowRankLayer> low_rank;
};

inline VariantGradients variant_backward(const VariantTrace& trace, const OneBitObservation& r, const VariantWeights& vw,
                                         const Vector& upstream) {
  const auto L = static_cast<Eigen::Index>(vw.L());
  if (trace.x_layers.rows() != L + 1 || trace.u_layers.rows() != L)
    throw ConsistencyError("variant trace does not match the layer count");
  detail::require_shape(upstream.size() == vw.n, "upstream length does not match n");
  VariantGradients out;
  if (vw.kind == VariantWeights::Kind::Full) out.full.resize(vw.L());
  else out.low_rank.resize(vw.L());
  const Vector& rv = r.values();
  Vector g = upstream;
  for (Eigen::Index i = L - 1; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto layer = vw.realize(idx);
    const Vector x = trace.x_layers.row(i).transpose();
    const Vector u = trace.u_layers.row(i).transpose();
    Vector v(u.size()), gu(u.size());
    const Vector gv = -(layer.A.transpose() * g);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      v[k] = rv[k] * eta(u[k]);
      gu[k] = eta_prime(u[k]) * rv[k] * gv[k];
    }
    const Matrix dA = -g * v.transpose();
    const Vector gd = rv.cwiseProduct(gu);
    const Matrix dB = -gd * x.transpose();
    g.noalias() -= layer.B.transpose() * gd;
    if (vw.kind == VariantWeights::Kind::Full) {
      out.full[idx] = VariantLayer{dA, dB};
    } else {
      const auto& f = vw.low_rank[idx];
      out.low_rank[idx] = LowRankLayer{dA * f.Q.transpose(), f.P.transpose() * dA, dB * f.S.transpose(),
                                       f.R.transpose() * dB};
    }
  }
  return out;
}

}  // namespace lordnet
