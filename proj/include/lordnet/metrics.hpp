#pragma once

#include <cstdint>

#include "lordnet/likelihood.hpp"

namespace lordnet {

struct ErrorCount {
  std::int64_t errors = 0;
  std::int64_t bits = 0;

  double rate() const { return bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }

  ErrorCount& operator+=(const ErrorCount& o) {
    errors += o.errors;
    bits += o.bits;
    return *this;
  }
};

inline ErrorCount count_errors(const Eigen::Ref<const RowMatrix>& estimates, const Eigen::Ref<const RowMatrix>& truth) {
  detail::require_shape(estimates.rows() == truth.rows() && estimates.cols() == truth.cols(),
                        "estimate and truth shapes differ");
  ErrorCount c;
  c.bits = estimates.size();
  for (Eigen::Index p = 0; p < estimates.rows(); ++p)
    for (Eigen::Index j = 0; j < estimates.cols(); ++j) c.errors += estimates(p, j) != truth(p, j);
  return c;
}

/// Fraction of symbol entries that differ (bit error rate for BPSK).
inline double ber(const Eigen::Ref<const RowMatrix>& estimates, const Eigen::Ref<const RowMatrix>& truth) {
  return count_errors(estimates, truth).rate();
}

}  // namespace lordnet
