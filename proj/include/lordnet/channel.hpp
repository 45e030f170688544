#pragma once

// Channel and dataset generation for the one-bit linear model
// r = sign(H x + n - b), plus the dataset and channel file formats.

#include <cmath>
#include <cstdint>
#include <string>

#include "lordnet/likelihood.hpp"
#include "lordnet/parallel.hpp"
#include "lordnet/rng.hpp"
#include "lordnet/text_io.hpp"

namespace lordnet {

enum class ChannelKind { Rayleigh, Imported };

inline const char* to_string(ChannelKind kind) { return kind == ChannelKind::Rayleigh ? "rayleigh" : "imported"; }

inline ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "rayleigh") return ChannelKind::Rayleigh;
  if (s == "imported") return ChannelKind::Imported;
  throw ParseError("unknown channel_kind '" + s + "'");
}

struct DatasetMeta {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index B = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  ChannelKind channel_kind = ChannelKind::Rayleigh;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// B labeled samples: row p of x_true is the transmitted vector, row p of
/// r_obs its one-bit observation.
struct Dataset {
  RowMatrix x_true;
  RowMatrix r_obs;
  DatasetMeta meta;
  Constellation constellation;
  Vector b;

  Eigen::Index size() const noexcept { return x_true.rows(); }

  OneBitObservation observation(Eigen::Index p) const { return OneBitObservation(r_obs.row(p).transpose()); }
  Vector symbols(Eigen::Index p) const { return x_true.row(p).transpose(); }

  /// First `count` samples, metadata adjusted.
  Dataset head(Eigen::Index count) const {
    Dataset out = *this;
    out.x_true = x_true.topRows(count);
    out.r_obs = r_obs.topRows(count);
    out.meta.B = count;
    return out;
  }

  void validate() const {
    if (meta.B < 1) throw ValidationError("dataset must hold at least one sample");
    if (x_true.rows() != meta.B || r_obs.rows() != meta.B)
      throw ValidationError("dataset row count does not match B = " + std::to_string(meta.B));
    if (x_true.cols() != meta.n || r_obs.cols() != meta.m) throw ValidationError("dataset columns do not match m/n");
    if (b.size() != meta.m) throw ValidationError("threshold vector length does not match m");
    for (Eigen::Index p = 0; p < meta.B; ++p) {
      for (Eigen::Index j = 0; j < meta.n; ++j)
        if (!constellation.contains(x_true(p, j)))
          throw ValidationError("x_true(" + std::to_string(p) + "," + std::to_string(j) + ") is not a constellation point");
      for (Eigen::Index i = 0; i < meta.m; ++i)
        if (r_obs(p, i) != 1.0 && r_obs(p, i) != -1.0)
          throw ValidationError("r_obs(" + std::to_string(p) + "," + std::to_string(i) + ") is not -1 or +1");
    }
  }

  friend bool operator==(const Dataset& a, const Dataset& c) {
    return a.meta == c.meta && a.constellation == c.constellation && a.b.size() == c.b.size() && a.b == c.b &&
           a.x_true.rows() == c.x_true.rows() && a.x_true.cols() == c.x_true.cols() && a.x_true == c.x_true &&
           a.r_obs.rows() == c.r_obs.rows() && a.r_obs.cols() == c.r_obs.cols() && a.r_obs == c.r_obs;
  }
};

/// H with i.i.d. N(0, 1) entries, drawn in row-major order.
inline Matrix sample_rayleigh_channel(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw ConfigError("channel dimensions must be >= 1");
  CounterRng rng(seed, rng_streams::kChannel);
  Matrix H(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) H(i, j) = rng.normal();
  return H;
}

/// Per-dimension noise std for the requested SNR, assuming unit-variance
/// channel entries and unit-power symbols: sigma^2 = n / 10^(snr_db / 10).
inline double sigma_for_snr(double snr_db, Eigen::Index n) {
  if (n < 1) throw ConfigError("n must be >= 1");
  return std::sqrt(static_cast<double>(n) / std::pow(10.0, snr_db / 10.0));
}

/// Ground-truth parameters with C = sigma^2 I at the given SNR and b = 0.
inline SystemParams make_system(Matrix H, double snr_db) {
  const Eigen::Index m = H.rows(), n = H.cols();
  SystemParams theta{std::move(H), Vector::Constant(m, sigma_for_snr(snr_db, n)), Vector::Zero(m)};
  theta.validate();
  return theta;
}

/// One-bit quantizer: +1 where y_i - b_i >= 0, otherwise -1.
inline OneBitObservation quantize(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& b) {
  detail::require_shape(y.size() == b.size(), "quantize: y and b lengths differ");
  Vector r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) r[i] = (y[i] - b[i] >= 0.0) ? 1.0 : -1.0;
  return OneBitObservation(std::move(r));
}

struct GenerationInfo {
  double snr_db = 0.0;
  ChannelKind channel_kind = ChannelKind::Rayleigh;
};

/// Draws B samples. Sample p uses its own stream (seed, p): the symbols
/// first, then the m noise values. The result does not depend on `threads`.
inline Dataset generate_dataset(const SystemParams& theta, const Constellation& constellation, Eigen::Index B,
                                std::uint64_t seed, GenerationInfo info = {}, unsigned threads = 1) {
  theta.validate();
  if (B < 1) throw ConfigError("B must be >= 1");
  const Eigen::Index m = theta.m(), n = theta.n();
  Dataset ds;
  ds.meta = DatasetMeta{m, n, B, info.snr_db, seed, info.channel_kind};
  ds.constellation = constellation;
  ds.b = theta.b;
  ds.x_true.resize(B, n);
  ds.r_obs.resize(B, m);
  const auto& points = constellation.points();
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t idx) {
    const auto p = static_cast<Eigen::Index>(idx);
    CounterRng rng(seed, idx);
    Vector x(n);
    for (Eigen::Index j = 0; j < n; ++j) x[j] = points[rng.uniform_index(points.size())];
    Vector y = theta.H * x;
    for (Eigen::Index i = 0; i < m; ++i) y[i] += theta.sigma[i] * rng.normal();
    ds.x_true.row(p) = x.transpose();
    ds.r_obs.row(p) = quantize(y, theta.b).values().transpose();
  });
  return ds;
}

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kChannelFormatVersion = 1;

/// Writes the JSON header line then one line per sample: n symbol values
/// followed by m one-bit values. `extra` is stored under "config".
inline void save_dataset(const Dataset& ds, const std::string& path, const text_io::json& extra = {}) {
  ds.validate();
  text_io::json header = {
      {"format", "lordnet-dataset"},
      {"format_version", kDatasetFormatVersion},
      {"m", ds.meta.m},
      {"n", ds.meta.n},
      {"B", ds.meta.B},
      {"snr_db", ds.meta.snr_db},
      {"seed", ds.meta.seed},
      {"channel_kind", to_string(ds.meta.channel_kind)},
      {"constellation", ds.constellation.points()},
      {"b", std::vector<double>(ds.b.data(), ds.b.data() + ds.b.size())},
      {"rng", kRngName},
  };
  if (!extra.is_null()) header["config"] = extra;
  auto out = text_io::open_write(path);
  out << header.dump() << '\n';
  for (Eigen::Index p = 0; p < ds.meta.B; ++p) {
    for (Eigen::Index j = 0; j < ds.meta.n; ++j) out << (j ? " " : "") << text_io::format_double(ds.x_true(p, j));
    for (Eigen::Index i = 0; i < ds.meta.m; ++i) out << ' ' << (ds.r_obs(p, i) > 0 ? "1" : "-1");
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
  using text_io::header_field;
  auto in = text_io::open_read(path);
  const auto header = text_io::read_header(in, path);
  if (header.value("format", std::string{}) != "lordnet-dataset")
    throw ParseError(path + ": not a lordnet dataset file (field 'format')");
  Dataset ds;
  ds.meta.m = header_field<Eigen::Index>(header, "m", path);
  ds.meta.n = header_field<Eigen::Index>(header, "n", path);
  ds.meta.B = header_field<Eigen::Index>(header, "B", path);
  ds.meta.snr_db = header_field<double>(header, "snr_db", path);
  ds.meta.seed = header_field<std::uint64_t>(header, "seed", path);
  ds.meta.channel_kind = channel_kind_from_string(header_field<std::string>(header, "channel_kind", path));
  if (ds.meta.m < 1 || ds.meta.n < 1) throw ParseError(path + ": field 'm'/'n' must be >= 1");
  if (ds.meta.B < 1) throw ParseError(path + ": field 'B' must be >= 1");
  try {
    ds.constellation = Constellation(header_field<std::vector<double>>(header, "constellation", path));
  } catch (const ValidationError& e) {
    throw ParseError(path + ": field 'constellation': " + e.what());
  }
  const auto b = header_field<std::vector<double>>(header, "b", path);
  if (static_cast<Eigen::Index>(b.size()) != ds.meta.m) throw ParseError(path + ": field 'b' length does not match m");
  ds.b = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));

  const Eigen::Index m = ds.meta.m, n = ds.meta.n;
  ds.x_true.resize(ds.meta.B, n);
  ds.r_obs.resize(ds.meta.B, m);
  std::string line;
  Eigen::Index row = 0;
  while (text_io::next_data_line(in, line)) {
    if (row >= ds.meta.B)
      throw ParseError(path + ": more sample rows than B = " + std::to_string(ds.meta.B) + " (field 'B')");
    const auto tokens = text_io::split_tokens(line);
    if (static_cast<Eigen::Index>(tokens.size()) != n + m)
      throw ParseError(path + ": row " + std::to_string(row) + " has " + std::to_string(tokens.size()) +
                       " values, expected n + m = " + std::to_string(n + m));
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::string field = "x[" + std::to_string(row) + "][" + std::to_string(j) + "]";
      const double v = text_io::parse_double(tokens[j], field);
      if (!ds.constellation.contains(v)) throw ParseError(path + ": " + field + " = " + tokens[j] + " is not a constellation point");
      ds.x_true(row, j) = v;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const std::string field = "r[" + std::to_string(row) + "][" + std::to_string(i) + "]";
      const double v = text_io::parse_double(tokens[n + i], field);
      if (v != 1.0 && v != -1.0) throw ParseError(path + ": " + field + " = " + tokens[n + i] + " is not -1 or +1");
      ds.r_obs(row, i) = v;
    }
    ++row;
  }
  if (row != ds.meta.B)
    throw ParseError(path + ": found " + std::to_string(row) + " sample rows but B = " + std::to_string(ds.meta.B) +
                     " (field 'B')");
  return ds;
}

/// Channel file: JSON header {"m", "n"} then m lines of n values.
inline void export_channel(const Matrix& H, const std::string& path) {
  auto out = text_io::open_write(path);
  out << text_io::json{{"format", "lordnet-channel"}, {"format_version", kChannelFormatVersion}, {"m", H.rows()},
                       {"n", H.cols()}}
             .dump()
      << '\n';
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    for (Eigen::Index j = 0; j < H.cols(); ++j) out << (j ? " " : "") << text_io::format_double(H(i, j));
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline Matrix import_channel(const std::string& path) {
  auto in = text_io::open_read(path);
  const auto header = text_io::read_header(in, path);
  const auto m = text_io::header_field<Eigen::Index>(header, "m", path);
  const auto n = text_io::header_field<Eigen::Index>(header, "n", path);
  if (m < 1 || n < 1) throw ValidationError(path + ": declared dimensions must be >= 1");
  std::vector<double> values;
  std::string line;
  Eigen::Index rows = 0;
  while (text_io::next_data_line(in, line)) {
    const auto tokens = text_io::split_tokens(line);
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      double v;
      try {
        v = text_io::parse_double(tokens[k], "row " + std::to_string(rows));
      } catch (const ParseError& e) {
        throw ValidationError(path + ": " + e.what());
      }
      if (!std::isfinite(v)) throw ValidationError(path + ": non-finite entry in row " + std::to_string(rows));
      values.push_back(v);
    }
    if (static_cast<Eigen::Index>(tokens.size()) != n && static_cast<Eigen::Index>(values.size()) <= m * n)
      throw ValidationError(path + ": row " + std::to_string(rows) + " has " + std::to_string(tokens.size()) +
                            " values, declared n = " + std::to_string(n));
    ++rows;
  }
  if (static_cast<Eigen::Index>(values.size()) != m * n || rows != m)
    throw ValidationError(path + ": declared " + std::to_string(m) + "x" + std::to_string(n) + " but found " +
                          std::to_string(values.size()) + " values in " + std::to_string(rows) + " rows");
  Matrix H(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) H(i, j) = values[static_cast<std::size_t>(i * n + j)];
  return H;
}

}  // namespace lordnet
