#pragma once

// JSON model checkpoints: learned system parameters, per-layer
// preconditioners, optional benchmark weights, optimizer constants and the
// resolved configuration that produced them.

#include <optional>
#include <string>
#include <vector>

#include "lordnet/adam.hpp"
#include "lordnet/text_io.hpp"
#include "lordnet/unfolded.hpp"

namespace lordnet {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  SystemParams theta;
  UnfoldedWeights phi;
  bool train_h = true;
  bool train_c = false;
  std::optional<VariantWeights> variant;
  AdamHyper adam;
  text_io::json config;
};

namespace detail {

using text_io::json;

inline json flat(const Matrix& M) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(M.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
  return out;
}

inline json flat(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Matrix unflat(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
  std::vector<double> values;
  try {
    values = j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ParseError("checkpoint field '" + field + "' must be an array of numbers");
  }
  if (static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw ParseError("checkpoint field '" + field + "' has " + std::to_string(values.size()) + " entries, expected " +
                     std::to_string(rows * cols));
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = values[static_cast<std::size_t>(i * cols + k)];
  return M;
}

inline Vector unflat_vec(const json& j, Eigen::Index size, const std::string& field) {
  const Matrix M = unflat(j, size, 1, field);
  return M.col(0);
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError("checkpoint is missing field '" + where + key + "'");
  return j.at(key);
}

template <class T>
T need_as(const json& j, const char* key, const std::string& where) {
  try {
    return need(j, key, where).get<T>();
  } catch (const json::exception&) {
    throw ParseError("checkpoint field '" + where + key + "' has the wrong type");
  }
}

inline json phi_to_json(const UnfoldedWeights& phi) {
  if (phi.layers.empty()) throw ValidationError("checkpoint needs at least one layer");
  const auto kind = phi.layers.front().kind();
  for (const auto& g : phi.layers)
    if (g.kind() != kind) throw ValidationError("checkpoint layers must share one preconditioner kind");
  json layers = json::array();
  switch (kind) {
    case Preconditioner::Kind::Scalar:
      for (const auto& g : phi.layers) layers.push_back(g.scale());
      return {{"kind", "scalar"}, {"delta", layers}};
    case Preconditioner::Kind::Diagonal:
      for (const auto& g : phi.layers) layers.push_back(flat(g.w()));
      return {{"kind", "diagonal"}, {"w_diag", layers}};
    case Preconditioner::Kind::Full:
      for (const auto& g : phi.layers) layers.push_back(flat(g.W()));
      return {{"kind", "full"}, {"W", layers}};
  }
  return {};
}

inline UnfoldedWeights phi_from_json(const json& j, std::size_t L, Eigen::Index n) {
  const auto kind = need_as<std::string>(j, "kind", "phi.");
  const char* key = kind == "scalar" ? "delta" : kind == "diagonal" ? "w_diag" : kind == "full" ? "W" : nullptr;
  if (!key) throw ParseError("checkpoint field 'phi.kind' has unknown value '" + kind + "'");
  const auto& layers = need(j, key, "phi.");
  if (!layers.is_array() || layers.size() != L)
    throw ParseError("checkpoint field 'phi." + std::string(key) + "' must hold L = " + std::to_string(L) + " layers");
  UnfoldedWeights phi;
  for (std::size_t i = 0; i < L; ++i) {
    const std::string field = "phi." + std::string(key) + "[" + std::to_string(i) + "]";
    if (kind == "scalar") {
      if (!layers[i].is_number()) throw ParseError("checkpoint field '" + field + "' must be a number");
      phi.layers.push_back(Preconditioner::scalar(layers[i].get<double>()));
    } else if (kind == "diagonal") {
      phi.layers.push_back(Preconditioner::diagonal(unflat_vec(layers[i], n, field)));
    } else {
      phi.layers.push_back(Preconditioner::full(unflat(layers[i], n, n, field)));
    }
  }
  return phi;
}

inline json variant_to_json(const VariantWeights& vw) {
  json layers = json::array();
  if (vw.kind == VariantWeights::Kind::Full) {
    for (const auto& l : vw.full) layers.push_back({{"A", flat(l.A)}, {"B", flat(l.B)}});
    return {{"kind", "benchmark1"}, {"m", vw.m}, {"n", vw.n}, {"layers", layers}};
  }
  for (const auto& l : vw.low_rank)
    layers.push_back({{"P", flat(l.P)}, {"Q", flat(l.Q)}, {"R", flat(l.R)}, {"S", flat(l.S)}});
  return {{"kind", "benchmark2"}, {"m", vw.m}, {"n", vw.n}, {"rank", vw.rank}, {"layers", layers}};
}

inline VariantWeights variant_from_json(const json& j) {
  const auto kind = need_as<std::string>(j, "kind", "variant.");
  const auto m = need_as<Eigen::Index>(j, "m", "variant.");
  const auto n = need_as<Eigen::Index>(j, "n", "variant.");
  const auto& layers = need(j, "layers", "variant.");
  if (!layers.is_array() || layers.empty()) throw ParseError("checkpoint field 'variant.layers' must be a non-empty array");
  try {
    if (kind == "benchmark1") {
      std::vector<VariantLayer> out;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string at = "variant.layers[" + std::to_string(i) + "].";
        out.push_back({unflat(need(layers[i], "A", at), n, m, at + "A"), unflat(need(layers[i], "B", at), m, n, at + "B")});
      }
      return VariantWeights::benchmark1(std::move(out));
    }
    if (kind == "benchmark2") {
      const auto r = need_as<Eigen::Index>(j, "rank", "variant.");
      std::vector<LowRankLayer> out;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string at = "variant.layers[" + std::to_string(i) + "].";
        out.push_back({unflat(need(layers[i], "P", at), n, r, at + "P"), unflat(need(layers[i], "Q", at), r, m, at + "Q"),
                       unflat(need(layers[i], "R", at), m, r, at + "R"), unflat(need(layers[i], "S", at), r, n, at + "S")});
      }
      return VariantWeights::benchmark2(std::move(out));
    }
  } catch (const ShapeError& e) {
    throw ParseError(std::string("checkpoint field 'variant': ") + e.what());
  }
  throw ParseError("checkpoint field 'variant.kind' has unknown value '" + kind + "'");
}

}  // namespace detail

inline text_io::json checkpoint_to_json(const Checkpoint& ck) {
  using text_io::json;
  ck.theta.validate();
  for (const auto& g : ck.phi.layers) g.check_size(ck.theta.n());
  json out = {
      {"format", "lordnet-checkpoint"},
      {"format_version", kCheckpointFormatVersion},
      {"m", ck.theta.m()},
      {"n", ck.theta.n()},
      {"L", ck.phi.L()},
      {"theta",
       {{"H", detail::flat(ck.theta.H)},
        {"sigma", detail::flat(ck.theta.sigma)},
        {"b", detail::flat(ck.theta.b)},
        {"trainable_flags", {{"H", ck.train_h}, {"C", ck.train_c}}}}},
      {"phi", detail::phi_to_json(ck.phi)},
      {"adam", {{"beta1", ck.adam.beta1}, {"beta2", ck.adam.beta2}, {"eps", ck.adam.eps}}},
  };
  if (ck.variant) out["variant"] = detail::variant_to_json(*ck.variant);
  if (!ck.config.is_null()) out["config"] = ck.config;
  return out;
}

inline Checkpoint checkpoint_from_json(const text_io::json& j) {
  using detail::need;
  using detail::need_as;
  if (need_as<std::string>(j, "format", "") != "lordnet-checkpoint")
    throw ParseError("not a lordnet checkpoint (field 'format')");
  const auto version = need_as<int>(j, "format_version", "");
  if (version != kCheckpointFormatVersion)
    throw ParseError("unsupported checkpoint format_version " + std::to_string(version));
  const auto m = need_as<Eigen::Index>(j, "m", "");
  const auto n = need_as<Eigen::Index>(j, "n", "");
  const auto L = need_as<std::size_t>(j, "L", "");
  if (m < 1 || n < 1 || L < 1) throw ParseError("checkpoint fields 'm', 'n', 'L' must be >= 1");
  Checkpoint ck;
  const auto& theta = need(j, "theta", "");
  ck.theta.H = detail::unflat(need(theta, "H", "theta."), m, n, "theta.H");
  ck.theta.sigma = detail::unflat_vec(need(theta, "sigma", "theta."), m, "theta.sigma");
  ck.theta.b = detail::unflat_vec(need(theta, "b", "theta."), m, "theta.b");
  const auto& flags = need(theta, "trainable_flags", "theta.");
  ck.train_h = need_as<bool>(flags, "H", "theta.trainable_flags.");
  ck.train_c = need_as<bool>(flags, "C", "theta.trainable_flags.");
  try {
    ck.theta.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("checkpoint field 'theta': ") + e.what());
  }
  ck.phi = detail::phi_from_json(need(j, "phi", ""), L, n);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    ck.adam = AdamHyper{need_as<double>(a, "beta1", "adam."), need_as<double>(a, "beta2", "adam."),
                        need_as<double>(a, "eps", "adam.")};
  }
  if (j.contains("variant")) ck.variant = detail::variant_from_json(j.at("variant"));
  if (j.contains("config")) ck.config = j.at("config");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  auto out = text_io::open_write(path);
  out << checkpoint_to_json(ck).dump(1) << '\n';
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  auto in = text_io::open_read(path);
  text_io::json j;
  try {
    j = text_io::json::parse(in);
  } catch (const text_io::json::exception& e) {
    throw ParseError(path + ": malformed checkpoint JSON: " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace lordnet
