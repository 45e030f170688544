#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace lordnet;
using lordnet::testing::temp_path;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Rayleigh, DeterministicAndShaped) {
  EXPECT_EQ(sample_rayleigh_channel(4, 2, 7), sample_rayleigh_channel(4, 2, 7));
  EXPECT_NE(sample_rayleigh_channel(4, 2, 7), sample_rayleigh_channel(4, 2, 8));
  const Matrix H = sample_rayleigh_channel(2, 3, 11);
  EXPECT_EQ(H.rows(), 2);
  EXPECT_EQ(H.cols(), 3);
  EXPECT_TRUE(H.allFinite());
  EXPECT_THROW(sample_rayleigh_channel(0, 3, 1), ConfigError);
  EXPECT_THROW(sample_rayleigh_channel(3, 0, 1), ConfigError);
}

TEST(Rayleigh, Moments) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix H = sample_rayleigh_channel(1000, 1, seed);
    const double mean = H.mean();
    const double var = (H.array() - mean).square().sum() / 999.0;
    EXPECT_NEAR(mean, 0.0, 0.1);
    EXPECT_NEAR(var, 1.0, 0.15);
  }
}

TEST(Snr, SigmaExamples) {
  EXPECT_DOUBLE_EQ(sigma_for_snr(0.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(sigma_for_snr(10.0, 10), 1.0);
  EXPECT_NEAR(sigma_for_snr(-10.0, 4) * sigma_for_snr(-10.0, 4), 40.0, 1e-12);
}

TEST(Snr, MonteCarloRatio) {
  for (auto [m, n, snr] : {std::tuple{16, 4, 8.0}, std::tuple{10, 10, 10.0}, std::tuple{16, 4, -10.0}}) {
    const double sigma = sigma_for_snr(snr, n);
    CounterRng rng(5, 0);
    double signal = 0.0, noise = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const Matrix H = sample_rayleigh_channel(m, n, static_cast<std::uint64_t>(t));
      Vector x(n);
      for (int j = 0; j < n; ++j) x[j] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      signal += (H * x).squaredNorm();
      for (int i = 0; i < m; ++i) {
        const double e = sigma * rng.normal();
        noise += e * e;
      }
    }
    EXPECT_NEAR(signal / noise, std::pow(10.0, snr / 10.0), 0.05 * std::pow(10.0, snr / 10.0)) << snr;
  }
}

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize(Vector::Zero(1), Vector::Zero(1)).values(), Vector::Ones(1));
  Vector y(2), b(2), expected(2);
  y << 3, -2;
  expected << 1, -1;
  EXPECT_EQ(quantize(y, Vector::Zero(2)).values(), expected);
  y << 1, 1;
  b << 2, 0;
  expected << -1, 1;
  EXPECT_EQ(quantize(y, b).values(), expected);
  EXPECT_THROW(quantize(Vector::Zero(2), Vector::Zero(3)), ShapeError);
}

TEST(Quantize, AlwaysPlusMinusOne) {
  const Vector y = lordnet::testing::random_vector(500, 3);
  const Vector b = lordnet::testing::random_vector(500, 4);
  const auto r = quantize(y, b);
  for (Eigen::Index i = 0; i < r.size(); ++i) EXPECT_TRUE(r[i] == 1.0 || r[i] == -1.0);
}

TEST(Generate, NoiselessIdentityChannel) {
  SystemParams theta{Matrix::Identity(2, 2), Vector::Constant(2, 1e-12), Vector::Zero(2)};
  Vector target(2);
  target << 1, -1;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
    const auto ds = generate_dataset(theta, Constellation::bpsk(), 1, seed);
    if (ds.symbols(0) != target) continue;
    found = true;
    EXPECT_EQ(ds.observation(0).values(), target);
  }
  EXPECT_TRUE(found);
}

TEST(Generate, DeterministicAndThreadIndependent) {
  const auto theta = make_system(sample_rayleigh_channel(8, 3, 1), 5.0);
  const auto a = generate_dataset(theta, Constellation::bpsk(), 300, 9, {5.0}, 1);
  const auto b = generate_dataset(theta, Constellation::bpsk(), 300, 9, {5.0}, 1);
  const auto c = generate_dataset(theta, Constellation::bpsk(), 300, 9, {5.0}, 4);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
  EXPECT_FALSE(a == generate_dataset(theta, Constellation::bpsk(), 300, 10, {5.0}, 1));
  EXPECT_TRUE(a.head(17) == generate_dataset(theta, Constellation::bpsk(), 17, 9, {5.0}, 1));
}

TEST(Generate, SymbolFrequencies) {
  const auto theta = make_system(sample_rayleigh_channel(2, 1, 1), 0.0);
  const auto ds = generate_dataset(theta, Constellation::bpsk(), 10000, 3);
  const double plus = (ds.x_true.array() > 0).cast<double>().mean();
  EXPECT_GE(plus, 0.47);
  EXPECT_LE(plus, 0.53);
}

TEST(Generate, InvalidThetaRejected) {
  SystemParams theta{Matrix::Identity(2, 2), Vector::Zero(2), Vector::Zero(2)};
  EXPECT_THROW(generate_dataset(theta, Constellation::bpsk(), 4, 1), ValidationError);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  const auto theta = make_system(sample_rayleigh_channel(6, 3, 2), 3.5);
  auto ds = generate_dataset(theta, Constellation(std::vector<double>{-3, -1, 1, 3}), 40, 5, {3.5});
  const auto path = temp_path("roundtrip.ds");
  save_dataset(ds, path);
  EXPECT_TRUE(load_dataset(path) == ds);

  ds.b = lordnet::testing::random_vector(6, 8);
  ds.meta.snr_db = 0.1 + 0.2;
  ds.meta.channel_kind = ChannelKind::Imported;
  save_dataset(ds, path, text_io::json{{"note", "x"}});
  EXPECT_TRUE(load_dataset(path) == ds);
}

TEST(DatasetFile, ZeroObservationNamesTheEntry) {
  const auto ds = generate_dataset(make_system(Matrix::Identity(2, 2), 10.0), Constellation::bpsk(), 3, 1, {10.0});
  const auto path = temp_path("zero.ds");
  save_dataset(ds, path);
  auto text = read_file(path);
  auto first_row = text.find('\n') + 1;
  auto row_end = text.find('\n', first_row);
  auto last_space = text.rfind(' ', row_end);
  text.replace(last_space + 1, row_end - last_space - 1, "0");
  write_file(path, text);
  try {
    load_dataset(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("r[0][1]"), std::string::npos) << e.what();
  }
}

TEST(DatasetFile, RowCountMismatch) {
  const auto ds = generate_dataset(make_system(Matrix::Identity(2, 2), 10.0), Constellation::bpsk(), 3, 1, {10.0});
  const auto path = temp_path("count.ds");
  save_dataset(ds, path);
  auto text = read_file(path);
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  write_file(path, text);
  try {
    load_dataset(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'B'"), std::string::npos) << e.what();
  }
  write_file(path, "{\"format\":\"lordnet-dataset\",\"m\":2}\n");
  EXPECT_THROW(load_dataset(path), ParseError);
  write_file(path, "not json\n");
  EXPECT_THROW(load_dataset(path), ParseError);
}

TEST(ChannelFile, RoundTrip) {
  const Matrix H = sample_rayleigh_channel(5, 3, 4);
  const auto path = temp_path("h.ch");
  export_channel(H, path);
  EXPECT_EQ(import_channel(path), H);
}

TEST(ChannelFile, HandWrittenIdentity) {
  const auto path = temp_path("eye.ch");
  write_file(path, "{\"m\": 2, \"n\": 2}\n1 0\n0 1\n");
  EXPECT_EQ(import_channel(path), Matrix::Identity(2, 2));
}

TEST(ChannelFile, CountAndFinitenessErrors) {
  const auto path = temp_path("bad.ch");
  write_file(path, "{\"m\": 4, \"n\": 2}\n1 2\n3 4\n5 6\n7\n");
  EXPECT_THROW(import_channel(path), ValidationError);
  write_file(path, "{\"m\": 1, \"n\": 2}\n1 nan\n");
  EXPECT_THROW(import_channel(path), ValidationError);
  write_file(path, "{\"m\": 1, \"n\": 2}\n1 2 3\n");
  EXPECT_THROW(import_channel(path), ValidationError);
}
