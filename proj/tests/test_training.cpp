#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"

using namespace lordnet;
using lordnet::testing::random_system;
using lordnet::testing::rel_diff;

namespace {

Dataset small_dataset(Eigen::Index m, Eigen::Index n, double snr_db, Eigen::Index B, std::uint64_t seed) {
  const auto theta = make_system(sample_rayleigh_channel(m, n, seed), snr_db);
  return generate_dataset(theta, Constellation::bpsk(), B, mix_seed(seed, 1), {snr_db});
}

TrainConfig quick_config(long epochs1, long epochs2) {
  TrainConfig cfg;
  cfg.L = 8;
  cfg.epochs_stage1 = epochs1;
  cfg.epochs_stage2 = epochs2;
  cfg.batch_size = 16;
  cfg.seed = 3;
  return cfg;
}

bool same_phi(const UnfoldedWeights& a, const UnfoldedWeights& b) {
  if (a.L() != b.L()) return false;
  for (std::size_t i = 0; i < a.L(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.kind() != y.kind() || x.scale() != y.scale() || x.w().size() != y.w().size() ||
        x.W().size() != y.W().size())
      return false;
    if (x.w().size() && x.w() != y.w()) return false;
    if (x.W().size() && x.W() != y.W()) return false;
  }
  return true;
}

}  // namespace

TEST(Adam, ZeroGradientKeepsParameters) {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  AdamState st;
  std::vector<std::span<double>> ps{p};
  std::vector<std::span<const double>> gs{g};
  for (int k = 0; k < 5; ++k) adam_step(ps, gs, st, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(st.step, 5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  AdamState st;
  std::vector<std::span<double>> ps{p};
  std::vector<std::span<const double>> gs{g};
  adam_step(ps, gs, st, 0.1);
  // m_hat = 1, v_hat = 1: step = 0.1 / (1 + 1e-8).
  EXPECT_NEAR(p[0], -0.1 / (1.0 + 1e-8), 1e-17);
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> p{0.0, 1.0};
  const std::vector<double> g{1.0};
  AdamState st;
  std::vector<std::span<double>> ps{p};
  std::vector<std::span<const double>> gs{g};
  EXPECT_THROW(adam_step(ps, gs, st, 0.1), ShapeError);
  std::vector<std::span<const double>> none;
  EXPECT_THROW(adam_step(ps, none, st, 0.1), ShapeError);
}

TEST(Stage1Loss, SelfConsistentLabelsGiveZero) {
  auto ds = small_dataset(6, 3, 10.0, 5, 1);
  const auto theta = random_system(6, 3, 2);
  for (Eigen::Index p = 0; p < ds.size(); ++p)
    ds.x_true.row(p) =
        forward_output(Vector::Zero(3), theta, ds.observation(p), UnfoldedWeights::basic_policy(4, 0.01)).transpose();
  EXPECT_EQ(stage1_loss(theta, ds, 4, 0.01), 0.0);
}

TEST(Stage1Loss, SingleSampleSquaredError) {
  Dataset ds;
  ds.meta = DatasetMeta{1, 1, 1, 0.0, 0, ChannelKind::Rayleigh};
  ds.x_true = RowMatrix::Ones(1, 1);
  ds.r_obs = RowMatrix::Ones(1, 1);
  ds.b = Vector::Zero(1);
  SystemParams theta{Matrix::Ones(1, 1), Vector::Ones(1), Vector::Zero(1)};
  // One layer from 0 moves to delta * sqrt(2 / pi); pick delta so it lands at 0.5.
  const double delta = 0.5 / 0.79788456080286535588;
  EXPECT_NEAR(stage1_loss(theta, ds, 1, delta), 0.25, 1e-15);
}

TEST(Stage1Loss, TrueParametersBeatRandomChannel) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto theta = make_system(sample_rayleigh_channel(16, 4, seed), 20.0);
    const auto ds = generate_dataset(theta, Constellation::bpsk(), 64, mix_seed(seed, 1), {20.0});
    SystemParams random_h = theta;
    random_h.H = sample_rayleigh_channel(16, 4, mix_seed(seed, 2));
    EXPECT_LT(stage1_loss(theta, ds, 50, 1e-3), stage1_loss(random_h, ds, 50, 1e-3)) << seed;
  }
}

TEST(Stage1Loss, GradientMatchesFiniteDifferences) {
  const auto ds = small_dataset(6, 3, 5.0, 8, 4);
  auto theta = random_system(6, 3, 5);
  const auto phi = UnfoldedWeights::basic_policy(4, 0.05);
  const auto idx = std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7};
  const auto lg = unfolded_loss_and_gradients(theta, phi, ds, idx, {.sigma = true});
  EXPECT_NEAR(lg.loss, unfolded_loss(theta, phi, ds), 1e-14);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      SystemParams tp = theta, tm = theta;
      tp.H(i, j) += h;
      tm.H(i, j) -= h;
      const double fd = (unfolded_loss(tp, phi, ds) - unfolded_loss(tm, phi, ds)) / (2 * h);
      EXPECT_LT(rel_diff(lg.grads.dH(i, j), fd, 1e-6), 1e-4);
    }
    SystemParams tp = theta, tm = theta;
    tp.sigma[i] += h;
    tm.sigma[i] -= h;
    const double fd = (unfolded_loss(tp, phi, ds) - unfolded_loss(tm, phi, ds)) / (2 * h);
    EXPECT_LT(rel_diff(lg.grads.dsigma[i], fd, 1e-6), 1e-4);
  }
}

TEST(Stage1, DescendsFromTrueParameters) {
  const auto theta0 = make_system(sample_rayleigh_channel(12, 3, 6), 20.0);
  const auto ds = generate_dataset(theta0, Constellation::bpsk(), 64, 7, {20.0});
  auto cfg = quick_config(30, 0);
  const auto res = train_stage1_from(ds, cfg, theta0);
  EXPECT_LE(stage1_loss(res.theta, ds, cfg.L, cfg.delta), stage1_loss(theta0, ds, cfg.L, cfg.delta));
  EXPECT_EQ(res.log.size(), 30u);
  for (const auto& rec : res.log) EXPECT_EQ(rec.stage, "stage1");
}

TEST(Stage1, MovingAverageNonIncreasing) {
  const auto ds = small_dataset(12, 3, 8.0, 64, 8);
  auto cfg = quick_config(150, 0);
  const auto res = train_stage1(ds, cfg);
  std::vector<double> losses;
  for (const auto& rec : res.log) losses.push_back(rec.loss_train);
  EXPECT_TRUE(moving_average_non_increasing(losses, 50, 1e-3));
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Stage1, BeatsRandomChannelOnHeldOutData) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto theta = make_system(sample_rayleigh_channel(32, 8, seed), 8.0);
    const auto train = generate_dataset(theta, Constellation::bpsk(), 512, mix_seed(seed, 1), {8.0});
    const auto test = generate_dataset(theta, Constellation::bpsk(), 512, mix_seed(seed, 2), {8.0});
    TrainConfig cfg;
    cfg.epochs_stage1 = 15;
    cfg.stage1_batch_size = 32;
    cfg.seed = seed;
    const auto res = train_stage1(train, cfg);
    SystemParams random_h = res.theta;
    random_h.H = sample_rayleigh_channel(32, 8, mix_seed(seed, 3));
    const auto basic = UnfoldedWeights::basic_policy(cfg.L, cfg.delta);
    EXPECT_LT(evaluate_errors(res.theta, basic, test).rate(), evaluate_errors(random_h, basic, test).rate()) << seed;
  }
}

TEST(Stage2, ZeroLearningRateKeepsWeights) {
  const auto ds = small_dataset(8, 3, 5.0, 32, 9);
  auto cfg = quick_config(0, 3);
  cfg.lr_stage2 = 0.0;
  const auto theta = random_system(8, 3, 1);
  const auto res = train_stage2(ds, theta, cfg);
  EXPECT_TRUE(same_phi(res.phi, UnfoldedWeights::diagonal_from_delta(cfg.L, 3, cfg.delta)));
}

TEST(Stage2, HandoffContinuity) {
  const auto ds = small_dataset(8, 3, 5.0, 32, 10);
  const auto cfg = quick_config(10, 1);
  const auto s1 = train_stage1(ds, cfg);
  const double final_stage1 = stage1_loss(s1.theta, ds, cfg.L, cfg.delta);
  const double initial_stage2 = unfolded_loss(s1.theta, UnfoldedWeights::diagonal_from_delta(cfg.L, 3, cfg.delta), ds);
  EXPECT_NEAR(initial_stage2, final_stage1, 1e-10);
  auto full = cfg;
  full.full_preconditioner = true;
  EXPECT_NEAR(unfolded_loss(s1.theta, UnfoldedWeights::full_from_delta(cfg.L, 3, cfg.delta), ds), final_stage1, 1e-10);
}

TEST(Stage2, FullPreconditionersStayPsd) {
  const auto ds = small_dataset(8, 3, 5.0, 32, 11);
  auto cfg = quick_config(3, 5);
  cfg.full_preconditioner = true;
  cfg.lr_stage2 = 1e-2;
  const auto res = train_two_stage(ds, cfg);
  for (const auto& g : res.phi.layers) {
    ASSERT_EQ(g.kind(), Preconditioner::Kind::Full);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.dense(3));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Training, BitwiseReproducibleAcrossThreadCounts) {
  const auto ds = small_dataset(10, 3, 6.0, 48, 12);
  auto cfg = quick_config(4, 4);
  cfg.train_c = true;
  cfg.threads = 1;
  const auto a = train_two_stage(ds, cfg);
  const auto b = train_two_stage(ds, cfg);
  cfg.threads = 4;
  const auto c = train_two_stage(ds, cfg);
  EXPECT_TRUE(a.theta == b.theta);
  EXPECT_TRUE(a.theta == c.theta);
  EXPECT_TRUE(same_phi(a.phi, b.phi));
  EXPECT_TRUE(same_phi(a.phi, c.phi));
  for (std::size_t k = 0; k < a.log.size(); ++k) EXPECT_EQ(a.log[k].loss_train, c.log[k].loss_train);
}

TEST(Training, NoiseLevelsStayPositive) {
  const auto ds = small_dataset(10, 3, 6.0, 48, 13);
  auto cfg = quick_config(20, 0);
  cfg.train_c = true;
  cfg.lr_stage1 = 0.05;
  const auto res = train_stage1(ds, cfg);
  EXPECT_GT(res.theta.sigma.minCoeff(), 0.0);
  EXPECT_NE(res.theta.sigma, Vector::Constant(10, sigma_for_snr(6.0, 3)));
}

TEST(OneStage, ZeroEpochsReturnsInitialParameters) {
  const auto ds = small_dataset(8, 3, 5.0, 16, 14);
  auto cfg = quick_config(0, 0);
  cfg.mode = TrainMode::OneStage;
  const auto res = train(ds, cfg);
  CounterRng rng(cfg.seed, rng_streams::kInit);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(res.theta.H(i, j), cfg.h_init_std * rng.normal());
  EXPECT_TRUE(same_phi(res.phi, UnfoldedWeights::diagonal_from_delta(cfg.L, 3, cfg.delta)));
  EXPECT_TRUE(res.log.empty());
}

TEST(OneStage, JointLogAndDescent) {
  const auto ds = small_dataset(8, 3, 8.0, 64, 15);
  auto cfg = quick_config(60, 60);
  cfg.mode = TrainMode::OneStage;
  const auto res = train(ds, cfg);
  ASSERT_EQ(res.log.size(), 120u);
  std::vector<double> losses;
  for (const auto& rec : res.log) {
    EXPECT_EQ(rec.stage, "joint");
    losses.push_back(rec.loss_train);
  }
  EXPECT_TRUE(moving_average_non_increasing(losses, 50, 1e-3));
}

TEST(Alternating, ZeroLearningRateKeepsParameters) {
  const auto ds = small_dataset(8, 3, 5.0, 16, 16);
  auto cfg = quick_config(1, 1);
  cfg.mode = TrainMode::Alternating;
  cfg.lr_stage1 = cfg.lr_stage2 = 0.0;
  const auto res = train(ds, cfg);
  const auto start = train(ds, [&] {
    auto c = cfg;
    c.epochs_stage1 = c.epochs_stage2 = 0;
    return c;
  }());
  EXPECT_TRUE(res.theta == start.theta);
  EXPECT_TRUE(same_phi(res.phi, start.phi));
}

TEST(Alternating, ThetaUpdatesOnOddEpochs) {
  const auto ds = small_dataset(8, 3, 5.0, 16, 17);
  auto cfg = quick_config(3, 3);
  cfg.mode = TrainMode::Alternating;
  std::vector<SystemParams> thetas;
  const auto res = train(ds, cfg);
  ASSERT_EQ(res.log.size(), 6u);
  for (const auto& rec : res.log) EXPECT_EQ(rec.stage, rec.epoch % 2 ? "alt-theta" : "alt-phi");
  // Truncated runs expose the parameters after every epoch.
  SystemParams prev_theta;
  UnfoldedWeights prev_phi;
  for (long e = 0; e <= 6; ++e) {
    auto c = cfg;
    c.epochs_stage1 = e;
    c.epochs_stage2 = 0;
    const auto r = train(ds, c);
    if (e > 0) {
      const bool odd = e % 2 == 1;
      EXPECT_EQ(!(r.theta == prev_theta), odd) << e;
      EXPECT_EQ(!same_phi(r.phi, prev_phi), !odd) << e;
    }
    prev_theta = r.theta;
    prev_phi = r.phi;
  }
}

TEST(Training, HeldOutLogging) {
  const auto ds = small_dataset(8, 3, 5.0, 32, 18);
  const auto held = small_dataset(8, 3, 5.0, 16, 19);
  auto cfg = quick_config(4, 3);
  TrainOptions opts;
  opts.heldout = &held;
  opts.eval_every = 2;
  int seen = 0;
  opts.on_record = [&](const LogRecord&) { ++seen; };
  const auto res = train_two_stage(ds, cfg, opts);
  ASSERT_EQ(res.log.size(), 7u);
  EXPECT_EQ(seen, 7);
  EXPECT_TRUE(res.log[1].ber_heldout.has_value());
  EXPECT_FALSE(res.log[0].ber_heldout.has_value());
  EXPECT_TRUE(res.log[3].loss_heldout.has_value());
  EXPECT_TRUE(res.log[6].ber_heldout.has_value());
  EXPECT_EQ(res.log[4].stage, "stage2");
  EXPECT_EQ(res.log[4].epoch, 5);
}

TEST(Training, DivergenceNamesTheEpoch) {
  const auto ds = small_dataset(8, 3, 5.0, 16, 20);
  auto cfg = quick_config(5, 0);
  cfg.lr_stage1 = 1e200;
  try {
    train_stage1(ds, cfg);
    FAIL() << "expected a training error";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 2"), std::string::npos) << e.what();
  }
}

TEST(Training, ConfigValidation) {
  const auto ds = small_dataset(8, 3, 5.0, 16, 21);
  auto cfg = quick_config(1, 1);
  cfg.delta = 1.5;
  EXPECT_THROW(train(ds, cfg), ConfigError);
  cfg = quick_config(1, 1);
  cfg.batch_size = 0;
  EXPECT_THROW(train(ds, cfg), ConfigError);
  cfg = quick_config(1, 1);
  cfg.lr_stage1 = -1;
  EXPECT_THROW(train(ds, cfg), ConfigError);
  EXPECT_THROW(train_mode_from_string("three-stage"), ConfigError);
  EXPECT_EQ(train_mode_from_string("two_stage"), TrainMode::TwoStage);
}

TEST(Training, SmallerStage2LayerCount) {
  const auto ds = small_dataset(8, 3, 5.0, 16, 22);
  auto cfg = quick_config(2, 2);
  cfg.stage2_layers = 4;
  const auto res = train_two_stage(ds, cfg);
  EXPECT_EQ(res.phi.L(), 4u);
}

TEST(Variants, TrainAndCount) {
  const auto ds = small_dataset(8, 3, 8.0, 32, 23);
  auto cfg = quick_config(3, 2);
  const auto b1 = initial_variant(ds, cfg, VariantWeights::Kind::Full);
  EXPECT_EQ(b1.parameter_count(), benchmark1_parameter_count(8, 3, 8));
  const auto b2 = initial_variant(ds, cfg, VariantWeights::Kind::LowRank, 1);
  EXPECT_EQ(b2.parameter_count(), benchmark2_parameter_count(8, 3, 8, 1));
  EXPECT_THROW(initial_variant(ds, cfg, VariantWeights::Kind::LowRank, 3), ConfigError);

  // Benchmark 1 starts exactly at the unfolded detector's initial point.
  detail::Trainer init(ds, cfg, {});
  const auto theta0 = init.initial_theta();
  const auto basic = UnfoldedWeights::basic_policy(cfg.L, cfg.delta);
  for (Eigen::Index p = 0; p < 4; ++p) {
    const Vector a = variant_forward(Vector::Zero(3), ds.observation(p), b1, ds.b);
    EXPECT_LT((a - forward_output(Vector::Zero(3), theta0, ds.observation(p), basic)).cwiseAbs().maxCoeff(), 1e-12);
  }

  const auto r1 = train_variant(ds, cfg, b1);
  const auto r2 = train_variant(ds, cfg, b2);
  ASSERT_EQ(r1.log.size(), 5u);
  EXPECT_LT(r1.log.back().loss_train, r1.log.front().loss_train);
  EXPECT_EQ(r2.log.front().stage, "variant");
  const auto again = train_variant(ds, cfg, b2);
  EXPECT_EQ(again.weights.low_rank[0].P, r2.weights.low_rank[0].P);
}
