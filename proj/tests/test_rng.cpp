#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <set>

#include "test_support.hpp"

using namespace lordnet;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, DeterministicPerSeedAndStream) {
  CounterRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_stream = false, differs_seed = false;
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    differs_stream |= va != c.next_u64();
    differs_seed |= va != d.next_u64();
  }
  EXPECT_TRUE(differs_stream);
  EXPECT_TRUE(differs_seed);
}

TEST(CounterRng, UniformMoments) {
  CounterRng rng(1, 0);
  double sum = 0.0, sq = 0.0;
  const int N = 100000;
  for (int k = 0; k < N; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / N, 0.5, 0.005);
  EXPECT_NEAR(sq / N - (sum / N) * (sum / N), 1.0 / 12.0, 0.002);
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(2, 0);
  double sum = 0.0, sq = 0.0;
  const int N = 100000;
  for (int k = 0; k < N; ++k) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / N, 0.0, 0.015);
  EXPECT_NEAR(sq / N, 1.0, 0.02);
}

TEST(CounterRng, UniformIndexCoversRange) {
  CounterRng rng(3, 0);
  std::vector<int> hist(7, 0);
  for (int k = 0; k < 70000; ++k) ++hist[rng.uniform_index(7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 400);
}

TEST(CounterRng, PermutationIsBijection) {
  CounterRng rng(4, 0);
  auto p = rng.permutation(257);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
  EXPECT_TRUE(rng.permutation(0).empty());
}

TEST(MixSeed, SpreadsNearbyInputs) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t t = 0; t < 50; ++t) seen.insert(mix_seed(s, t));
  EXPECT_EQ(seen.size(), 2500u);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  for (unsigned threads : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw NumericalError("boom");
                            }),
               NumericalError);
}
