#include <random>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"

using namespace csma;

TEST(Oracle, SingleLink) {
  for (int tau : {1, 3, 5}) {
    const double q = 0.4;
    auto r = slot_chain_throughput(csma_test::make_spec({q}, tau, {}, {}));
    EXPECT_NEAR(r.per_link[0], q * tau / (1 + q * tau), 1e-13);
  }
}

TEST(Oracle, Fig2SpotValue) {
  auto r = slot_chain_throughput(csma_test::fig2(0.5, 0.5, 0.5, 3));
  EXPECT_NEAR(r.per_link[1], 0.1875 / 5.125, 1e-12);
  EXPECT_EQ(r.method, Method::oracle);
}

TEST(Oracle, ZeroProbabilities) {
  auto r = slot_chain_throughput(csma_test::fig2(0, 0, 0, 3));
  for (double v : r.per_link) EXPECT_EQ(v, 0.0);
}

TEST(Oracle, StationaryDistributionSumsToOne) {
  auto chain = slot_chain(csma_test::fig2(0.2, 0.4, 0.6, 4));
  double s = 0;
  for (double v : chain.stationary) s += v;
  EXPECT_NEAR(s, 1.0, 1e-13);
}

TEST(Oracle, GuardRails) {
  std::vector<double> q(7, 0.3);
  EXPECT_THROW(slot_chain(csma_test::make_spec(q, 2, {}, {})), GuardRailError);
  EXPECT_THROW(slot_chain(csma_test::make_spec({0.3}, 6, {}, {})), GuardRailError);
}

TEST(Oracle, AgreesWithRenewalModel) {
  std::mt19937_64 rng(43);
  for (int n = 0; n < 25; ++n) {
    auto spec = csma_test::random_instance(rng);
    auto a = slot_chain_throughput(spec), b = throughput_exact(spec);
    for (std::size_t i = 0; i < spec.link_count(); ++i) EXPECT_NEAR(a.per_link[i], b.per_link[i], 1e-9);
  }
}
