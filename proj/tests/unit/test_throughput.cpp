#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"

using namespace csma;
using csma_test::fig2;
using csma_test::rich;

TEST(Eligibility, Fig2Link2) {
  auto sol = solve_renewal(fig2(0.5, 0.5, 0.5, 3));
  std::set<std::string> names;
  for (auto s : eligible_states(sol, 1)) names.insert(to_string(project_state(sol.space.states[s], sol.layout(), 3)));
  EXPECT_EQ(names, (std::set<std::string>{"(I,I,0)", "(I,B,0)", "(I,B,-1)", "(I,B,-2)"}));
  // Link 1 holds every channel.
  auto y1 = eligible_states(sol, 0);
  ASSERT_EQ(y1.size(), 1u);
  EXPECT_TRUE(sol.space.states[y1[0]].all_idle());
}

TEST(Eligibility, SingleLink) {
  auto sol = solve_renewal(csma_test::make_spec({0.5}, 3, {}, {}));
  auto y = eligible_states(sol, 0);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_TRUE(sol.space.states[y[0]].all_idle());
}

TEST(InterruptionFree, Fig2Cases) {
  const double q1 = 0.3, q2 = 0.45, q3 = 0.2;
  auto spec = fig2(q1, q2, q3, 3);
  auto sol = solve_renewal(spec);
  EXPECT_NEAR(interruption_free_exact(sol, spec, rich({0, 0, 0}), 1), (1 - q1) * std::pow(1 - q3, 3), 1e-15);
  EXPECT_EQ(interruption_free_exact(sol, spec, rich({0, 0, 3}), 1), 0.0);
  EXPECT_EQ(interruption_free_exact(sol, spec, rich({0, 0, 2}), 1), 0.0);
  EXPECT_NEAR(interruption_free_exact(sol, spec, rich({0, 0, 1}), 1), std::pow(1 - q3, 2), 1e-15);
  EXPECT_THROW(interruption_free_exact(sol, spec, rich({0, 3, 0}), 1), std::invalid_argument);
}

TEST(Exact, Fig2SpotValue) {
  auto r = throughput_exact(fig2(0.5, 0.5, 0.5, 3));
  EXPECT_NEAR(r.per_link[1], 0.1875 / 5.125, 1e-12);
  EXPECT_EQ(r.method, Method::exact);
  EXPECT_EQ(r.link_ids, (std::vector<std::string>{"1", "2", "3"}));
}

TEST(Exact, SingleLinkAndZeroQ) {
  for (int tau : {1, 2, 5}) {
    const double q = 0.3;
    auto r = throughput_exact(csma_test::make_spec({q}, tau, {}, {}));
    EXPECT_NEAR(r.per_link[0], q * tau / (1 + q * tau), 1e-13);
  }
  auto r = throughput_exact(fig2(0.5, 0.0, 0.5, 3));
  EXPECT_EQ(r.per_link[1], 0.0);
}

TEST(Exact, MatchesCorrectedClosedForm) {
  for (double q1 : {0.2, 0.7})
    for (double q2 : {0.1, 0.5})
      for (double q3 : {0.3, 0.9})
        for (int tau : {2, 3, 5}) {
          csma_test::Fig2Forms f{q1, q2, q3, tau};
          auto r = throughput_exact(fig2(q1, q2, q3, tau));
          EXPECT_NEAR(r.per_link[1], f.lambda2_exact(), 1e-12);
          EXPECT_NEAR(r.per_link[1], f.lambda2_exact_simplified(), 1e-12);
        }
}

TEST(Gap, Fig2Link3) {
  auto layout = build_layout(fig2(0.5, 0.5, 0.5, 3));
  EXPECT_EQ(earliest_attempt_gap(layout, rich({0, 0, 0}), 2), 0);
  EXPECT_EQ(earliest_attempt_gap(layout, rich({0, 0, 1}), 2), 1);
  EXPECT_EQ(earliest_attempt_gap(layout, rich({0, 2, 0}), 1), 2);
}

TEST(LowerBound, Fig2DisplayedExpression) {
  const double q1 = 0.25, q2 = 0.6, q3 = 0.35;
  auto spec = fig2(q1, q2, q3, 3);
  auto sol = solve_renewal(spec);
  auto pl = projected_limiting(sol);
  const double ii = pl.at(csma_test::projected_state({ChannelStatus::idle, ChannelStatus::idle}, {0}));
  const double ib2 = pl.at(csma_test::projected_state({ChannelStatus::idle, ChannelStatus::busy}, {-2}));
  const double expected = 3 * q2 * (std::pow(1 - q1, 3) * std::pow(1 - q3, 3) * ii + std::pow(1 - q3, 2) * ib2);
  EXPECT_NEAR(throughput_lower_bound(spec, sol).per_link[1], expected, 1e-13);
}

TEST(LowerBound, NoInterferersEqualsExact) {
  auto spec = csma_test::make_spec({0.3, 0.5, 0.2}, 3, {{0, 1}, {1, 2}}, {});
  auto sol = solve_renewal(spec);
  auto lb = throughput_lower_bound(spec, sol), ex = throughput_exact(spec, sol);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(lb.per_link[i], ex.per_link[i], 1e-14);
}

TEST(LowerBound, DominatedByExact) {
  std::mt19937_64 rng(31);
  csma_test::InstanceOptions o;
  o.max_tau = 5;
  for (int n = 0; n < 60; ++n) {
    auto spec = csma_test::random_instance(rng, o);
    auto sol = solve_renewal(spec);
    auto lb = throughput_lower_bound(spec, sol), ex = throughput_exact(spec, sol);
    for (std::size_t i = 0; i < spec.link_count(); ++i) {
      EXPECT_LE(lb.per_link[i], ex.per_link[i] + 1e-12);
      EXPECT_GE(lb.per_link[i], 0.0);
    }
  }
}

TEST(RtsCts, Fig2SpotValue) {
  auto r = throughput_rtscts(csma_test::fig2_rts(0.5, 0.5, 0.5, 3));
  EXPECT_NEAR(r.per_link[1], 1.875 / 5.125, 1e-12);
  EXPECT_EQ(throughput_rtscts(csma_test::fig2_rts(0.5, 0.0, 0.5, 3)).per_link[1], 0.0);
}

TEST(RtsCts, RejectsHiddenInterference) {
  try {
    throughput_rtscts(fig2(0.5, 0.5, 0.5, 3));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("G_I ⊄ G_S"), std::string::npos);
  }
}

TEST(RtsCts, CollapsesToExactWhenInterferenceInsideSensing) {
  std::mt19937_64 rng(37);
  csma_test::InstanceOptions o;
  o.interference_within_sensing = true;
  o.sensing_density = 0.6;
  o.interference_density = 0.7;
  for (int n = 0; n < 40; ++n) {
    auto spec = csma_test::random_instance(rng, o);
    auto sol = solve_renewal(spec);
    auto a = throughput_rtscts(spec, sol), b = throughput_exact(spec, sol);
    for (std::size_t i = 0; i < spec.link_count(); ++i) EXPECT_NEAR(a.per_link[i], b.per_link[i], 1e-10);
  }
}

TEST(Exact, FlowInTheMiddle) {
  for (double q : {0.1, 0.3, 0.6})
    for (int tau : {2, 4}) {
      auto r = throughput_exact(csma_test::path3(q, tau));
      EXPECT_LT(r.per_link[1], r.per_link[0]);
      EXPECT_LT(r.per_link[1], r.per_link[2]);
      EXPECT_NEAR(r.per_link[0], r.per_link[2], 1e-13);
    }
}

TEST(Exact, PermutationEquivariance) {
  std::mt19937_64 rng(41);
  for (int n = 0; n < 25; ++n) {
    auto spec = csma_test::random_instance(rng);
    const std::size_t k = spec.link_count();
    std::vector<LinkId> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto a = throughput_exact(spec), b = throughput_exact(relabel(spec, perm));
    for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(a.per_link[i], b.per_link[perm[i]], 1e-11);
  }
}

TEST(Report, CarriesMetadata) {
  auto spec = fig2(0.5, 0.5, 0.5, 3);
  auto r = throughput_lower_bound(spec);
  EXPECT_EQ(r.method, Method::lower_bound);
  EXPECT_EQ(r.metadata.spec_hash, hex64(spec_hash(spec)));
  EXPECT_GT(r.metadata.state_count, 0u);
  EXPECT_LE(r.metadata.residual, 1e-12);
}
