#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"

using namespace csma;
using csma_test::fig2;
using csma_test::projected_state;
using csma_test::rich;
constexpr auto I = ChannelStatus::idle;
constexpr auto B = ChannelStatus::busy;

TEST(Eligible, Fig2) {
  auto layout = build_layout(fig2(0.5, 0.5, 0.5, 3));
  EXPECT_EQ(eligible_links(layout, rich({0, 0, 0})), (std::vector<LinkId>{0, 1, 2}));
  EXPECT_EQ(eligible_links(layout, rich({0, 0, 2})), (std::vector<LinkId>{1}));
  EXPECT_TRUE(eligible_links(layout, rich({3, 0, 0})).empty());
  EXPECT_TRUE(eligible_links(layout, rich({0, 1, 3})).empty());
}

TEST(HoldingTime, ProjectedStates) {
  EXPECT_EQ(holding_time(projected_state({I, B}, {-2}), 3), 1);
  EXPECT_EQ(holding_time(projected_state({B, B}, {0}), 3), 3);
  EXPECT_EQ(holding_time(projected_state({I, I}, {0}), 3), 1);
  EXPECT_EQ(holding_time(projected_state({B, B}, {1}), 3), 2);
}

TEST(HoldingTime, RichAgreesWithProjection) {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 40; ++n) {
    auto spec = csma_test::random_instance(rng);
    auto sol = solve_renewal(spec);
    for (std::size_t s = 0; s < sol.size(); ++s) {
      const auto p = project_state(sol.space.states[s], sol.layout(), sol.tau());
      EXPECT_EQ(holding_time(p, sol.tau()), sol.holding[s]);
    }
  }
}

TEST(StateSpace, SingleLink) {
  auto spec = csma_test::make_spec({0.4}, 3, {}, {});
  auto states = enumerate_states(build_layout(spec), spec);
  // Once every channel is busy the chain jumps to the end of the
  // transmission, so remainings 2 and 1 are never epochs.
  ASSERT_EQ(states.size(), 2u);
  EXPECT_TRUE(states[0].all_idle());
  EXPECT_EQ(states[1].remaining, std::vector<std::uint16_t>{3});
}

TEST(StateSpace, Fig2Projections) {
  auto sol = solve_renewal(fig2(0.5, 0.5, 0.5, 3));
  std::set<std::string> names;
  for (const auto& s : sol.space.states) names.insert(to_string(project_state(s, sol.layout(), 3)));
  for (const char* n : {"(I,I,0)", "(I,B,0)", "(I,B,-1)", "(I,B,-2)", "(B,I,0)", "(B,I,1)", "(B,I,2)"})
    EXPECT_TRUE(names.count(n)) << n;
  for (const auto& n : names)
    if (n.rfind("(I", 0) != 0 && n.rfind("(B,I", 0) != 0) EXPECT_EQ(n.rfind("(B,B", 0), 0u) << n;
}

TEST(StateSpace, NoAttemptsMeansOneState) {
  auto spec = fig2(0.0, 0.0, 0.0, 3);
  EXPECT_EQ(enumerate_states(build_layout(spec), spec).size(), 1u);
  auto sol = solve_renewal(spec);
  EXPECT_DOUBLE_EQ(sol.limiting[0], 1.0);
}

TEST(StateSpace, CapRaisesGuardRail) {
  auto spec = fig2(0.5, 0.5, 0.5, 5);
  EXPECT_THROW(build_state_space(spec, build_layout(spec), 5), GuardRailError);
}

TEST(Transitions, Fig2Examples) {
  const double q1 = 0.3, q2 = 0.6, q3 = 0.2;
  auto spec = fig2(q1, q2, q3, 3);
  auto space = build_state_space(spec, build_layout(spec));
  const auto prob = [&](const csma::RichState& from, const csma::RichState& to) {
    for (const auto& t : space.transitions[space.index_of(from)])
      if (t.to == space.index_of(to)) return t.p;
    return 0.0;
  };
  EXPECT_NEAR(prob(rich({0, 0, 0}), rich({0, 3, 0})), (1 - q1) * q2 * (1 - q3), 1e-15);
  EXPECT_NEAR(prob(rich({0, 0, 0}), rich({0, 0, 0})), (1 - q1) * (1 - q2) * (1 - q3), 1e-15);
  EXPECT_NEAR(prob(rich({0, 0, 1}), rich({0, 3, 0})), q2, 1e-15);
  EXPECT_NEAR(prob(rich({0, 0, 1}), rich({0, 0, 0})), 1 - q2, 1e-15);
  for (const auto& row : space.transitions) {
    double s = 0;
    for (const auto& t : row) s += t.p;
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(Embedded, SingleLink) {
  const double q = 0.35;
  auto sol = solve_renewal(csma_test::make_spec({q}, 3, {}, {}));
  ASSERT_EQ(sol.size(), 2u);
  EXPECT_NEAR(sol.embedded[0], 1 / (1 + q), 1e-13);
  EXPECT_NEAR(sol.embedded[1], q / (1 + q), 1e-13);
  EXPECT_EQ(sol.holding[1], 3);
  EXPECT_NEAR(sol.limiting[0], 1 / (1 + q * 3), 1e-13);
}

TEST(Embedded, SymmetricPair) {
  auto sol = solve_renewal(csma_test::make_spec({0.4, 0.4}, 3, {{0, 1}}, {}));
  const auto a = sol.space.index_of(rich({3, 0})), b = sol.space.index_of(rich({0, 3}));
  EXPECT_NEAR(sol.embedded[a], sol.embedded[b], 1e-14);
}

TEST(Embedded, ResidualAndNormalization) {
  std::mt19937_64 rng(23);
  for (int n = 0; n < 60; ++n) {
    auto sol = solve_renewal(csma_test::random_instance(rng));
    EXPECT_LE(sol.residual, 1e-12);
    EXPECT_NEAR(std::accumulate(sol.limiting.begin(), sol.limiting.end(), 0.0), 1.0, 1e-12);
    for (double v : sol.limiting) EXPECT_GE(v, 0.0);
  }
}

TEST(Embedded, IterativePathMatchesDirect) {
  auto spec = fig2(0.3, 0.6, 0.2, 4);
  auto space = build_state_space(spec, build_layout(spec));
  auto direct = embedded_steady_state(space.transitions, 0);
  auto iterative = embedded_steady_state(space.transitions, 0, 1);
  for (std::size_t s = 0; s < direct.pi.size(); ++s) EXPECT_NEAR(direct.pi[s], iterative.pi[s], 1e-12);
}

TEST(Embedded, ReducibleChainUsesAbsorption) {
  // q = 1 for two mutually sensing links: they collide forever once started;
  // the all-idle state is transient.
  auto sol = solve_renewal(csma_test::make_spec({1.0, 1.0}, 2, {{0, 1}}, {}));
  EXPECT_LE(sol.residual, 1e-12);
  EXPECT_NEAR(std::accumulate(sol.limiting.begin(), sol.limiting.end(), 0.0), 1.0, 1e-12);
}

TEST(Limiting, Fig2SpotValues) {
  auto sol = solve_renewal(fig2(0.5, 0.5, 0.5, 3));
  auto pl = projected_limiting(sol);
  EXPECT_NEAR(pl.at(projected_state({I, I}, {0})), 1 / 5.125, 1e-12);
  for (int k : {0, -1, -2}) EXPECT_NEAR(pl.at(projected_state({I, B}, {k})), 0.25 / 5.125, 1e-12);
  for (int k : {0, 1, 2}) EXPECT_NEAR(pl.at(projected_state({B, I}, {k})), 0.25 / 5.125, 1e-12);
}

TEST(Project, Examples) {
  auto layout = build_layout(fig2(0.5, 0.5, 0.5, 3));
  EXPECT_EQ(to_string(project_state(rich({0, 0, 1}), layout, 3)), "(I,B,-2)");
  EXPECT_EQ(to_string(project_state(rich({0, 0, 0}), layout, 3)), "(I,I,0)");
  EXPECT_EQ(to_string(project_state(rich({3, 0, 0}), layout, 3)), "(B,B,0)");
  EXPECT_EQ(to_string(project_state(rich({0, 2, 0}), layout, 3)), "(B,I,1)");
}

TEST(Signature, Examples) {
  auto s = state_signature(projected_state({I, B}, {-2}));
  EXPECT_EQ(s.idle, (std::vector<ChannelId>{0}));
  EXPECT_EQ(s.busy_groups, (std::vector<std::vector<ChannelId>>{{1}}));
  s = state_signature(projected_state({B, B}, {0}));
  EXPECT_TRUE(s.idle.empty());
  EXPECT_EQ(s.busy_groups, (std::vector<std::vector<ChannelId>>{{0, 1}}));
  s = state_signature(projected_state({I, I}, {0}));
  EXPECT_EQ(s.idle, (std::vector<ChannelId>{0, 1}));
  EXPECT_TRUE(s.busy_groups.empty());
}

TEST(Signature, IdleContainingClassesShareProbability) {
  std::mt19937_64 rng(29);
  for (int n = 0; n < 40; ++n) {
    auto sol = solve_renewal(csma_test::random_instance(rng));
    std::map<Signature, std::vector<double>> classes;
    for (const auto& [p, v] : projected_limiting(sol)) {
      auto sig = state_signature(p);
      if (!sig.idle.empty()) classes[sig].push_back(v);
    }
    for (const auto& [sig, vs] : classes)
      for (double v : vs) EXPECT_NEAR(v, vs.front(), 1e-12) << to_string(sig);
  }
}
