#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <csma/csma.hpp>

namespace csma_test {

using csma::LinkPair;
using csma::NetworkSpec;

inline NetworkSpec make_spec(std::vector<double> q, int tau, std::vector<LinkPair> sensing,
                             std::vector<LinkPair> interference,
                             csma::AccessMode mode = csma::AccessMode::basic) {
  NetworkSpec s;
  for (std::size_t i = 0; i < q.size(); ++i) s.links.push_back({std::to_string(i + 1), q[i], std::nullopt});
  s.sensing = csma::SensingGraph(q.size(), sensing);
  s.interference = csma::InterferenceGraph(q.size(), interference);
  s.tau = tau;
  s.mode = mode;
  return s;
}

// Three links; link 1 senses links 2 and 3, which are hidden from each other.
// Links 1 and 3 both interfere with link 2.
inline NetworkSpec fig2(double q1, double q2, double q3, int tau) {
  return make_spec({q1, q2, q3}, tau, {{0, 1}, {0, 2}}, {{0, 1}, {2, 1}});
}

// Same sensing, interference restricted to the sensing edge 1->2.
inline NetworkSpec fig2_rts(double q1, double q2, double q3, int tau) {
  return make_spec({q1, q2, q3}, tau, {{0, 1}, {0, 2}}, {{0, 1}}, csma::AccessMode::rts_cts);
}

inline NetworkSpec path3(double q, int tau) {
  return make_spec({q, q, q}, tau, {{0, 1}, {1, 2}}, {{0, 1}, {1, 0}, {1, 2}, {2, 1}});
}

// Closed forms for the three-link topology above, written so that the
// busy-state weights carry the probability of the link that is actually
// transmitting: the channel of link 3 is busy with weight (1-q1) q3.
struct Fig2Forms {
  double q1, q2, q3;
  int tau;

  double D() const {
    return 1.0 + (1 - q1) * q2 * q3 * tau * tau + (1.0 + (q2 + q3 - 1.0) * (1.0 - q1)) * tau;
  }
  double idle() const { return 1.0 / D(); }
  double link3_busy() const { return (1 - q1) * q3 / D(); }  // (I,B,k)
  double link2_busy() const { return (1 - q1) * q2 / D(); }  // (B,I,k)

  double lambda2_exact() const {
    return tau * q2 * ((1 - q1) * std::pow(1 - q3, tau) * idle() + std::pow(1 - q3, tau - 1) * link3_busy());
  }
  double lambda2_exact_simplified() const {
    return tau * q2 * (1 - q1) * std::pow(1 - q3, tau - 1) / D();
  }
  double lambda2_lower_bound() const {
    return tau * q2 *
           (std::pow(1 - q1, tau) * std::pow(1 - q3, tau) * idle() + std::pow(1 - q3, tau - 1) * link3_busy());
  }
  double lambda2_rts() const { return tau * q2 * (1 - q1) * (1 + tau * q3) / D(); }

  // As printed, with q2 and q3 exchanged in the busy-state weights.
  double literal_link3_busy() const { return (1 - q1) * q2 / D(); }
  double literal_lambda2_tau3() const {
    return 3 * q2 * (1 - q1) * std::pow(1 - q3, 2) * (1 + q2 - q3) /
           (1 + 9 * (1 - q1) * q2 * q3 + 3 * (1 + (q2 + q3 - 1) * (1 - q1)));
  }
  double literal_lambda2_rts() const { return tau * q2 * (1 - q1) * (1 + tau * q2) / D(); }

  // Residual of the merged 3x3 balance system y = A y + b for
  // y = (idle, link3_busy, link2_busy).
  double reduced_residual(double y0, double y1, double y2) const {
    const double r1 = 1 - q1, r2 = 1 - q2, r3 = 1 - q3, t = tau;
    const double a[3][3] = {{r1 * r2 * r3 - 1 / t, (t + 1) / 2 * (r2 - 1), (t + 1) / 2 * (r3 - 1)},
                            {r1 * r2 * (1 - r3), 0, 1 - r3},
                            {r1 * r3 * (1 - r2), 1 - r2, 0}};
    const double b[3] = {1 / t, 0, 0};
    const double y[3] = {y0, y1, y2};
    double worst = 0;
    for (int r = 0; r < 3; ++r) {
      double v = b[r] - y[r];
      for (int c = 0; c < 3; ++c) v += a[r][c] * y[c];
      worst = std::max(worst, std::abs(v));
    }
    return worst;
  }
};

struct InstanceOptions {
  std::size_t min_links = 1, max_links = 4;
  int min_tau = 1, max_tau = 4;
  double q_lo = 0.05, q_hi = 0.9;
  double sensing_density = 0.5;
  double interference_density = 0.5;
  // Interference only along sensing edges.
  bool interference_within_sensing = false;
};

inline NetworkSpec random_instance(std::mt19937_64& rng, const InstanceOptions& o = {}) {
  std::uniform_int_distribution<std::size_t> kd(o.min_links, o.max_links);
  std::uniform_int_distribution<int> td(o.min_tau, o.max_tau);
  std::uniform_real_distribution<double> qd(o.q_lo, o.q_hi), u(0.0, 1.0);
  const std::size_t k = kd(rng);
  const int tau = td(rng);
  std::vector<double> q(k);
  for (auto& v : q) v = qd(rng);
  std::vector<LinkPair> sensing, interference;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      if (u(rng) < o.sensing_density) sensing.emplace_back(a, b);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      if (o.interference_within_sensing &&
          std::find(sensing.begin(), sensing.end(), LinkPair{std::min(a, b), std::max(a, b)}) == sensing.end())
        continue;
      if (u(rng) < o.interference_density) interference.emplace_back(a, b);
    }
  return make_spec(q, tau, sensing, interference,
                   o.interference_within_sensing ? csma::AccessMode::rts_cts : csma::AccessMode::basic);
}

inline csma::SensingGraph random_graph(std::mt19937_64& rng, std::size_t k, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LinkPair> e;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      if (u(rng) < density) e.emplace_back(a, b);
  return csma::SensingGraph(k, e);
}

// Maximal cliques by checking every vertex subset.
inline std::vector<std::vector<std::size_t>> naive_maximal_cliques(const csma::SensingGraph& g) {
  const std::size_t k = g.link_count();
  std::vector<std::uint64_t> adj(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j : g.neighbors(i)) adj[i] |= std::uint64_t{1} << j;
  const auto is_clique = [&](std::uint64_t m) {
    for (std::size_t i = 0; i < k; ++i)
      if ((m >> i & 1) && ((m & ~(std::uint64_t{1} << i)) & ~adj[i])) return false;
    return true;
  };
  std::vector<std::vector<std::size_t>> out;
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << k); ++m) {
    if (!is_clique(m)) continue;
    bool maximal = true;
    for (std::size_t v = 0; v < k && maximal; ++v)
      if (!(m >> v & 1) && is_clique(m | std::uint64_t{1} << v)) maximal = false;
    if (!maximal) continue;
    std::vector<std::size_t> c;
    for (std::size_t v = 0; v < k; ++v)
      if (m >> v & 1) c.push_back(v);
    out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline csma::RichState rich(std::vector<std::uint16_t> r) { return csma::RichState{std::move(r)}; }

inline csma::ProjectedState projected_state(std::vector<csma::ChannelStatus> st, std::vector<int> off) {
  return csma::ProjectedState{std::move(st), std::move(off)};
}

}  // namespace csma_test
