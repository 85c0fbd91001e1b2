#pragma once

// Brute-force slot-level Markov chain. Works directly from the sensing and
// interference graphs, one slot at a time, with no clique transform, no
// renewal compression and no pruned search, so it can serve as an
// independent reference for the analytical throughput.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "report.hpp"
#include "topology.hpp"

namespace csma {

struct OracleLimits {
  std::size_t max_links = 6;
  int max_tau = 5;
};

namespace oracle_detail {

// remaining slots per link, counting the current slot; 0 = silent
using SlotState = std::vector<std::uint8_t>;

struct Step {
  SlotState next;
  double p;
  bool tagged_started;
};

// A link may start in the next slot iff neither it nor any link it senses
// is on the air in the current slot.
inline std::vector<Step> slot_steps(const NetworkSpec& spec, const SlotState& s, std::size_t tagged) {
  const std::size_t k = spec.link_count();
  std::vector<std::size_t> can_start;
  for (std::size_t i = 0; i < k; ++i) {
    if (s[i]) continue;
    bool quiet = true;
    for (std::size_t j : spec.sensing.neighbors(i))
      if (s[j]) quiet = false;
    if (quiet) can_start.push_back(i);
  }
  SlotState aged = s;
  for (auto& r : aged) r = r ? static_cast<std::uint8_t>(r - 1) : 0;

  std::vector<Step> out;
  const std::size_t combos = std::size_t{1} << can_start.size();
  for (std::size_t m = 0; m < combos; ++m) {
    double p = 1.0;
    SlotState next = aged;
    bool tagged_started = false;
    for (std::size_t b = 0; b < can_start.size(); ++b) {
      const std::size_t i = can_start[b];
      const double q = spec.links[i].q;
      if (m >> b & 1) {
        p *= q;
        next[i] = static_cast<std::uint8_t>(spec.tau);
        if (i == tagged) tagged_started = true;
      } else {
        p *= 1.0 - q;
      }
    }
    if (p > 0.0) out.push_back({std::move(next), p, tagged_started});
  }
  return out;
}

// Dense Gaussian elimination with partial pivoting; a is n x n row-major.
inline std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-14)
      throw GuardRailError("slot chain is singular (more than one recurrent class)");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
    x[r] = acc / a[r * n + r];
  }
  return x;
}

}  // namespace oracle_detail

struct SlotChain {
  std::vector<oracle_detail::SlotState> states;
  std::vector<double> stationary;
};

// Reachable slot states from all-silent and their stationary distribution.
inline SlotChain slot_chain(const NetworkSpec& spec, const OracleLimits& limits = {}) {
  require_valid(spec, AccessMode::basic);
  if (spec.link_count() > limits.max_links || spec.tau > limits.max_tau)
    throw GuardRailError("oracle guard rail: needs K <= " + std::to_string(limits.max_links) +
                         " and tau <= " + std::to_string(limits.max_tau) + " (got K=" +
                         std::to_string(spec.link_count()) + ", tau=" + std::to_string(spec.tau) + ")");
  using oracle_detail::SlotState;
  std::map<SlotState, std::size_t> index;
  std::vector<SlotState> states{SlotState(spec.link_count(), 0)};
  index.emplace(states[0], 0);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  for (std::size_t cur = 0; cur < states.size(); ++cur) {
    std::vector<std::pair<std::size_t, double>> row;
    for (auto& st : oracle_detail::slot_steps(spec, states[cur], spec.link_count())) {
      auto [it, fresh] = index.emplace(st.next, states.size());
      if (fresh) states.push_back(st.next);
      row.emplace_back(it->second, st.p);
    }
    rows.push_back(std::move(row));
  }

  // Balance equations sum_s pi_s P(s, t) = pi_t, the last one replaced by
  // normalization. Rows of the system are indexed by t.
  const std::size_t n = states.size();
  std::vector<double> a(n * n, 0.0), b(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto [t, p] : rows[s]) a[t * n + s] += p;
    a[s * n + s] -= 1.0;
  }
  for (std::size_t s = 0; s < n; ++s) a[(n - 1) * n + s] = 1.0;
  b[n - 1] = 1.0;
  SlotChain chain;
  chain.stationary = oracle_detail::gauss_solve(std::move(a), std::move(b), n);
  chain.states = std::move(states);
  return chain;
}

// Throughput of every link: τ times the stationary rate at which the link
// starts a transmission during whose τ slots no interferer is on the air.
inline ThroughputReport slot_chain_throughput(const NetworkSpec& spec, const OracleLimits& limits = {}) {
  const auto chain = slot_chain(spec, limits);
  ThroughputReport report;
  report.method = Method::oracle;
  for (const auto& l : spec.links) report.link_ids.push_back(l.id);
  report.per_link.assign(spec.link_count(), 0.0);
  report.metadata.spec_hash = hex64(spec_hash(spec));
  report.metadata.state_count = chain.states.size();

  using oracle_detail::SlotState;
  for (std::size_t i = 0; i < spec.link_count(); ++i) {
    const auto& rs = spec.interference.interferers_of(i);
    const auto clean = [&](const SlotState& s) {
      for (std::size_t j : rs)
        if (s[j]) return false;
      return true;
    };
    double rate = 0.0;
    for (std::size_t s = 0; s < chain.states.size(); ++s) {
      if (chain.stationary[s] == 0.0) continue;
      for (auto& start : oracle_detail::slot_steps(spec, chain.states[s], i)) {
        if (!start.tagged_started || !clean(start.next)) continue;
        // Push the full slot distribution forward over the remaining τ-1
        // slots of the transmission, discarding any path that puts an
        // interferer on the air.
        std::map<SlotState, double> frontier{{start.next, 1.0}};
        for (int slot = 1; slot < spec.tau; ++slot) {
          std::map<SlotState, double> next;
          for (const auto& [st, p] : frontier)
            for (auto& step : oracle_detail::slot_steps(spec, st, spec.link_count()))
              if (clean(step.next)) next[step.next] += p * step.p;
          frontier = std::move(next);
        }
        double survive = 0.0;
        for (const auto& [_, p] : frontier) survive += p;
        rate += chain.stationary[s] * start.p * survive;
      }
    }
    report.per_link[i] = spec.tau * rate;
  }
  return report;
}

}  // namespace csma
