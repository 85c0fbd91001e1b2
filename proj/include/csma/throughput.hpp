#pragma once

// Per-link saturation throughput from a solved renewal model.
//
//   λ_i = τ Σ_{μ ∈ Y_i} q_i φ_i(μ) π̃_μ
//
// where Y_i are the states in which link i may attempt and φ_i(μ) is the
// probability that an attempt started right after μ sees no interferer
// active in any of its τ slots. Three variants differ only in φ: exact
// (depth-first over future attempt combinations), a product-form lower
// bound, and the closed form valid when interference implies sensing.

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "renewal.hpp"
#include "report.hpp"
#include "topology.hpp"

namespace csma {

namespace detail {

inline LinkMask interferer_mask(const NetworkSpec& spec, LinkId i) {
  LinkMask m = 0;
  for (LinkId j : spec.interference.interferers_of(i)) m |= LinkMask{1} << j;
  return m;
}

inline ThroughputReport empty_report(const NetworkSpec& spec, Method m, const RenewalSolution* sol) {
  ThroughputReport r;
  r.method = m;
  for (const auto& l : spec.links) r.link_ids.push_back(l.id);
  r.per_link.assign(spec.link_count(), 0.0);
  r.metadata.spec_hash = hex64(spec_hash(spec));
  if (sol) {
    r.metadata.residual = sol->residual;
    r.metadata.state_count = sol->size();
  }
  return r;
}

// P_nt as an indicator: no interferer still on the air at the attempt slot.
// An interferer in its last slot (remaining 1) ends before the attempt.
inline bool no_interferer_transmitting(const RichState& s, LinkMask interferers) {
  while (interferers) {
    const auto j = static_cast<std::size_t>(std::countr_zero(interferers));
    interferers &= interferers - 1;
    if (s.remaining[j] >= 2) return false;
  }
  return true;
}

}  // namespace detail

// Y_i: indices of states in which every channel of link i is idle.
inline std::vector<std::size_t> eligible_states(const RenewalSolution& sol, LinkId i) {
  std::vector<std::size_t> out;
  const auto& layout = sol.layout();
  for (std::size_t s = 0; s < sol.size(); ++s)
    if ((busy_channels(layout, sol.space.states[s]) & layout.link_channels[i]) == 0)
      out.push_back(s);
  return out;
}

// φ_i over the states of one solved model. Memoizes the continuation
// probability per rich state (the tagged link's remaining time is part of
// the state), so repeated evaluations for the same link share work.
class InterruptionFreeEvaluator {
 public:
  InterruptionFreeEvaluator(const RenewalSolution& sol, const NetworkSpec& spec, LinkId link)
      : sol_(sol),
        link_(link),
        interferers_(detail::interferer_mask(spec, link)) {}

  // Probability that link i, attempting at the slot after `state`, completes
  // with no interferer active during its τ slots. `state` must lie in Y_i.
  double operator()(const RichState& state) {
    const auto& layout = sol_.layout();
    if (busy_channels(layout, state) & layout.link_channels[link_])
      throw std::invalid_argument("state is not in Y_i for the tagged link");
    if (!detail::no_interferer_transmitting(state, interferers_)) return 0.0;
    double total = 0.0;
    for_each_successor(layout, sol_.space.q, sol_.tau(), state, LinkMask{1} << link_, interferers_,
                       [&](const RichState& next, double p, LinkMask) { total += p * continue_from(next); });
    return total;
  }

 private:
  double continue_from(const RichState& s) {
    const int h = holding_time(sol_.layout(), s);
    if (s.remaining[link_] <= h) return 1.0;
    if (auto it = memo_.find(s); it != memo_.end()) return it->second;
    double total = 0.0;
    for_each_successor(sol_.layout(), sol_.space.q, sol_.tau(), s, 0, interferers_,
                       [&](const RichState& next, double p, LinkMask) { total += p * continue_from(next); });
    memo_.emplace(s, total);
    return total;
  }

  const RenewalSolution& sol_;
  LinkId link_;
  LinkMask interferers_;
  std::unordered_map<RichState, double, RichStateHash> memo_;
};

inline double interruption_free_exact(const RenewalSolution& sol, const NetworkSpec& spec,
                                      const RichState& state, LinkId i) {
  InterruptionFreeEvaluator eval(sol, spec, i);
  return eval(state);
}

// g_j: slots after the attempt slot before link j could first attempt, if
// the transmissions active in `s` simply run out. Zero when j's channels are
// idle in s; otherwise the largest remaining time over j's busy channels
// (the last busy slot is followed by one sensing slot).
inline int earliest_attempt_gap(const ChannelLayout& layout, const RichState& s, LinkId j) {
  int g = 0;
  for (std::size_t k = 0; k < s.remaining.size(); ++k) {
    if (!s.remaining[k]) continue;
    if (layout.link_channels[k] & layout.link_channels[j]) g = std::max<int>(g, s.remaining[k]);
  }
  return g;
}

inline ThroughputReport throughput_exact(const NetworkSpec& spec, const RenewalSolution& sol) {
  auto report = detail::empty_report(spec, Method::exact, &sol);
  for (LinkId i = 0; i < spec.link_count(); ++i) {
    const double qi = spec.links[i].q;
    if (qi <= 0.0) continue;
    InterruptionFreeEvaluator phi(sol, spec, i);
    double acc = 0.0;
    for (std::size_t s : eligible_states(sol, i)) {
      if (sol.limiting[s] == 0.0) continue;
      acc += phi(sol.space.states[s]) * sol.limiting[s];
    }
    report.per_link[i] = spec.tau * qi * acc;
  }
  return report;
}

inline ThroughputReport throughput_exact(const NetworkSpec& spec) {
  return throughput_exact(spec, solve_renewal(spec));
}

// Lower bound: φ_i(μ) >= Π_{j ∈ R_i} (1 - q_j)^{τ - g_j}. An interferer that
// senses the tagged link and cannot attempt at the first slot stays blocked
// by the tagged transmission itself, so its exponent is zero.
inline ThroughputReport throughput_lower_bound(const NetworkSpec& spec, const RenewalSolution& sol) {
  auto report = detail::empty_report(spec, Method::lower_bound, &sol);
  const auto& layout = sol.layout();
  for (LinkId i = 0; i < spec.link_count(); ++i) {
    const double qi = spec.links[i].q;
    if (qi <= 0.0) continue;
    const auto& rs = spec.interference.interferers_of(i);
    const LinkMask rmask = detail::interferer_mask(spec, i);
    double acc = 0.0;
    for (std::size_t s : eligible_states(sol, i)) {
      const auto& st = sol.space.states[s];
      if (!detail::no_interferer_transmitting(st, rmask)) continue;
      double factor = 1.0;
      for (LinkId j : rs) {
        int g = earliest_attempt_gap(layout, st, j);
        if (g > 0 && spec.sensing.adjacent(i, j)) g = spec.tau;
        const int exponent = std::max(0, spec.tau - g);
        factor *= std::pow(1.0 - spec.links[j].q, exponent);
      }
      acc += factor * sol.limiting[s];
    }
    report.per_link[i] = spec.tau * qi * acc;
  }
  return report;
}

inline ThroughputReport throughput_lower_bound(const NetworkSpec& spec) {
  return throughput_lower_bound(spec, solve_renewal(spec));
}

// Interference inside sensing: collisions can only happen at initiation,
// φ_i(μ) = Π_{j ∈ K^μ ∩ R_i} (1 - q_j).
inline ThroughputReport throughput_rtscts(const NetworkSpec& spec, const RenewalSolution& sol) {
  require_valid(spec, AccessMode::rts_cts);
  auto report = detail::empty_report(spec, Method::rts_cts, &sol);
  for (LinkId i = 0; i < spec.link_count(); ++i) {
    const double qi = spec.links[i].q;
    if (qi <= 0.0) continue;
    const LinkMask rmask = detail::interferer_mask(spec, i);
    double acc = 0.0;
    for (std::size_t s : eligible_states(sol, i)) {
      LinkMask contenders = eligible_mask(sol.layout(), sol.space.states[s]) & rmask;
      double phi = 1.0;
      while (contenders) {
        phi *= 1.0 - spec.links[std::countr_zero(contenders)].q;
        contenders &= contenders - 1;
      }
      acc += phi * sol.limiting[s];
    }
    report.per_link[i] = spec.tau * qi * acc;
  }
  return report;
}

inline ThroughputReport throughput_rtscts(const NetworkSpec& spec) {
  require_valid(spec, AccessMode::rts_cts);
  return throughput_rtscts(spec, solve_renewal(spec));
}

}  // namespace csma
