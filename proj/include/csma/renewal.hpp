#pragma once

// Markov renewal model of the equivalent multi-channel network.
//
// The internal state records which links are transmitting and how many slots
// each has left, measured from the current epoch. The channel-level state
// (busy/idle per channel plus start-time offsets) is recovered by projection.
// Timing is slot aligned: a link that saw all of its channels idle in the
// slot before an epoch may start transmitting at that epoch.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "cliques.hpp"
#include "topology.hpp"

namespace csma {

struct RichState {
  // remaining[i] == 0 means link i is not transmitting.
  std::vector<std::uint16_t> remaining;

  bool active(LinkId i) const { return remaining[i] != 0; }
  bool all_idle() const {
    return std::all_of(remaining.begin(), remaining.end(), [](auto r) { return r == 0; });
  }
  LinkMask active_mask() const {
    LinkMask m = 0;
    for (std::size_t i = 0; i < remaining.size(); ++i)
      if (remaining[i]) m |= LinkMask{1} << i;
    return m;
  }

  auto operator<=>(const RichState&) const = default;
};

struct RichStateHash {
  std::size_t operator()(const RichState& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto r : s.remaining) {
      h ^= r;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

inline ChannelMask busy_channels(const ChannelLayout& layout, const RichState& s) {
  ChannelMask busy = 0;
  for (std::size_t i = 0; i < s.remaining.size(); ++i)
    if (s.remaining[i]) busy |= layout.link_channels[i];
  return busy;
}

// K^μ: links whose channels are all idle.
inline LinkMask eligible_mask(const ChannelLayout& layout, const RichState& s) {
  const ChannelMask busy = busy_channels(layout, s);
  LinkMask m = 0;
  for (std::size_t i = 0; i < layout.link_count(); ++i)
    if ((layout.link_channels[i] & busy) == 0) m |= LinkMask{1} << i;
  return m;
}

inline std::vector<LinkId> eligible_links(const ChannelLayout& layout, const RichState& s) {
  return detail::mask_to_links(eligible_mask(layout, s));
}

// Slots until the next embedded transition: one while any channel is idle,
// otherwise until the earliest transmission ends.
inline int holding_time(const ChannelLayout& layout, const RichState& s) {
  if (busy_channels(layout, s) != layout.all_channels()) return 1;
  int h = std::numeric_limits<int>::max();
  for (auto r : s.remaining)
    if (r) h = std::min<int>(h, r);
  return h;
}

// Calls fn(next_state, probability, attempt_mask) once per attempt
// combination leaving state `s`. Links in `force_attempt` attempt with
// probability one; links in `forbid` are pruned (the branch in which they
// attempt is dropped, leaving only the 1 - q_j abstain weight).
template <class Fn>
void for_each_successor(const ChannelLayout& layout, const std::vector<double>& q, int tau,
                        const RichState& s, LinkMask force_attempt, LinkMask forbid, Fn&& fn) {
  const int h = holding_time(layout, s);
  RichState base = s;
  for (auto& r : base.remaining) r = r > h ? static_cast<std::uint16_t>(r - h) : 0;

  // Nobody can start while every channel is busy.
  const LinkMask eligible = h == 1 ? eligible_mask(layout, s) : 0;
  LinkMask fixed = eligible & force_attempt;
  double fixed_p = 1.0;
  std::vector<LinkId> branching;
  for (LinkId i : detail::mask_to_links(eligible & ~force_attempt)) {
    const LinkMask bit = LinkMask{1} << i;
    if (forbid & bit) {
      fixed_p *= 1.0 - q[i];
    } else if (q[i] <= 0.0) {
      continue;
    } else if (q[i] >= 1.0) {
      fixed |= bit;
    } else {
      branching.push_back(i);
    }
  }
  if (fixed_p == 0.0) return;

  const auto emit = [&](LinkMask attempts, double p) {
    RichState next = base;
    LinkMask m = attempts;
    while (m) {
      next.remaining[std::countr_zero(m)] = static_cast<std::uint16_t>(tau);
      m &= m - 1;
    }
    fn(next, p, attempts);
  };

  // Iterative depth-first walk over the branching links.
  struct Frame {
    std::size_t depth;
    LinkMask attempts;
    double p;
  };
  std::vector<Frame> stack{{0, fixed, fixed_p}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.depth == branching.size()) {
      emit(f.attempts, f.p);
      continue;
    }
    const LinkId i = branching[f.depth];
    // Push the attempt branch first so the abstain branch is visited first.
    stack.push_back({f.depth + 1, f.attempts | (LinkMask{1} << i), f.p * q[i]});
    stack.push_back({f.depth + 1, f.attempts, f.p * (1.0 - q[i])});
  }
}

inline std::size_t default_state_cap() {
  if (const char* env = std::getenv("CSMA_STATE_CAP")) {
    char* end = nullptr;
    auto v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 2'000'000;
}

// Upper bound 2^N τ^{2(N-1)} on the channel-level state count.
inline double state_count_bound(std::size_t channels, int tau) {
  return std::pow(2.0, static_cast<double>(channels)) *
         std::pow(static_cast<double>(tau), 2.0 * (static_cast<double>(channels) - 1.0));
}

struct Transition {
  std::size_t to;
  double p;
};

using TransitionRows = std::vector<std::vector<Transition>>;

struct StateSpace {
  ChannelLayout layout;
  std::vector<double> q;
  int tau = 1;
  std::vector<RichState> states;  // index 0 is the all-idle state
  std::unordered_map<RichState, std::size_t, RichStateHash> index;
  TransitionRows transitions;

  std::size_t size() const noexcept { return states.size(); }
  std::size_t link_count() const noexcept { return q.size(); }

  std::size_t index_of(const RichState& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw std::logic_error("state is not in the reachable state space");
    return it->second;
  }
};

namespace detail {

inline void check_analyzable(const NetworkSpec& spec) {
  require_valid(spec, AccessMode::basic);
  if (spec.link_count() > kMaxMaskedLinks)
    throw GuardRailError("analytical methods support at most 64 links");
  if (spec.tau > std::numeric_limits<std::uint16_t>::max())
    throw GuardRailError("tau too large for the analytical state space");
}

inline TransitionRows build_rows(const StateSpace& space) {
  TransitionRows rows(space.size());
  for (std::size_t s = 0; s < space.size(); ++s) {
    std::map<std::size_t, double> acc;
    for_each_successor(space.layout, space.q, space.tau, space.states[s], 0, 0,
                       [&](const RichState& next, double p, LinkMask) {
                         acc[space.index_of(next)] += p;
                       });
    rows[s].reserve(acc.size());
    for (auto [to, p] : acc) rows[s].push_back({to, p});
  }
  return rows;
}

}  // namespace detail

// Reachable states by breadth-first closure from all-idle, sorted so that
// the ordering does not depend on traversal details. Also builds the
// transition rows.
inline StateSpace build_state_space(const NetworkSpec& spec, const ChannelLayout& layout,
                                    std::size_t cap = default_state_cap()) {
  detail::check_analyzable(spec);
  StateSpace space;
  space.layout = layout;
  space.q = spec.q();
  space.tau = spec.tau;

  const auto overflow = [&] {
    throw GuardRailError("state space exceeds cap of " + std::to_string(cap) + " states (N=" +
                         std::to_string(layout.channel_count()) + " channels, tau=" +
                         std::to_string(spec.tau) + ", channel-level bound 2^N*tau^(2(N-1)) = " +
                         std::to_string(state_count_bound(layout.channel_count(), spec.tau)) +
                         "); raise CSMA_STATE_CAP or use the lower-bound method");
  };

  std::unordered_map<RichState, std::size_t, RichStateHash> seen;
  std::vector<RichState> order;
  std::deque<std::size_t> frontier;
  RichState idle{std::vector<std::uint16_t>(spec.link_count(), 0)};
  seen.emplace(idle, 0);
  order.push_back(idle);
  frontier.push_back(0);
  while (!frontier.empty()) {
    const RichState cur = order[frontier.front()];
    frontier.pop_front();
    for_each_successor(layout, space.q, space.tau, cur, 0, 0,
                       [&](const RichState& next, double, LinkMask) {
                         if (seen.emplace(next, order.size()).second) {
                           if (order.size() >= cap) overflow();
                           order.push_back(next);
                           frontier.push_back(order.size() - 1);
                         }
                       });
  }

  std::sort(order.begin(), order.end());
  space.states = std::move(order);
  for (std::size_t i = 0; i < space.states.size(); ++i) space.index.emplace(space.states[i], i);
  space.transitions = detail::build_rows(space);
  return space;
}

inline std::vector<RichState> enumerate_states(const ChannelLayout& layout, const NetworkSpec& spec,
                                               std::size_t cap = default_state_cap()) {
  return build_state_space(spec, layout, cap).states;
}

// Transition rows over a given state list (which must be closed under the
// transition rule).
inline TransitionRows transition_probabilities(const ChannelLayout& layout, const NetworkSpec& spec,
                                               const std::vector<RichState>& states) {
  StateSpace space;
  space.layout = layout;
  space.q = spec.q();
  space.tau = spec.tau;
  space.states = states;
  for (std::size_t i = 0; i < states.size(); ++i) space.index.emplace(states[i], i);
  return detail::build_rows(space);
}

struct EmbeddedSolution {
  std::vector<double> pi;
  double residual = 0.0;  // ||pi P - pi||_inf
  // States carrying no stationary mass (transient from the start state).
  std::vector<std::size_t> dropped;
};

namespace detail {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// Strongly connected components, iterative Tarjan. Returns component id per
// vertex.
inline std::vector<std::size_t> strong_components(const TransitionRows& rows,
                                                  std::size_t& count) {
  const std::size_t n = rows.size();
  constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> idx(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (vertex, next edge)
  std::size_t counter = 0;
  count = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (idx[root] != unvisited) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e == 0 && idx[v] == unvisited) {
        idx[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      if (e < rows[v].size()) {
        const std::size_t w = rows[v][e].to;
        ++e;
        if (rows[v][e - 1].p <= 0.0) continue;
        if (idx[w] == unvisited) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return comp;
}

inline Eigen::VectorXd solve_sparse(const SparseMatrix& a, const Eigen::VectorXd& b,
                                    std::size_t direct_limit) {
  const auto n = static_cast<std::size_t>(a.rows());
  Eigen::VectorXd x;
  bool solved = false;
  if (n > direct_limit) {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it;
    it.setTolerance(1e-15);
    it.setMaxIterations(20000);
    it.compute(a);
    if (it.info() == Eigen::Success) {
      x = it.solve(b);
      solved = it.info() == Eigen::Success && ((a * x - b).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
  if (!solved) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
      throw Error("steady-state factorization failed: " + lu.lastErrorMessage());
    x = lu.solve(b);
    // A couple of refinement sweeps pull the residual to round-off.
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd r = b - a * x;
      if (r.lpNorm<Eigen::Infinity>() < 1e-16) break;
      x += lu.solve(r);
    }
  }
  return x;
}

// Stationary distribution of the closed class `members` (indices into rows).
inline std::vector<double> closed_class_stationary(const TransitionRows& rows,
                                                   const std::vector<std::size_t>& members,
                                                   std::size_t direct_limit) {
  const std::size_t m = members.size();
  if (m == 1) return {1.0};
  std::unordered_map<std::size_t, std::size_t> local;
  for (std::size_t k = 0; k < m; ++k) local.emplace(members[k], k);

  // (P^T - I) pi = 0 with the first balance equation replaced by sum(pi) = 1.
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < m; ++k) {
    trip.emplace_back(0, static_cast<int>(k), 1.0);
    if (k != 0) trip.emplace_back(static_cast<int>(k), static_cast<int>(k), -1.0);
    for (const auto& t : rows[members[k]]) {
      auto it = local.find(t.to);
      if (it == local.end() || it->second == 0) continue;
      trip.emplace_back(static_cast<int>(it->second), static_cast<int>(k), t.p);
    }
  }
  SparseMatrix a(static_cast<int>(m), static_cast<int>(m));
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(m));
  b(0) = 1.0;
  Eigen::VectorXd x = solve_sparse(a, b, direct_limit);

  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = std::max(0.0, x(static_cast<int>(k)));
  const double s = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& v : out) v /= s;
  return out;
}

}  // namespace detail

inline double stationary_residual(const TransitionRows& rows, const std::vector<double>& pi) {
  std::vector<double> next(pi.size(), 0.0);
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (const auto& t : rows[s]) next[t.to] += pi[s] * t.p;
  double r = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s) r = std::max(r, std::abs(next[s] - pi[s]));
  return r;
}

// Embedded-chain stationary distribution as seen from `start`. When the
// chain is reducible, mass lives on the closed classes reachable from
// `start`, weighted by absorption probability; everything else is dropped.
inline EmbeddedSolution embedded_steady_state(const TransitionRows& rows, std::size_t start = 0,
                                              std::size_t direct_limit = 50'000) {
  const std::size_t n = rows.size();
  if (n == 0) throw std::invalid_argument("empty transition matrix");
  std::size_t comp_count = 0;
  const auto comp = detail::strong_components(rows, comp_count);

  std::vector<char> closed(comp_count, 1);
  for (std::size_t s = 0; s < n; ++s)
    for (const auto& t : rows[s])
      if (t.p > 0.0 && comp[t.to] != comp[s]) closed[comp[s]] = 0;

  // States reachable from start.
  std::vector<char> reach(n, 0);
  std::vector<std::size_t> todo{start};
  reach[start] = 1;
  while (!todo.empty()) {
    auto s = todo.back();
    todo.pop_back();
    for (const auto& t : rows[s])
      if (t.p > 0.0 && !reach[t.to]) {
        reach[t.to] = 1;
        todo.push_back(t.to);
      }
  }

  std::map<std::size_t, std::vector<std::size_t>> classes;
  for (std::size_t s = 0; s < n; ++s)
    if (reach[s] && closed[comp[s]]) classes[comp[s]].push_back(s);

  EmbeddedSolution sol;
  sol.pi.assign(n, 0.0);

  if (classes.size() == 1) {
    const auto& members = classes.begin()->second;
    auto st = detail::closed_class_stationary(rows, members, direct_limit);
    for (std::size_t k = 0; k < members.size(); ++k) sol.pi[members[k]] = st[k];
  } else {
    // Absorption probabilities from start into each closed class, solved
    // over the transient reachable states.
    std::vector<std::size_t> transient;
    std::unordered_map<std::size_t, std::size_t> tpos;
    for (std::size_t s = 0; s < n; ++s)
      if (reach[s] && !closed[comp[s]]) {
        tpos.emplace(s, transient.size());
        transient.push_back(s);
      }
    const auto tn = static_cast<int>(transient.size());
    detail::SparseMatrix a(tn, tn);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < transient.size(); ++k) {
      trip.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
      for (const auto& t : rows[transient[k]]) {
        auto it = tpos.find(t.to);
        if (it != tpos.end())
          trip.emplace_back(static_cast<int>(k), static_cast<int>(it->second), -t.p);
      }
    }
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    for (const auto& [cid, members] : classes) {
      double weight;
      if (comp[start] == cid) {
        weight = 1.0;
      } else if (closed[comp[start]]) {
        weight = 0.0;
      } else {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(tn);
        for (std::size_t k = 0; k < transient.size(); ++k)
          for (const auto& t : rows[transient[k]])
            if (comp[t.to] == cid) b(static_cast<int>(k)) += t.p;
        Eigen::VectorXd h = detail::solve_sparse(a, b, direct_limit);
        weight = h(static_cast<int>(tpos.at(start)));
      }
      if (weight <= 0.0) continue;
      auto st = detail::closed_class_stationary(rows, members, direct_limit);
      for (std::size_t k = 0; k < members.size(); ++k) sol.pi[members[k]] = weight * st[k];
    }
    const double total = std::accumulate(sol.pi.begin(), sol.pi.end(), 0.0);
    for (auto& v : sol.pi) v /= total;
  }

  for (std::size_t s = 0; s < n; ++s)
    if (sol.pi[s] == 0.0) sol.dropped.push_back(s);
  sol.residual = stationary_residual(rows, sol.pi);
  return sol;
}

// π̃_μ = π_μ τ_μ / Σ_ν π_ν τ_ν
inline std::vector<double> limiting_distribution(const std::vector<double>& pi,
                                                 const std::vector<int>& holding) {
  std::vector<double> out(pi.size());
  double total = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s) total += pi[s] * holding[s];
  for (std::size_t s = 0; s < pi.size(); ++s) out[s] = pi[s] * holding[s] / total;
  return out;
}

enum class ChannelStatus : std::uint8_t { idle, busy };

// Channel-level state: busy/idle per channel, plus the start time of each
// channel's current state relative to channel 0.
struct ProjectedState {
  std::vector<ChannelStatus> status;
  std::vector<int> offsets;  // size N-1

  auto operator<=>(const ProjectedState&) const = default;
};

inline std::string to_string(const ProjectedState& p) {
  std::string out = "(";
  for (std::size_t c = 0; c < p.status.size(); ++c) {
    if (c) out += ",";
    out += p.status[c] == ChannelStatus::busy ? "B" : "I";
  }
  for (int d : p.offsets) out += "," + std::to_string(d);
  return out + ")";
}

inline ProjectedState project_state(const RichState& s, const ChannelLayout& layout, int tau) {
  const std::size_t n = layout.channel_count();
  ProjectedState p;
  p.status.assign(n, ChannelStatus::idle);
  // Start time per channel, epoch = 0.
  std::vector<int> start(n, 0);
  for (std::size_t i = 0; i < s.remaining.size(); ++i) {
    if (!s.remaining[i]) continue;
    for (ChannelId c : layout.U[i]) {
      p.status[c] = ChannelStatus::busy;
      start[c] = -(tau - static_cast<int>(s.remaining[i]));
    }
  }
  for (std::size_t c = 1; c < n; ++c) p.offsets.push_back(start[c] - start[0]);
  return p;
}

// min(τ_X1, τ_X2 + D1, ...) - max(0, D1, ...), τ_B = τ and τ_I = 1.
// A result below one marks an unreachable tuple.
inline int holding_time(const ProjectedState& p, int tau) {
  const auto dur = [&](std::size_t c) { return p.status[c] == ChannelStatus::busy ? tau : 1; };
  int lo = dur(0), hi = 0;
  for (std::size_t c = 1; c < p.status.size(); ++c) {
    lo = std::min(lo, dur(c) + p.offsets[c - 1]);
    hi = std::max(hi, p.offsets[c - 1]);
  }
  return lo - hi;
}

struct Signature {
  std::vector<ChannelId> idle;
  // Busy channels grouped by common start time; groups sorted.
  std::vector<std::vector<ChannelId>> busy_groups;

  auto operator<=>(const Signature&) const = default;
};

inline Signature state_signature(const ProjectedState& p) {
  Signature sig;
  std::map<int, std::vector<ChannelId>> by_start;
  for (std::size_t c = 0; c < p.status.size(); ++c) {
    const int start = c == 0 ? 0 : p.offsets[c - 1];
    if (p.status[c] == ChannelStatus::idle)
      sig.idle.push_back(c);
    else
      by_start[start].push_back(c);
  }
  for (auto& [_, g] : by_start) sig.busy_groups.push_back(std::move(g));
  std::sort(sig.busy_groups.begin(), sig.busy_groups.end());
  return sig;
}

inline std::string to_string(const Signature& s) {
  const auto set = [](const std::vector<ChannelId>& v) {
    std::string o = "{";
    for (std::size_t k = 0; k < v.size(); ++k) o += (k ? "," : "") + std::to_string(v[k]);
    return o + "}";
  };
  std::string out = "I=" + set(s.idle) + " B={";
  for (std::size_t k = 0; k < s.busy_groups.size(); ++k) out += (k ? "," : "") + set(s.busy_groups[k]);
  return out + "}";
}

// A solved renewal model: state space, embedded π, limiting π̃.
struct RenewalSolution {
  StateSpace space;
  std::vector<int> holding;
  std::vector<double> embedded;
  std::vector<double> limiting;
  double residual = 0.0;
  std::vector<std::size_t> dropped;

  const ChannelLayout& layout() const noexcept { return space.layout; }
  int tau() const noexcept { return space.tau; }
  std::size_t size() const noexcept { return space.size(); }
};

inline RenewalSolution solve_renewal(const NetworkSpec& spec, std::size_t cap = default_state_cap()) {
  RenewalSolution sol;
  sol.space = build_state_space(spec, build_layout(spec), cap);
  sol.holding.reserve(sol.space.size());
  for (const auto& s : sol.space.states) sol.holding.push_back(holding_time(sol.space.layout, s));
  auto emb = embedded_steady_state(sol.space.transitions, 0);
  sol.embedded = std::move(emb.pi);
  sol.residual = emb.residual;
  sol.dropped = std::move(emb.dropped);
  sol.limiting = limiting_distribution(sol.embedded, sol.holding);
  return sol;
}

// π̃ summed over rich states sharing a channel-level projection.
inline std::map<ProjectedState, double> projected_limiting(const RenewalSolution& sol) {
  std::map<ProjectedState, double> out;
  for (std::size_t s = 0; s < sol.size(); ++s)
    out[project_state(sol.space.states[s], sol.layout(), sol.tau())] += sol.limiting[s];
  return out;
}

}  // namespace csma
