#pragma once

// Back-of-the-envelope (BOE) baseline: link i's normalized throughput is the
// fraction of maximum independent sets of the contention graph that contain
// it. The sensing graph serves as the contention graph.

#include <bit>
#include <cstdint>
#include <vector>

#include "cliques.hpp"
#include "report.hpp"
#include "topology.hpp"

namespace csma {

inline constexpr std::size_t kMaxBoeLinks = 20;

struct BoeReport {
  std::vector<double> per_link;
  std::size_t mis_count = 0;
  std::vector<std::size_t> membership;

  ThroughputReport report(const NetworkSpec& spec) const {
    ThroughputReport r;
    r.method = Method::boe;
    for (const auto& l : spec.links) r.link_ids.push_back(l.id);
    r.per_link = per_link;
    r.metadata.spec_hash = hex64(spec_hash(spec));
    return r;
  }
};

// All independent sets of maximum cardinality, brute force over subsets.
inline std::vector<std::vector<LinkId>> maximum_independent_sets(const SensingGraph& g) {
  const std::size_t k = g.link_count();
  if (k > kMaxBoeLinks)
    throw GuardRailError("maximum independent set enumeration is limited to " +
                         std::to_string(kMaxBoeLinks) + " links (got " + std::to_string(k) + ")");
  if (k == 0) return {};
  const auto nbr = detail::neighbor_masks(g);
  int best = 0;
  std::vector<std::uint32_t> sets;
  for (std::uint32_t m = 1; m < (std::uint32_t{1} << k); ++m) {
    const int size = std::popcount(m);
    if (size < best) continue;
    bool independent = true;
    for (std::uint32_t r = m; r && independent; r &= r - 1)
      if (nbr[std::countr_zero(r)] & m) independent = false;
    if (!independent) continue;
    if (size > best) {
      best = size;
      sets.clear();
    }
    sets.push_back(m);
  }
  std::vector<std::vector<LinkId>> out;
  for (auto m : sets) out.push_back(detail::mask_to_links(m));
  std::sort(out.begin(), out.end());
  return out;
}

inline BoeReport boe_throughput(const NetworkSpec& spec) {
  const auto mis = maximum_independent_sets(spec.sensing);
  BoeReport r;
  r.mis_count = mis.size();
  r.membership.assign(spec.link_count(), 0);
  for (const auto& s : mis)
    for (LinkId i : s) ++r.membership[i];
  for (std::size_t c : r.membership)
    r.per_link.push_back(static_cast<double>(c) / static_cast<double>(r.mis_count));
  return r;
}

}  // namespace csma
