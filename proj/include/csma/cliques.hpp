#pragma once

// Maximal cliques of the sensing graph and the logical-channel layout they
// induce: each maximal clique is one channel, and a link occupies every
// channel whose clique contains it.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "topology.hpp"

namespace csma {

using ChannelId = std::size_t;
using LinkMask = std::uint64_t;
using ChannelMask = std::uint64_t;

inline constexpr std::size_t kMaxMaskedLinks = 64;

namespace detail {

inline std::vector<LinkMask> neighbor_masks(const SensingGraph& g) {
  if (g.link_count() > kMaxMaskedLinks)
    throw GuardRailError("clique enumeration supports at most 64 links");
  std::vector<LinkMask> n(g.link_count(), 0);
  for (auto [a, b] : g.edges()) {
    n[a] |= LinkMask{1} << b;
    n[b] |= LinkMask{1} << a;
  }
  return n;
}

inline std::vector<LinkId> mask_to_links(LinkMask m) {
  std::vector<LinkId> out;
  while (m) {
    out.push_back(static_cast<LinkId>(std::countr_zero(m)));
    m &= m - 1;
  }
  return out;
}

class BronKerbosch {
 public:
  BronKerbosch(const std::vector<LinkMask>& neighbors, bool pivot)
      : neighbors_(neighbors), pivot_(pivot) {}

  void run(LinkMask r, LinkMask p, LinkMask x) {
    if (p == 0 && x == 0) {
      cliques_.push_back(r);
      return;
    }
    LinkMask candidates = p;
    if (pivot_) {
      // Tomita pivot: the vertex of P ∪ X with most neighbours in P.
      LinkMask px = p | x;
      int best = -1;
      LinkId u = 0;
      while (px) {
        auto v = static_cast<LinkId>(std::countr_zero(px));
        px &= px - 1;
        int c = std::popcount(p & neighbors_[v]);
        if (c > best) {
          best = c;
          u = v;
        }
      }
      candidates = p & ~neighbors_[u];
    }
    while (candidates) {
      auto v = static_cast<LinkId>(std::countr_zero(candidates));
      LinkMask bit = LinkMask{1} << v;
      candidates &= candidates - 1;
      run(r | bit, p & neighbors_[v], x & neighbors_[v]);
      p &= ~bit;
      x |= bit;
    }
  }

  std::vector<LinkMask> take() { return std::move(cliques_); }

 private:
  const std::vector<LinkMask>& neighbors_;
  bool pivot_;
  std::vector<LinkMask> cliques_;
};

}  // namespace detail

// All maximal cliques, each sorted, in lexicographic order. Isolated links
// come out as singletons.
inline std::vector<std::vector<LinkId>> maximal_cliques(const SensingGraph& g,
                                                         bool pivot = false) {
  const std::size_t k = g.link_count();
  if (k == 0) return {};
  auto n = detail::neighbor_masks(g);
  detail::BronKerbosch bk(n, pivot);
  const LinkMask all = k == 64 ? ~LinkMask{0} : (LinkMask{1} << k) - 1;
  bk.run(0, all, 0);

  std::vector<std::vector<LinkId>> out;
  for (LinkMask m : bk.take()) out.push_back(detail::mask_to_links(m));
  std::sort(out.begin(), out.end());
  return out;
}

struct ChannelLayout {
  // channels[c]: links of maximal clique c, canonical order
  std::vector<std::vector<LinkId>> channels;
  // U[i]: channels link i occupies
  std::vector<std::vector<ChannelId>> U;

  // Bitmask views of the two tables above.
  std::vector<LinkMask> channel_links;
  std::vector<ChannelMask> link_channels;

  std::size_t channel_count() const noexcept { return channels.size(); }
  std::size_t link_count() const noexcept { return U.size(); }
  ChannelMask all_channels() const noexcept {
    return channels.size() == 64 ? ~ChannelMask{0} : (ChannelMask{1} << channels.size()) - 1;
  }
};

inline ChannelLayout build_layout(const SensingGraph& g) {
  ChannelLayout layout;
  layout.channels = maximal_cliques(g);
  if (layout.channels.size() > 64)
    throw GuardRailError("sensing graph has " + std::to_string(layout.channels.size()) +
                         " maximal cliques; at most 64 channels are supported");
  layout.U.resize(g.link_count());
  layout.link_channels.assign(g.link_count(), 0);
  layout.channel_links.assign(layout.channels.size(), 0);
  for (ChannelId c = 0; c < layout.channels.size(); ++c) {
    for (LinkId i : layout.channels[c]) {
      layout.U[i].push_back(c);
      layout.link_channels[i] |= ChannelMask{1} << c;
      layout.channel_links[c] |= LinkMask{1} << i;
    }
  }
  return layout;
}

inline ChannelLayout build_layout(const NetworkSpec& spec) { return build_layout(spec.sensing); }

}  // namespace csma
