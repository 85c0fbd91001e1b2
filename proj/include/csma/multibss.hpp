#pragma once

// Multi-BSS 802.11 uplink with universal frequency reuse.
//
// Stations are grouped by (associated BSS i, set S of APs that hear them).
// A group behaves as one aggregated link that attempts whenever any member
// does; two groups sense each other when some AP hears both (AP feedback via
// CTS), and group (j,S') interferes with group (i,S) when AP i hears it.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simulator.hpp"
#include "throughput.hpp"
#include "topology.hpp"

namespace csma {

// Defaults: 9 us slots, HT rates (144.4 Mb/s data, 6 Mb/s control), which
// put an 18432-bit payload at 27 slots.
struct PhyParams {
  double payload_bits = 18432;
  double mac_header_bits = 272;
  double data_rate_bps = 144.4e6;
  double sifs_s = 16e-6;
  double difs_s = 34e-6;
  double ack_bits = 112;
  double basic_rate_bps = 6e6;
  double phy_preamble_s = 40e-6;
  double slot_s = 9e-6;
};

inline double on_air_seconds(const PhyParams& p) {
  return (p.payload_bits + p.mac_header_bits) / p.data_rate_bps + p.sifs_s + p.ack_bits / p.basic_rate_bps +
         p.difs_s + p.phy_preamble_s;
}

// Successful-transmission duration in whole slots, rounded up.
inline int tau_from_phy(const PhyParams& p) {
  const double fields[] = {p.payload_bits,   p.mac_header_bits, p.data_rate_bps,  p.sifs_s,  p.difs_s,
                           p.ack_bits,       p.basic_rate_bps,  p.phy_preamble_s, p.slot_s};
  for (double f : fields)
    if (!(f >= 0.0)) throw ValidationError({"PHY parameters must be non-negative"});
  if (!(p.data_rate_bps > 0.0 && p.basic_rate_bps > 0.0 && p.slot_s > 0.0))
    throw ValidationError({"PHY rates and slot duration must be positive"});
  const double slots = on_air_seconds(p) / p.slot_s;
  // Absorb floating-point noise so exact multiples do not round up.
  return std::max(1, static_cast<int>(std::ceil(slots - 1e-9)));
}

struct BssGroup {
  int bss = 1;
  std::vector<int> heard_by;  // sorted, contains bss
  int n = 1;
  double q = 0.0;
  std::optional<int> window;

  std::string key() const {
    std::string s = "G" + std::to_string(bss) + "{";
    for (std::size_t k = 0; k < heard_by.size(); ++k) s += (k ? "," : "") + std::to_string(heard_by[k]);
    return s + "}";
  }

  bool hears(int ap) const { return std::binary_search(heard_by.begin(), heard_by.end(), ap); }
};

struct MultiBssSpec {
  int bss_count = 1;
  std::vector<BssGroup> groups;
  int tau = 1;
  AccessMode mode = AccessMode::rts_cts;
};

inline std::vector<std::string> validate(const MultiBssSpec& m) {
  std::vector<std::string> out;
  if (m.bss_count < 1) out.emplace_back("bss_count must be >= 1");
  if (m.tau < 1) out.emplace_back("tau < 1");
  if (m.groups.empty()) out.emplace_back("no groups");
  std::set<std::string> keys;
  for (const auto& g : m.groups) {
    const auto key = g.key();
    if (!keys.insert(key).second) out.push_back("duplicate group " + key);
    if (g.bss < 1 || g.bss > m.bss_count) out.push_back("group " + key + ": bss out of range");
    if (!g.hears(g.bss)) out.push_back("group " + key + ": heard_by must contain its own BSS");
    for (int ap : g.heard_by)
      if (ap < 1 || ap > m.bss_count) out.push_back("group " + key + ": heard_by entry out of range");
    if (g.n < 1) out.push_back("group " + key + ": n must be >= 1");
    if (!(g.q >= 0.0 && g.q <= 1.0)) out.push_back("group " + key + ": probability out of range");
  }
  return out;
}

inline bool groups_sense(const BssGroup& a, const BssGroup& b) {
  for (int ap : a.heard_by)
    if (b.hears(ap)) return true;
  return false;
}

// Aggregated attempt probability: any member attempts.
inline double aggregated_q(double q, int n) { return 1.0 - std::pow(1.0 - q, n); }

struct Expansion {
  NetworkSpec spec;
  std::vector<std::size_t> group_of_link;
};

inline Expansion expand_groups(const MultiBssSpec& m) {
  if (auto v = validate(m); !v.empty()) throw ValidationError(std::move(v));
  Expansion e;
  const std::size_t k = m.groups.size();
  e.spec.tau = m.tau;
  e.spec.mode = m.mode;
  std::vector<LinkPair> sensing, interference;
  for (std::size_t a = 0; a < k; ++a) {
    const auto& g = m.groups[a];
    e.spec.links.push_back({g.key(), aggregated_q(g.q, g.n), std::nullopt});
    e.group_of_link.push_back(a);
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      if (a < b && groups_sense(g, m.groups[b])) sensing.emplace_back(a, b);
      // a -> b when b's AP hears a.
      if (g.hears(m.groups[b].bss)) interference.emplace_back(a, b);
    }
  }
  e.spec.sensing = SensingGraph(k, sensing);
  e.spec.interference = InterferenceGraph(k, interference);
  // An interferer is heard by the victim's AP, so it always senses the victim.
  if (!interference_within_sensing(e.spec)) throw std::logic_error("expanded multi-BSS spec has G_I outside G_S");
  return e;
}

// One link per station. Stations of one group sense each other and, sharing
// an AP, interfere with each other.
inline NetworkSpec node_level_spec(const MultiBssSpec& m) {
  if (auto v = validate(m); !v.empty()) throw ValidationError(std::move(v));
  NetworkSpec spec;
  spec.tau = m.tau;
  spec.mode = AccessMode::basic;
  std::vector<std::size_t> group;
  for (std::size_t a = 0; a < m.groups.size(); ++a) {
    const auto& g = m.groups[a];
    for (int k = 0; k < g.n; ++k) {
      spec.links.push_back({g.key() + "#" + std::to_string(k + 1), g.q, g.window});
      group.push_back(a);
    }
  }
  const std::size_t k = spec.links.size();
  std::vector<LinkPair> sensing, interference;
  for (std::size_t x = 0; x < k; ++x) {
    const auto& gx = m.groups[group[x]];
    for (std::size_t y = 0; y < k; ++y) {
      if (x == y) continue;
      const auto& gy = m.groups[group[y]];
      if (x < y && groups_sense(gx, gy)) sensing.emplace_back(x, y);
      if (gx.hears(gy.bss)) interference.emplace_back(x, y);
    }
  }
  spec.sensing = SensingGraph(k, sensing);
  spec.interference = InterferenceGraph(k, interference);
  return spec;
}

// Probability that exactly one member transmitted, given the aggregate did.
inline double per_node_prefactor(double q, int n) {
  if (n == 1) return 1.0;
  if (q <= 0.0) return 1.0 / n;
  return q * std::pow(1.0 - q, n - 1) / aggregated_q(q, n);
}

inline double per_node_throughput(const BssGroup& g, double lambda_aggregate) {
  return per_node_prefactor(g.q, g.n) * lambda_aggregate;
}

inline double total_throughput(const MultiBssSpec& m, const std::vector<double>& per_node) {
  double s = 0.0;
  for (std::size_t a = 0; a < m.groups.size(); ++a) s += m.groups[a].n * per_node.at(a);
  return s;
}

struct GroupResult {
  std::string key;
  int n = 1;
  double aggregated = 0.0;  // aggregated-link throughput; simulated: group sum
  double per_node = 0.0;
  double stderr_per_node = 0.0;
};

struct MultiBssReport {
  Method method = Method::rts_cts;
  std::vector<GroupResult> groups;
  double total = 0.0;
  double total_stderr = 0.0;
  int tau = 1;
};

inline MultiBssReport analyze_multibss(const MultiBssSpec& m, Method method = Method::rts_cts) {
  const auto e = expand_groups(m);
  const auto sol = solve_renewal(e.spec);
  ThroughputReport agg;
  switch (method) {
    case Method::rts_cts: agg = throughput_rtscts(e.spec, sol); break;
    case Method::exact: agg = throughput_exact(e.spec, sol); break;
    case Method::lower_bound: agg = throughput_lower_bound(e.spec, sol); break;
    default: throw std::invalid_argument("multi-BSS analysis supports rtscts, exact and approx");
  }
  MultiBssReport r;
  r.method = method;
  r.tau = m.tau;
  std::vector<double> per_node;
  for (std::size_t a = 0; a < m.groups.size(); ++a) {
    const auto& g = m.groups[a];
    GroupResult gr{g.key(), g.n, agg.per_link[a], per_node_throughput(g, agg.per_link[a]), 0.0};
    per_node.push_back(gr.per_node);
    r.groups.push_back(gr);
  }
  r.total = total_throughput(m, per_node);
  return r;
}

inline MultiBssReport simulate_multibss(const MultiBssSpec& m, const SimConfig& cfg) {
  const auto spec = node_level_spec(m);
  const auto sim = run_simulation(spec, cfg);
  MultiBssReport r;
  r.method = Method::simulated;
  r.tau = m.tau;
  std::size_t link = 0;
  for (const auto& g : m.groups) {
    GroupResult gr{g.key(), g.n, 0.0, 0.0, 0.0};
    double var = 0.0;
    for (int k = 0; k < g.n; ++k, ++link) {
      gr.aggregated += sim.links[link].throughput;
      var += sim.links[link].stderr_estimate * sim.links[link].stderr_estimate;
    }
    gr.per_node = gr.aggregated / g.n;
    gr.stderr_per_node = std::sqrt(var) / g.n;
    r.total += gr.aggregated;
    r.groups.push_back(gr);
  }
  r.total_stderr = sim.total_stderr;
  return r;
}

namespace detail {

inline PhyParams phy_from_json(const nlohmann::json& j) {
  PhyParams p;
  const std::pair<const char*, double*> fields[] = {
      {"payload_bits", &p.payload_bits}, {"mac_header_bits", &p.mac_header_bits},
      {"data_rate_bps", &p.data_rate_bps}, {"sifs_s", &p.sifs_s},
      {"difs_s", &p.difs_s}, {"ack_bits", &p.ack_bits},
      {"basic_rate_bps", &p.basic_rate_bps}, {"phy_preamble_s", &p.phy_preamble_s},
      {"slot_s", &p.slot_s}};
  if (!j.is_object()) throw ParseError("'phy' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto f = std::find_if(std::begin(fields), std::end(fields),
                          [&](const auto& fd) { return it.key() == fd.first; });
    if (f == std::end(fields)) throw ParseError("unknown PHY parameter '" + it.key() + "'");
    *f->second = number_field(it.value(), "phy." + it.key());
  }
  return p;
}

}  // namespace detail

inline MultiBssSpec multibss_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("multi-BSS document must be a JSON object");
  MultiBssSpec m;
  m.bss_count = static_cast<int>(detail::integer_field(detail::require_field(doc, "bss_count", "multi-BSS"), "bss_count"));
  const bool has_tau = doc.contains("tau"), has_phy = doc.contains("phy");
  if (has_tau == has_phy) throw ParseError("multi-BSS document needs exactly one of 'tau' or 'phy'");
  m.tau = has_tau ? static_cast<int>(detail::integer_field(doc.at("tau"), "tau"))
                  : tau_from_phy(detail::phy_from_json(doc.at("phy")));
  if (doc.contains("mode")) {
    if (!doc.at("mode").is_string()) throw ParseError("'mode' must be a string");
    m.mode = parse_access_mode(doc.at("mode").get<std::string>());
  }
  const auto& groups = detail::require_field(doc, "groups", "multi-BSS");
  if (!groups.is_array()) throw ParseError("'groups' must be an array");
  for (const auto& gj : groups) {
    BssGroup g;
    g.bss = static_cast<int>(detail::integer_field(detail::require_field(gj, "bss", "group"), "bss"));
    const auto& hb = detail::require_field(gj, "heard_by", "group");
    if (!hb.is_array()) throw ParseError("'heard_by' must be an array");
    for (const auto& ap : hb) g.heard_by.push_back(static_cast<int>(detail::integer_field(ap, "heard_by entry")));
    std::sort(g.heard_by.begin(), g.heard_by.end());
    g.heard_by.erase(std::unique(g.heard_by.begin(), g.heard_by.end()), g.heard_by.end());
    g.n = static_cast<int>(detail::integer_field(detail::require_field(gj, "n", "group"), "n"));
    const bool has_q = gj.contains("q"), has_w = gj.contains("W");
    if (has_q == has_w) throw ParseError("group " + g.key() + " needs exactly one of 'q' or 'W'");
    if (has_q) {
      g.q = detail::number_field(gj.at("q"), "q");
    } else {
      const auto w = detail::integer_field(gj.at("W"), "W");
      if (w < 0) throw ParseError("group " + g.key() + ": W must be non-negative");
      g.window = static_cast<int>(w);
      g.q = q_from_window(*g.window);
    }
    m.groups.push_back(std::move(g));
  }
  return m;
}

inline MultiBssSpec parse_multibss_spec(std::string_view text) {
  auto m = multibss_spec_from_json(detail::parse_json_document(text));
  if (auto v = validate(m); !v.empty()) throw ValidationError(std::move(v));
  return m;
}

// Every group gets backoff window W.
inline MultiBssSpec with_window(MultiBssSpec m, int window) {
  for (auto& g : m.groups) {
    g.window = window;
    g.q = q_from_window(window);
  }
  return m;
}

}  // namespace csma
