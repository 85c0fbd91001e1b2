#pragma once

// Sensing/interference topologies, access parameters, and the JSON topology
// document.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace csma {

using LinkId = std::size_t;
using LinkPair = std::pair<LinkId, LinkId>;

enum class AccessMode { basic, rts_cts };

inline std::string to_string(AccessMode m) { return m == AccessMode::basic ? "basic" : "rts_cts"; }

// Backoff window W -> per-slot attempt probability 2/(W+1), capped at 1.
inline double q_from_window(int window) {
  if (window < 0) throw std::invalid_argument("backoff window must be non-negative");
  return std::min(1.0, 2.0 / (static_cast<double>(window) + 1.0));
}

// Undirected; edges stored once as (low, high), sorted.
class SensingGraph {
 public:
  SensingGraph() = default;

  SensingGraph(std::size_t link_count, const std::vector<LinkPair>& edges)
      : link_count_(link_count), adjacency_(link_count) {
    std::set<LinkPair> unique;
    for (auto [a, b] : edges) {
      if (a >= link_count || b >= link_count)
        throw std::out_of_range("sensing edge references a link outside [0, K)");
      if (a == b) throw std::invalid_argument("sensing graph cannot contain self-loops");
      unique.emplace(std::min(a, b), std::max(a, b));
    }
    edges_.assign(unique.begin(), unique.end());
    for (auto [a, b] : edges_) {
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& n : adjacency_) std::sort(n.begin(), n.end());
  }

  std::size_t link_count() const noexcept { return link_count_; }
  const std::vector<LinkPair>& edges() const noexcept { return edges_; }
  const std::vector<LinkId>& neighbors(LinkId i) const { return adjacency_.at(i); }

  bool adjacent(LinkId a, LinkId b) const {
    const auto& n = adjacency_.at(a);
    return std::binary_search(n.begin(), n.end(), b);
  }

 private:
  std::size_t link_count_ = 0;
  std::vector<LinkPair> edges_;
  std::vector<std::vector<LinkId>> adjacency_;
};

// Directed; (i, j) means i's transmission can corrupt reception on link j.
class InterferenceGraph {
 public:
  InterferenceGraph() = default;

  InterferenceGraph(std::size_t link_count, const std::vector<LinkPair>& edges)
      : link_count_(link_count), sources_(link_count), targets_(link_count) {
    std::set<LinkPair> unique;
    for (auto [a, b] : edges) {
      if (a >= link_count || b >= link_count)
        throw std::out_of_range("interference edge references a link outside [0, K)");
      if (a == b) throw std::invalid_argument("interference graph cannot contain self-loops");
      unique.emplace(a, b);
    }
    edges_.assign(unique.begin(), unique.end());
    for (auto [from, to] : edges_) {
      sources_[to].push_back(from);
      targets_[from].push_back(to);
    }
    for (auto& s : sources_) std::sort(s.begin(), s.end());
    for (auto& t : targets_) std::sort(t.begin(), t.end());
  }

  std::size_t link_count() const noexcept { return link_count_; }
  const std::vector<LinkPair>& edges() const noexcept { return edges_; }

  // R_i: links whose transmissions corrupt link i.
  const std::vector<LinkId>& interferers_of(LinkId i) const { return sources_.at(i); }
  const std::vector<LinkId>& victims_of(LinkId i) const { return targets_.at(i); }

  bool interferes(LinkId from, LinkId to) const {
    const auto& s = sources_.at(to);
    return std::binary_search(s.begin(), s.end(), from);
  }

 private:
  std::size_t link_count_ = 0;
  std::vector<LinkPair> edges_;
  std::vector<std::vector<LinkId>> sources_;
  std::vector<std::vector<LinkId>> targets_;
};

struct Link {
  std::string id;
  double q = 0.0;
  // Set when the document gave a backoff window; q is then derived from it.
  std::optional<int> window;
};

struct NetworkSpec {
  std::vector<Link> links;
  SensingGraph sensing;
  InterferenceGraph interference;
  int tau = 1;
  AccessMode mode = AccessMode::basic;

  std::size_t link_count() const noexcept { return links.size(); }

  std::vector<double> q() const {
    std::vector<double> out;
    out.reserve(links.size());
    for (const auto& l : links) out.push_back(l.q);
    return out;
  }

  std::optional<LinkId> find(std::string_view id) const {
    for (std::size_t i = 0; i < links.size(); ++i)
      if (links[i].id == id) return i;
    return std::nullopt;
  }
};

// H_i
inline std::vector<LinkId> sensing_neighbors(const NetworkSpec& spec, LinkId i) {
  return spec.sensing.neighbors(i);
}

// R_i
inline std::vector<LinkId> interferers(const NetworkSpec& spec, LinkId i) {
  return spec.interference.interferers_of(i);
}

inline bool interference_within_sensing(const NetworkSpec& spec) {
  for (auto [from, to] : spec.interference.edges())
    if (!spec.sensing.adjacent(from, to)) return false;
  return true;
}

// Violations of the NetworkSpec invariants, evaluated as if the spec ran in
// `mode`. Empty when the spec is usable.
inline std::vector<std::string> validate(const NetworkSpec& spec, AccessMode mode) {
  std::vector<std::string> out;
  const std::size_t k = spec.link_count();
  if (k == 0) out.emplace_back("network has no links");
  if (spec.sensing.link_count() != k || spec.interference.link_count() != k)
    out.emplace_back("graph link count does not match number of links");
  if (spec.tau < 1) out.emplace_back("tau < 1");

  std::set<std::string> seen;
  for (const auto& l : spec.links) {
    if (!seen.insert(l.id).second) out.push_back("duplicate link id '" + l.id + "'");
    if (!(l.q >= 0.0 && l.q <= 1.0))
      out.push_back("probability out of range for link '" + l.id + "'");
    if (l.window && *l.window < 0) out.push_back("negative backoff window for link '" + l.id + "'");
  }

  if (mode == AccessMode::rts_cts && spec.interference.link_count() == k &&
      spec.sensing.link_count() == k) {
    for (auto [from, to] : spec.interference.edges()) {
      if (!spec.sensing.adjacent(from, to))
        out.push_back("G_I ⊄ G_S at (" + spec.links[from].id + "," + spec.links[to].id + ")");
    }
  }
  return out;
}

inline std::vector<std::string> validate(const NetworkSpec& spec) { return validate(spec, spec.mode); }

inline void require_valid(const NetworkSpec& spec, AccessMode mode) {
  auto v = validate(spec, mode);
  if (!v.empty()) throw ValidationError(std::move(v));
}

inline void require_valid(const NetworkSpec& spec) { require_valid(spec, spec.mode); }

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline nlohmann::json parse_json_document(std::string_view text) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte *after* the offending character.
    auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("syntax error: " + std::string(e.what()), line, col);
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

inline double number_field(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number()) throw ParseError(what + " must be a number");
  return v.get<double>();
}

inline long long integer_field(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ParseError(what + " must be an integer");
  return v.get<long long>();
}

inline std::vector<LinkPair> parse_pairs(const nlohmann::json& doc, const char* key,
                                         const std::unordered_map<std::string, LinkId>& ids) {
  std::vector<LinkPair> out;
  if (!doc.contains(key)) return out;
  const auto& arr = doc.at(key);
  if (!arr.is_array()) throw ParseError(std::string("'") + key + "' must be an array");
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      throw ParseError(std::string("each '") + key + "' entry must be a pair of link ids");
    LinkId ends[2];
    for (int k = 0; k < 2; ++k) {
      auto it = ids.find(e[k].get<std::string>());
      if (it == ids.end())
        throw ParseError("unknown link '" + e[k].get<std::string>() + "' in '" + key + "'");
      ends[k] = it->second;
    }
    if (ends[0] == ends[1])
      throw ParseError(std::string("self-loop on link '") + e[0].get<std::string>() + "' in '" +
                       key + "'");
    out.emplace_back(ends[0], ends[1]);
  }
  return out;
}

}  // namespace detail

inline AccessMode parse_access_mode(std::string_view s) {
  if (s == "basic") return AccessMode::basic;
  if (s == "rts_cts") return AccessMode::rts_cts;
  throw ParseError("unknown mode '" + std::string(s) + "' (expected basic or rts_cts)");
}

// Builds a spec from an already-parsed document. Does not run validate().
inline NetworkSpec network_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("topology document must be a JSON object");
  NetworkSpec spec;

  const auto& links = detail::require_field(doc, "links", "topology");
  if (!links.is_array()) throw ParseError("'links' must be an array");
  std::unordered_map<std::string, LinkId> ids;
  for (const auto& l : links) {
    const auto& id = detail::require_field(l, "id", "link");
    if (!id.is_string()) throw ParseError("link id must be a string");
    Link link;
    link.id = id.get<std::string>();
    if (!ids.emplace(link.id, spec.links.size()).second)
      throw ParseError("duplicate link id '" + link.id + "'");
    const bool has_q = l.contains("q"), has_w = l.contains("W");
    if (has_q == has_w) throw ParseError("link '" + link.id + "' needs exactly one of 'q' or 'W'");
    if (has_q) {
      link.q = detail::number_field(l.at("q"), "q of link '" + link.id + "'");
    } else {
      auto w = detail::integer_field(l.at("W"), "W of link '" + link.id + "'");
      if (w < 0) throw ParseError("W of link '" + link.id + "' must be non-negative");
      link.window = static_cast<int>(w);
      link.q = q_from_window(*link.window);
    }
    spec.links.push_back(std::move(link));
  }

  const auto& tau = detail::require_field(doc, "tau", "topology");
  spec.tau = static_cast<int>(detail::integer_field(tau, "tau"));
  if (doc.contains("mode")) {
    if (!doc.at("mode").is_string()) throw ParseError("'mode' must be a string");
    spec.mode = parse_access_mode(doc.at("mode").get<std::string>());
  }

  const std::size_t k = spec.links.size();
  spec.sensing = SensingGraph(k, detail::parse_pairs(doc, "sensing", ids));
  spec.interference = InterferenceGraph(k, detail::parse_pairs(doc, "interference", ids));
  return spec;
}

// Parses a topology document and runs the mode-independent checks. The
// rts_cts subgraph condition is left to whichever analysis needs it.
inline NetworkSpec parse_network_spec(std::string_view text) {
  auto spec = network_spec_from_json(detail::parse_json_document(text));
  require_valid(spec, AccessMode::basic);
  return spec;
}

inline nlohmann::json to_json(const NetworkSpec& spec) {
  nlohmann::json doc;
  doc["links"] = nlohmann::json::array();
  for (const auto& l : spec.links) {
    nlohmann::json j{{"id", l.id}};
    if (l.window)
      j["W"] = *l.window;
    else
      j["q"] = l.q;
    doc["links"].push_back(std::move(j));
  }
  doc["tau"] = spec.tau;
  doc["mode"] = to_string(spec.mode);
  doc["sensing"] = nlohmann::json::array();
  for (auto [a, b] : spec.sensing.edges())
    doc["sensing"].push_back({spec.links[a].id, spec.links[b].id});
  doc["interference"] = nlohmann::json::array();
  for (auto [a, b] : spec.interference.edges())
    doc["interference"].push_back({spec.links[a].id, spec.links[b].id});
  return doc;
}

// Canonical form: declaration-ordered links, sorted deduplicated edges.
inline std::string serialize(const NetworkSpec& spec) { return to_json(spec).dump(2); }

// FNV-1a over the canonical compact serialization.
inline std::uint64_t spec_hash(const NetworkSpec& spec) {
  const std::string s = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// Link old -> perm[old]. Ids travel with their links.
inline NetworkSpec relabel(const NetworkSpec& spec, const std::vector<LinkId>& perm) {
  const std::size_t k = spec.link_count();
  NetworkSpec out;
  out.tau = spec.tau;
  out.mode = spec.mode;
  out.links.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.links[perm[i]] = spec.links[i];
  std::vector<LinkPair> s, r;
  for (auto [a, b] : spec.sensing.edges()) s.emplace_back(perm[a], perm[b]);
  for (auto [a, b] : spec.interference.edges()) r.emplace_back(perm[a], perm[b]);
  out.sensing = SensingGraph(k, s);
  out.interference = InterferenceGraph(k, r);
  return out;
}

}  // namespace csma
