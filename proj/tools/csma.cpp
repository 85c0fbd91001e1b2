// csma: command-line front end for the CSMA throughput library.
//
// Exit codes: 0 success, 1 dominance violation in `compare` or internal
// error, 2 usage/parse/validation error or unreadable file, 3 guard rail.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <csma/csma.hpp>

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;
constexpr int kExitGuardRail = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Output {
  std::string path;
  std::string format = "csv";

  bool json_doc() const { return format == "json-doc"; }

  void write(const std::string& text) const {
    if (path.empty() || path == "-") {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
  }

  void write(const json& doc) const { write(doc.dump(2) + "\n"); }
};

void add_output_flags(CLI::App* cmd, Output& out) {
  cmd->add_option("--out", out.path, "Write output to this file instead of stdout");
  cmd->add_option("--format", out.format, "Output format")->check(CLI::IsMember({"csv", "json-doc"}));
}

// Method names as used on the command line.
enum class Cmd { exact, approx, rtscts, oracle, boe, simulate };

const std::map<std::string, Cmd>& method_names() {
  static const std::map<std::string, Cmd> m{{"exact", Cmd::exact},   {"approx", Cmd::approx},
                                            {"rtscts", Cmd::rtscts}, {"oracle", Cmd::oracle},
                                            {"boe", Cmd::boe},       {"simulate", Cmd::simulate}};
  return m;
}

std::string name_of(Cmd c) {
  for (const auto& [k, v] : method_names())
    if (v == c) return k;
  return "?";
}

Cmd parse_method(const std::string& s) {
  auto it = method_names().find(s);
  if (it == method_names().end()) throw InputError("unknown method '" + s + "'");
  return it->second;
}

std::vector<Cmd> parse_methods(const std::vector<std::string>& names) {
  std::vector<Cmd> out;
  for (const auto& n : names) {
    std::stringstream ss(n);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) out.push_back(parse_method(part));
  }
  return out;
}

struct SimOptions {
  std::uint64_t slots = 10'000'000;
  std::uint64_t seed = 1;
  std::uint64_t warmup = 0;
  std::string backoff = "auto";

  csma::SimConfig config(std::uint64_t seed_override) const {
    csma::SimConfig c;
    c.total_slots = slots;
    c.seed = seed_override;
    c.warmup_slots = warmup;
    c.mode = backoff == "bernoulli" ? csma::BackoffMode::bernoulli
             : backoff == "window"  ? csma::BackoffMode::window
                                    : csma::BackoffMode::automatic;
    return c;
  }
};

void add_sim_flags(CLI::App* cmd, SimOptions& o) {
  cmd->add_option("--slots", o.slots, "Simulated slots (after warm-up)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Master RNG seed");
  cmd->add_option("--warmup", o.warmup, "Warm-up slots excluded from statistics");
  cmd->add_option("--backoff", o.backoff, "Backoff dynamics")
      ->check(CLI::IsMember({"auto", "bernoulli", "window"}));
}

csma::ThroughputReport run_method(const csma::NetworkSpec& spec, Cmd m, const SimOptions& sim,
                                  std::uint64_t seed) {
  switch (m) {
    case Cmd::exact: return csma::throughput_exact(spec);
    case Cmd::approx: return csma::throughput_lower_bound(spec);
    case Cmd::rtscts: return csma::throughput_rtscts(spec);
    case Cmd::oracle: return csma::slot_chain_throughput(spec);
    case Cmd::boe: return csma::boe_throughput(spec).report(spec);
    case Cmd::simulate:
      return csma::run_simulation(spec, sim.config(seed)).report(csma::hex64(csma::spec_hash(spec)));
  }
  throw std::logic_error("unhandled method");
}

json report_json(const csma::ThroughputReport& r, const std::string& method_name) {
  json links = json::array();
  for (std::size_t i = 0; i < r.per_link.size(); ++i) {
    json l{{"link_id", r.link_ids[i]}, {"throughput", r.per_link[i]}};
    if (i < r.stderr_per_link.size()) l["stderr"] = r.stderr_per_link[i];
    links.push_back(l);
  }
  return {{"method", method_name},
          {"spec_hash", r.metadata.spec_hash},
          {"residual", r.metadata.residual},
          {"state_count", r.metadata.state_count},
          {"total", r.total()},
          {"links", links}};
}

csma::NetworkSpec load_spec(const std::string& path) { return csma::parse_network_spec(read_file(path)); }

// Evaluates fn(0..n-1) on a small worker pool; results land by index, so
// output order never depends on completion order.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

// ---- cliques ---------------------------------------------------------------

int cmd_cliques(const std::string& path, const Output& out) {
  const auto spec = load_spec(path);
  const auto layout = csma::build_layout(spec);
  if (out.json_doc()) {
    json channels = json::array(), links = json::array();
    for (std::size_t c = 0; c < layout.channel_count(); ++c) {
      json members = json::array();
      for (auto i : layout.channels[c]) members.push_back(spec.links[i].id);
      channels.push_back({{"channel", c}, {"links", members}});
    }
    for (std::size_t i = 0; i < spec.link_count(); ++i)
      links.push_back({{"link_id", spec.links[i].id}, {"channels", layout.U[i]}});
    out.write(json{{"channel_count", layout.channel_count()}, {"channels", channels}, {"links", links}});
    return kExitOk;
  }
  std::ostringstream os;
  os << "kind,id,members\n";
  for (std::size_t c = 0; c < layout.channel_count(); ++c) {
    std::string members;
    for (auto i : layout.channels[c]) members += (members.empty() ? "" : " ") + spec.links[i].id;
    os << "channel," << c << "," << csv_field(members) << "\n";
  }
  for (std::size_t i = 0; i < spec.link_count(); ++i) {
    std::string u;
    for (auto c : layout.U[i]) u += (u.empty() ? "" : " ") + std::to_string(c);
    os << "link," << csv_field(spec.links[i].id) << "," << u << "\n";
  }
  out.write(os.str());
  return kExitOk;
}

// ---- analyze ---------------------------------------------------------------

json dump_states(const csma::NetworkSpec& spec) {
  const auto sol = csma::solve_renewal(spec);
  json states = json::array();
  for (std::size_t s = 0; s < sol.size(); ++s) {
    const auto& st = sol.space.states[s];
    json active = json::object();
    for (std::size_t i = 0; i < st.remaining.size(); ++i)
      if (st.remaining[i]) active[spec.links[i].id] = st.remaining[i];
    const auto proj = csma::project_state(st, sol.layout(), sol.tau());
    states.push_back({{"index", s},
                      {"remaining", active},
                      {"projection", csma::to_string(proj)},
                      {"signature", csma::to_string(csma::state_signature(proj))},
                      {"holding", sol.holding[s]},
                      {"pi", sol.embedded[s]},
                      {"pi_tilde", sol.limiting[s]}});
  }
  return {{"state_count", sol.size()}, {"residual", sol.residual}, {"states", states}};
}

int cmd_analyze(const std::string& path, const std::string& method, bool dump, const SimOptions& sim,
                const Output& out) {
  const auto spec = load_spec(path);
  const Cmd m = parse_method(method);
  const auto report = run_method(spec, m, sim, sim.seed);
  if (out.json_doc() || dump) {
    json doc = report_json(report, method);
    if (dump) doc["model"] = dump_states(spec);
    out.write(doc);
    return kExitOk;
  }
  std::ostringstream os;
  os << "link_id,throughput,method\n";
  for (std::size_t i = 0; i < report.per_link.size(); ++i)
    os << csv_field(report.link_ids[i]) << "," << fmt(report.per_link[i]) << "," << method << "\n";
  out.write(os.str());
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const std::string& path, const SimOptions& sim, const Output& out) {
  const auto spec = load_spec(path);
  const auto r = csma::run_simulation(spec, sim.config(sim.seed));
  if (out.json_doc()) {
    json links = json::array();
    for (std::size_t i = 0; i < r.links.size(); ++i) {
      const auto& l = r.links[i];
      links.push_back({{"link_id", r.link_ids[i]},
                       {"attempts", l.attempts},
                       {"successes", l.successes},
                       {"collisions", l.collisions},
                       {"throughput", l.throughput},
                       {"stderr", l.stderr_estimate}});
    }
    out.write(json{{"method", "simulate"},
                   {"seed", r.seed},
                   {"slots", r.measured_slots},
                   {"warmup", sim.warmup},
                   {"tau", r.tau},
                   {"spec_hash", csma::hex64(csma::spec_hash(spec))},
                   {"channel_busy_slots", r.channel_busy_slots},
                   {"links", links}});
    return kExitOk;
  }
  std::ostringstream os;
  os << "link_id,attempts,successes,throughput,stderr\n";
  for (std::size_t i = 0; i < r.links.size(); ++i) {
    const auto& l = r.links[i];
    os << csv_field(r.link_ids[i]) << "," << l.attempts << "," << l.successes << "," << fmt(l.throughput) << ","
       << fmt(l.stderr_estimate) << "\n";
  }
  out.write(os.str());
  return kExitOk;
}

// ---- sweep -----------------------------------------------------------------

struct SweepRow {
  std::string link;
  std::string method;
  double throughput = std::numeric_limits<double>::quiet_NaN();
  double stderr_value = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

struct PointResult {
  std::vector<SweepRow> rows;
  int exit = kExitOk;
};

// Applies one grid value to a copy of the spec.
csma::NetworkSpec apply_parameter(csma::NetworkSpec spec, const std::string& param, double v) {
  const auto as_window = [&](double x) {
    if (x < 0 || x != std::floor(x)) throw csma::ValidationError({"backoff window must be a non-negative integer"});
    return static_cast<int>(x);
  };
  if (param == "W_all") {
    for (auto& l : spec.links) {
      l.window = as_window(v);
      l.q = csma::q_from_window(*l.window);
    }
  } else if (param == "q_all") {
    for (auto& l : spec.links) {
      l.window.reset();
      l.q = v;
    }
  } else if (param == "tau") {
    if (v != std::floor(v)) throw csma::ValidationError({"tau must be an integer"});
    spec.tau = static_cast<int>(v);
  } else if (param.rfind("W:", 0) == 0) {
    auto id = spec.find(param.substr(2));
    if (!id) throw InputError("unknown link in parameter '" + param + "'");
    spec.links[*id].window = as_window(v);
    spec.links[*id].q = csma::q_from_window(*spec.links[*id].window);
  } else {
    throw InputError("unknown sweep parameter '" + param + "' (W_all, q_all, tau or W:<link>)");
  }
  csma::require_valid(spec, csma::AccessMode::basic);
  return spec;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const csma::GuardRailError*>(&e)) return kExitGuardRail;
  if (dynamic_cast<const csma::ValidationError*>(&e) || dynamic_cast<const csma::ParseError*>(&e) ||
      dynamic_cast<const InputError*>(&e))
    return kExitInput;
  return kExitViolation;
}

std::vector<double> parse_grid(const std::vector<std::string>& items) {
  std::vector<double> grid;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.empty()) continue;
      try {
        std::size_t used = 0;
        grid.push_back(std::stod(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw InputError("bad grid value '" + part + "'");
      }
    }
  }
  if (grid.empty()) throw InputError("empty grid");
  return grid;
}

std::string grid_label(double v) { return fmt(v); }

struct Argmax {
  std::string method;
  double value;
  double total;
};

// Per method: grid value with the largest "total" row.
std::vector<Argmax> sweep_argmax(const std::vector<double>& grid, const std::vector<PointResult>& points,
                                 const std::vector<std::string>& methods) {
  std::vector<Argmax> out;
  for (const auto& m : methods) {
    Argmax best{m, std::numeric_limits<double>::quiet_NaN(), -1.0};
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (const auto& r : points[g].rows)
        if (r.method == m && r.link == "TOTAL" && r.status == "ok" && r.throughput > best.total)
          best = {m, grid[g], r.throughput};
    out.push_back(best);
  }
  return out;
}

int write_sweep(const std::string& param, const std::vector<double>& grid, const std::vector<PointResult>& points,
                const std::vector<std::string>& methods, const Output& out) {
  int exit = kExitOk;
  for (const auto& p : points) exit = std::max(exit, p.exit);
  const auto best = sweep_argmax(grid, points, methods);
  if (out.json_doc()) {
    json rows = json::array();
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (const auto& r : points[g].rows) {
        json j{{"parameter", param}, {"value", grid[g]}, {"link_id", r.link}, {"method", r.method}, {"status", r.status}};
        j["throughput"] = std::isnan(r.throughput) ? json(nullptr) : json(r.throughput);
        j["stderr"] = std::isnan(r.stderr_value) ? json(nullptr) : json(r.stderr_value);
        rows.push_back(j);
      }
    json am = json::array();
    for (const auto& b : best)
      am.push_back({{"method", b.method},
                    {"value", std::isnan(b.value) ? json(nullptr) : json(b.value)},
                    {"total", b.total}});
    out.write(json{{"rows", rows}, {"argmax", am}, {"partial", exit != kExitOk}});
  } else {
    std::ostringstream os;
    os << "parameter,value,link_id,method,throughput,stderr,status\n";
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (const auto& r : points[g].rows)
        os << csv_field(param) << "," << grid_label(grid[g]) << "," << csv_field(r.link) << "," << r.method << ","
           << fmt(r.throughput) << "," << fmt(r.stderr_value) << "," << csv_field(r.status) << "\n";
    out.write(os.str());
  }
  for (const auto& b : best) {
    if (std::isnan(b.value))
      std::cerr << "argmax " << b.method << ": no successful grid point\n";
    else
      std::cerr << "argmax " << b.method << ": " << param << "=" << grid_label(b.value) << " total=" << fmt(b.total)
                << "\n";
  }
  if (exit != kExitOk) std::cerr << "sweep: some grid points failed; their rows are flagged in the status column\n";
  return exit;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::vector<std::string>& grid_items,
              const std::vector<std::string>& method_items, const SimOptions& sim, const Output& out) {
  const auto base = load_spec(path);
  const auto grid = parse_grid(grid_items);
  const auto methods = parse_methods(method_items);
  if (methods.empty()) throw InputError("no methods given");
  std::vector<std::string> names;
  for (auto m : methods) names.push_back(name_of(m));

  std::vector<PointResult> points(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    auto& pr = points[g];
    for (std::size_t k = 0; k < methods.size(); ++k) {
      try {
        const auto spec = apply_parameter(base, param, grid[g]);
        const auto r = run_method(spec, methods[k], sim, csma::derive_seed(sim.seed, g));
        for (std::size_t i = 0; i < r.per_link.size(); ++i) {
          SweepRow row{r.link_ids[i], names[k], r.per_link[i]};
          if (i < r.stderr_per_link.size()) row.stderr_value = r.stderr_per_link[i];
          pr.rows.push_back(row);
        }
        SweepRow total{"TOTAL", names[k], r.total()};
        if (!r.stderr_per_link.empty()) {
          double v = 0;
          for (double s : r.stderr_per_link) v += s * s;
          total.stderr_value = std::sqrt(v);
        }
        pr.rows.push_back(total);
      } catch (const std::exception& e) {
        pr.rows.push_back({"TOTAL", names[k], std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), std::string("error: ") + e.what()});
        pr.exit = std::max(pr.exit, exit_code_for(e));
      }
    }
  });
  return write_sweep(param, grid, points, names, out);
}

// ---- compare ---------------------------------------------------------------

int cmd_compare(const std::string& path, const std::vector<std::string>& method_items, const SimOptions& sim,
                const Output& out) {
  const auto spec = load_spec(path);
  const auto methods = parse_methods(method_items);
  if (methods.size() < 2) throw InputError("compare needs at least two methods");
  std::vector<csma::ThroughputReport> reports;
  std::vector<std::string> names;
  for (auto m : methods) {
    reports.push_back(run_method(spec, m, sim, sim.seed));
    names.push_back(name_of(m));
  }

  struct Deviation {
    std::string a, b;
    double max_abs = 0, max_rel = 0;
  };
  std::vector<Deviation> devs;
  for (std::size_t x = 0; x < reports.size(); ++x)
    for (std::size_t y = x + 1; y < reports.size(); ++y) {
      Deviation d{names[x], names[y]};
      for (std::size_t i = 0; i < spec.link_count(); ++i) {
        const double va = reports[x].per_link[i], vb = reports[y].per_link[i];
        const double diff = std::abs(va - vb);
        d.max_abs = std::max(d.max_abs, diff);
        const double scale = std::max(std::abs(va), std::abs(vb));
        if (scale > 0) d.max_rel = std::max(d.max_rel, diff / scale);
      }
      devs.push_back(d);
    }

  // approx is a lower bound on exact.
  std::vector<std::string> violations;
  const auto find = [&](Cmd c) {
    auto it = std::find(methods.begin(), methods.end(), c);
    return it == methods.end() ? -1 : static_cast<int>(it - methods.begin());
  };
  if (int a = find(Cmd::approx), e = find(Cmd::exact); a >= 0 && e >= 0)
    for (std::size_t i = 0; i < spec.link_count(); ++i)
      if (reports[a].per_link[i] > reports[e].per_link[i] + 1e-12)
        violations.push_back("approx > exact on link " + spec.links[i].id);

  if (out.json_doc()) {
    json links = json::array();
    for (std::size_t i = 0; i < spec.link_count(); ++i) {
      json row{{"link_id", spec.links[i].id}};
      for (std::size_t k = 0; k < reports.size(); ++k) row[names[k]] = reports[k].per_link[i];
      links.push_back(row);
    }
    json dj = json::array();
    for (const auto& d : devs) dj.push_back({{"a", d.a}, {"b", d.b}, {"max_abs", d.max_abs}, {"max_rel", d.max_rel}});
    out.write(json{{"methods", names}, {"links", links}, {"deviations", dj}, {"dominance_violations", violations}});
  } else {
    std::ostringstream os;
    os << "link_id";
    for (const auto& n : names) os << "," << n;
    os << "\n";
    for (std::size_t i = 0; i < spec.link_count(); ++i) {
      os << csv_field(spec.links[i].id);
      for (const auto& r : reports) os << "," << fmt(r.per_link[i]);
      os << "\n";
    }
    os << "\nmethod_a,method_b,max_abs_deviation,max_rel_deviation\n";
    for (const auto& d : devs) os << d.a << "," << d.b << "," << fmt(d.max_abs) << "," << fmt(d.max_rel) << "\n";
    out.write(os.str());
  }
  for (const auto& v : violations) std::cerr << "dominance violation: " << v << "\n";
  return violations.empty() ? kExitOk : kExitViolation;
}

// ---- multibss --------------------------------------------------------------

csma::Method multibss_method(const std::string& s) {
  if (s == "rtscts") return csma::Method::rts_cts;
  if (s == "exact") return csma::Method::exact;
  if (s == "approx") return csma::Method::lower_bound;
  throw InputError("multibss analyze supports rtscts, exact and approx");
}

void write_multibss(const csma::MultiBssReport& r, const std::string& method, const Output& out) {
  if (out.json_doc()) {
    json groups = json::array();
    for (const auto& g : r.groups)
      groups.push_back({{"group", g.key},
                        {"n", g.n},
                        {"aggregated", g.aggregated},
                        {"per_node", g.per_node},
                        {"stderr_per_node", g.stderr_per_node}});
    out.write(json{{"method", method}, {"tau", r.tau}, {"total", r.total}, {"total_stderr", r.total_stderr}, {"groups", groups}});
    return;
  }
  std::ostringstream os;
  os << "group,n,aggregated,per_node,stderr_per_node,method\n";
  for (const auto& g : r.groups)
    os << csv_field(g.key) << "," << g.n << "," << fmt(g.aggregated) << "," << fmt(g.per_node) << ","
       << fmt(g.stderr_per_node) << "," << method << "\n";
  os << "TOTAL,," << fmt(r.total) << ",," << fmt(r.total_stderr) << "," << method << "\n";
  out.write(os.str());
}

csma::MultiBssSpec apply_multibss_parameter(csma::MultiBssSpec m, const std::string& param, double v) {
  if (param == "W_all") {
    if (v < 0 || v != std::floor(v)) throw csma::ValidationError({"backoff window must be a non-negative integer"});
    return csma::with_window(std::move(m), static_cast<int>(v));
  }
  if (param == "q_all") {
    for (auto& g : m.groups) {
      g.window.reset();
      g.q = v;
    }
  } else if (param == "tau") {
    m.tau = static_cast<int>(v);
  } else {
    throw InputError("unknown multibss sweep parameter '" + param + "' (W_all, q_all or tau)");
  }
  if (auto viol = csma::validate(m); !viol.empty()) throw csma::ValidationError(viol);
  return m;
}

int cmd_multibss_sweep(const std::string& path, const std::string& param, const std::vector<std::string>& grid_items,
                       const std::vector<std::string>& method_items, const SimOptions& sim, const Output& out) {
  const auto base = csma::parse_multibss_spec(read_file(path));
  const auto grid = parse_grid(grid_items);
  std::vector<std::string> names;
  for (const auto& item : method_items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) {
        if (part != "simulate") multibss_method(part);
        names.push_back(part);
      }
  }
  if (names.empty()) throw InputError("no methods given");

  std::vector<PointResult> points(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    auto& pr = points[g];
    for (const auto& name : names) {
      try {
        const auto m = apply_multibss_parameter(base, param, grid[g]);
        const auto r = name == "simulate" ? csma::simulate_multibss(m, sim.config(csma::derive_seed(sim.seed, g)))
                                          : csma::analyze_multibss(m, multibss_method(name));
        const bool sim_run = name == "simulate";
        for (const auto& gr : r.groups)
          pr.rows.push_back({gr.key, name, gr.per_node,
                             sim_run ? gr.stderr_per_node : std::numeric_limits<double>::quiet_NaN()});
        pr.rows.push_back({"TOTAL", name, r.total, sim_run ? r.total_stderr : std::numeric_limits<double>::quiet_NaN()});
      } catch (const std::exception& e) {
        pr.rows.push_back({"TOTAL", name, std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), std::string("error: ") + e.what()});
        pr.exit = std::max(pr.exit, exit_code_for(e));
      }
    }
  });
  return write_sweep(param, grid, points, names, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturation throughput of slotted CSMA networks"};
  app.require_subcommand(1);

  std::string spec_path, method = "exact", mb_method = "rtscts", param = "W_all";
  std::vector<std::string> grid_items, method_items;
  bool dump = false;
  Output out;
  SimOptions sim;

  auto* cliques = app.add_subcommand("cliques", "List logical channels (maximal sensing cliques)");
  cliques->add_option("spec", spec_path, "Topology document")->required();
  add_output_flags(cliques, out);

  auto* analyze = app.add_subcommand("analyze", "Per-link throughput from the renewal model or a baseline");
  analyze->add_option("spec", spec_path, "Topology document")->required();
  analyze->add_option("--method", method, "exact, approx, rtscts, oracle, boe or simulate");
  analyze->add_flag("--dump-states", dump, "Include the solved state space in the output document");
  add_sim_flags(analyze, sim);
  add_output_flags(analyze, out);

  auto* simulate = app.add_subcommand("simulate", "Slot-level simulation");
  simulate->add_option("spec", spec_path, "Topology document")->required();
  add_sim_flags(simulate, sim);
  add_output_flags(simulate, out);

  auto* sweep = app.add_subcommand("sweep", "Evaluate methods over a parameter grid");
  sweep->add_option("spec", spec_path, "Topology document")->required();
  sweep->add_option("--param", param, "W_all, q_all, tau or W:<link id>");
  sweep->add_option("--grid", grid_items, "Grid values, comma separated")->required();
  sweep->add_option("--methods,--method", method_items, "Methods, comma separated")->required();
  add_sim_flags(sweep, sim);
  add_output_flags(sweep, out);

  auto* compare = app.add_subcommand("compare", "Side-by-side methods with pairwise deviations");
  compare->add_option("spec", spec_path, "Topology document")->required();
  compare->add_option("--methods,--method", method_items, "Methods, comma separated")->required();
  add_sim_flags(compare, sim);
  add_output_flags(compare, out);

  auto* multibss = app.add_subcommand("multibss", "Multi-BSS uplink with grouped stations");
  multibss->require_subcommand(1);
  auto* mb_analyze = multibss->add_subcommand("analyze", "Analytical group and total throughput");
  mb_analyze->add_option("spec", spec_path, "Multi-BSS document")->required();
  mb_analyze->add_option("--method", mb_method, "rtscts, exact or approx");
  add_output_flags(mb_analyze, out);
  auto* mb_simulate = multibss->add_subcommand("simulate", "Station-level simulation");
  mb_simulate->add_option("spec", spec_path, "Multi-BSS document")->required();
  add_sim_flags(mb_simulate, sim);
  add_output_flags(mb_simulate, out);
  auto* mb_sweep = multibss->add_subcommand("sweep", "Evaluate methods over a parameter grid");
  mb_sweep->add_option("spec", spec_path, "Multi-BSS document")->required();
  mb_sweep->add_option("--param", param, "W_all, q_all or tau");
  mb_sweep->add_option("--grid", grid_items, "Grid values, comma separated")->required();
  mb_sweep->add_option("--methods,--method", method_items, "rtscts, exact, approx, simulate")->required();
  add_sim_flags(mb_sweep, sim);
  add_output_flags(mb_sweep, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*cliques) return cmd_cliques(spec_path, out);
    if (*analyze) return cmd_analyze(spec_path, method, dump, sim, out);
    if (*simulate) return cmd_simulate(spec_path, sim, out);
    if (*sweep) return cmd_sweep(spec_path, param, grid_items, method_items, sim, out);
    if (*compare) return cmd_compare(spec_path, method_items, sim, out);
    if (*mb_analyze) {
      const auto m = csma::parse_multibss_spec(read_file(spec_path));
      write_multibss(csma::analyze_multibss(m, multibss_method(mb_method)), mb_method, out);
      return kExitOk;
    }
    if (*mb_simulate) {
      const auto m = csma::parse_multibss_spec(read_file(spec_path));
      write_multibss(csma::simulate_multibss(m, sim.config(sim.seed)), "simulate", out);
      return kExitOk;
    }
    if (*mb_sweep) return cmd_multibss_sweep(spec_path, param, grid_items, method_items, sim, out);
  } catch (const csma::ValidationError& e) {
    std::cerr << "error: invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const csma::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const csma::GuardRailError& e) {
    std::cerr << "error: guard rail: " << e.what() << "\n";
    return kExitGuardRail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitOk;
}
