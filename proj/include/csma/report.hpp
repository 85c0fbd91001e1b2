#pragma once

#include <string>
#include <vector>

namespace csma {

enum class Method { exact, lower_bound, rts_cts, simulated, boe, oracle };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::lower_bound: return "lower_bound";
    case Method::rts_cts: return "rts_cts";
    case Method::simulated: return "simulated";
    case Method::boe: return "boe";
    case Method::oracle: return "oracle";
  }
  return "unknown";
}

struct ReportMetadata {
  std::string spec_hash;
  double residual = 0.0;
  std::size_t state_count = 0;
};

struct ThroughputReport {
  Method method = Method::exact;
  std::vector<std::string> link_ids;
  std::vector<double> per_link;
  // Standard errors; empty for analytical methods.
  std::vector<double> stderr_per_link;
  ReportMetadata metadata;

  double total() const {
    double s = 0.0;
    for (double v : per_link) s += v;
    return s;
  }
};

}  // namespace csma
