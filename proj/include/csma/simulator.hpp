#pragma once

// Slot-by-slot CSMA simulator.
//
// Each slot, a silent link whose sensing neighbourhood (itself included) was
// silent in the previous slot may start: with probability q (Bernoulli
// mode) or when its backoff counter is zero (window mode; otherwise the
// counter is decremented). A transmission holds the medium for τ slots and
// succeeds iff no interferer of the link is on the air in any of them. After
// every transmission the counter is redrawn uniformly from {0, ..., W}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cliques.hpp"
#include "report.hpp"
#include "topology.hpp"

namespace csma {

enum class BackoffMode {
  automatic,  // window dynamics for links that carry W, Bernoulli otherwise
  bernoulli,
  window,
};

struct SimConfig {
  std::uint64_t total_slots = 10'000'000;
  std::uint64_t seed = 1;
  std::uint64_t warmup_slots = 0;
  std::size_t batches = 100;
  BackoffMode mode = BackoffMode::automatic;
};

struct LinkSimStats {
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t collisions = 0;
  std::uint64_t busy_slots = 0;
  double throughput = 0.0;
  double stderr_estimate = 0.0;
};

struct SimResult {
  std::vector<std::string> link_ids;
  std::vector<LinkSimStats> links;
  // Busy slots per logical channel; empty when the layout was not built
  // (more than 64 links).
  std::vector<std::uint64_t> channel_busy_slots;
  std::uint64_t seed = 0;
  std::uint64_t measured_slots = 0;
  int tau = 1;
  // Batch-means standard error of the summed throughput.
  double total_stderr = 0.0;

  ThroughputReport report(const std::string& spec_hash = {}) const {
    ThroughputReport r;
    r.method = Method::simulated;
    r.link_ids = link_ids;
    for (const auto& l : links) {
      r.per_link.push_back(l.throughput);
      r.stderr_per_link.push_back(l.stderr_estimate);
    }
    r.metadata.spec_hash = spec_hash;
    return r;
  }
};

// SplitMix64; used to derive independent per-link and per-run seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline SimResult run_simulation(const NetworkSpec& spec, const SimConfig& cfg) {
  require_valid(spec, AccessMode::basic);
  if (cfg.total_slots < 1) throw std::invalid_argument("total_slots must be >= 1");
  const std::size_t k = spec.link_count();
  const std::size_t batches = std::max<std::size_t>(1, std::min<std::uint64_t>(cfg.batches, cfg.total_slots));
  const auto tau = static_cast<std::uint32_t>(spec.tau);

  std::vector<char> use_window(k);
  for (std::size_t i = 0; i < k; ++i) {
    switch (cfg.mode) {
      case BackoffMode::automatic: use_window[i] = spec.links[i].window.has_value(); break;
      case BackoffMode::bernoulli: use_window[i] = 0; break;
      case BackoffMode::window:
        if (!spec.links[i].window)
          throw std::invalid_argument("window mode needs a backoff window on link '" + spec.links[i].id + "'");
        use_window[i] = 1;
        break;
    }
  }

  std::vector<std::mt19937_64> rng;
  rng.reserve(k);
  for (std::size_t i = 0; i < k; ++i) rng.emplace_back(derive_seed(cfg.seed, i));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw_counter = [&](std::size_t i) {
    return static_cast<std::uint32_t>(
        std::uniform_int_distribution<int>(0, *spec.links[i].window)(rng[i]));
  };

  std::vector<std::uint32_t> remaining(k, 0), counter(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    if (use_window[i]) counter[i] = draw_counter(i);
  // Number of links on the air within {i} ∪ H_i, and within R_i.
  std::vector<std::uint32_t> sensed_busy(k, 0), interferers_on(k, 0);
  std::vector<char> corrupted(k, 0);
  std::vector<std::size_t> on_air, finishing, starting;

  const bool track_channels = k <= kMaxMaskedLinks;
  ChannelLayout layout;
  if (track_channels) layout = build_layout(spec.sensing);

  SimResult res;
  res.seed = cfg.seed;
  res.tau = spec.tau;
  res.measured_slots = cfg.total_slots;
  res.links.resize(k);
  for (const auto& l : spec.links) res.link_ids.push_back(l.id);
  if (track_channels) res.channel_busy_slots.assign(layout.channel_count(), 0);
  std::vector<std::vector<std::uint64_t>> batch_success(k, std::vector<std::uint64_t>(batches, 0));

  const auto set_on_air = [&](std::size_t i, int delta) {
    sensed_busy[i] += delta;
    for (std::size_t j : spec.sensing.neighbors(i)) sensed_busy[j] += delta;
    for (std::size_t v : spec.interference.victims_of(i)) interferers_on[v] += delta;
  };

  const std::uint64_t end = cfg.warmup_slots + cfg.total_slots;
  for (std::uint64_t t = 0; t < end; ++t) {
    const bool measuring = t >= cfg.warmup_slots;

    // Start decisions use the previous slot's activity.
    starting.clear();
    for (std::size_t i = 0; i < k; ++i) {
      if (sensed_busy[i] != 0) continue;
      bool go;
      if (use_window[i]) {
        go = counter[i] == 0;
        if (!go) --counter[i];
      } else {
        const double q = spec.links[i].q;
        go = q >= 1.0 || (q > 0.0 && unit(rng[i]) < q);
      }
      if (go) starting.push_back(i);
    }

    // Transmissions whose last slot was t-1 leave the air.
    for (std::size_t i : finishing) {
      set_on_air(i, -1);
      const bool ok = !corrupted[i];
      if (t - 1 >= cfg.warmup_slots) {
        auto& st = res.links[i];
        if (ok) {
          ++st.successes;
          const std::uint64_t b = (t - 1 - cfg.warmup_slots) * batches / cfg.total_slots;
          ++batch_success[i][b];
        } else {
          ++st.collisions;
        }
      }
      if (use_window[i]) counter[i] = draw_counter(i);
    }
    finishing.clear();

    for (std::size_t i : starting) {
      remaining[i] = tau;
      corrupted[i] = 0;
      set_on_air(i, +1);
      on_air.push_back(i);
      if (measuring) ++res.links[i].attempts;
    }
    // Anyone on the air now with an interferer also on the air is lost.
    for (std::size_t i : on_air)
      if (interferers_on[i] != 0) corrupted[i] = 1;

    if (measuring) {
      ChannelMask busy = 0;
      for (std::size_t i : on_air) {
        ++res.links[i].busy_slots;
        if (track_channels) busy |= layout.link_channels[i];
      }
      while (busy) {
        ++res.channel_busy_slots[std::countr_zero(busy)];
        busy &= busy - 1;
      }
    }

    // Age transmissions; those in their last slot finish at the next slot.
    std::size_t w = 0;
    for (std::size_t r = 0; r < on_air.size(); ++r) {
      const std::size_t i = on_air[r];
      if (--remaining[i] == 0)
        finishing.push_back(i);
      else
        on_air[w++] = i;
    }
    on_air.resize(w);
  }
  // Transmissions ending exactly at the horizon still count.
  for (std::size_t i : finishing) {
    if (!corrupted[i]) {
      ++res.links[i].successes;
      ++batch_success[i][batches - 1];
    } else {
      ++res.links[i].collisions;
    }
  }

  const double T = static_cast<double>(cfg.total_slots);
  const auto batch_stderr = [&](const std::vector<std::uint64_t>& counts) {
    if (batches < 2) return 0.0;
    std::vector<double> tp(batches);
    double mean = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::uint64_t lo = b * cfg.total_slots / batches, hi = (b + 1) * cfg.total_slots / batches;
      tp[b] = spec.tau * static_cast<double>(counts[b]) / static_cast<double>(hi - lo);
      mean += tp[b];
    }
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double v : tp) var += (v - mean) * (v - mean);
    var /= static_cast<double>(batches - 1);
    return std::sqrt(var / static_cast<double>(batches));
  };
  std::vector<std::uint64_t> batch_total(batches, 0);
  for (std::size_t i = 0; i < k; ++i) {
    auto& st = res.links[i];
    st.throughput = spec.tau * static_cast<double>(st.successes) / T;
    st.stderr_estimate = batch_stderr(batch_success[i]);
    for (std::size_t b = 0; b < batches; ++b) batch_total[b] += batch_success[i][b];
  }
  res.total_stderr = batch_stderr(batch_total);
  return res;
}

}  // namespace csma
