#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdaas/rng.hpp"

namespace sdaas::failure {

enum class DroneFailureKind { healthy, soft, hard };
enum class SwarmFailureKind { operational, partial, complete };
enum class SeverityCategory { none, low, mid, high };
enum class DeliveryOutcome { success, early, late, non_simultaneous };

inline const char* to_string(DroneFailureKind k) {
  switch (k) {
    case DroneFailureKind::healthy: return "healthy";
    case DroneFailureKind::soft: return "soft";
    default: return "hard";
  }
}
inline const char* to_string(SeverityCategory c) {
  switch (c) {
    case SeverityCategory::none: return "none";
    case SeverityCategory::low: return "low";
    case SeverityCategory::mid: return "mid";
    default: return "high";
  }
}
inline const char* to_string(DeliveryOutcome o) {
  switch (o) {
    case DeliveryOutcome::success: return "success";
    case DeliveryOutcome::early: return "early";
    case DeliveryOutcome::late: return "late";
    default: return "non_simultaneous";
  }
}

struct FailurePolicy {
  double sigma_perf = 0.2;       // hard-failure floor on the performance scale
  double alpha_perf = 0.9;       // soft-failure ceiling on the performance scale
  int omega = 1;                 // soft-failing drones tolerated before complete failure
  double rho_s = 90.0;           // max arrival-time spread, seconds
  double epsilon_excess = 0.05;  // excess-consumption margin triggering soft classification

  void validate() const {
    if (omega < 1) throw std::invalid_argument("FailurePolicy: omega must be >= 1");
    if (rho_s <= 0) throw std::invalid_argument("FailurePolicy: rho must be positive");
    if (epsilon_excess < 0) throw std::invalid_argument("FailurePolicy: epsilon must be >= 0");
    if (!(sigma_perf < alpha_perf))
      throw std::invalid_argument("FailurePolicy: require sigma < alpha");
  }

  static int default_omega(int swarm_size) { return (swarm_size + 1) / 2; }
};

struct DroneFailureState {
  std::string drone_id;
  DroneFailureKind kind = DroneFailureKind::healthy;
  double failure_time_s = 0.0;      // mission clock, meaningful for soft/hard only
  double uptime_after_s = 0.0;
  double degradation_factor = 1.0;  // Epm multiplier from failure_time_s onward

  double epm_factor_at(double t) const {
    if (kind == DroneFailureKind::healthy || t < failure_time_s) return 1.0;
    return degradation_factor;
  }
};

struct SeverityReport {
  std::map<std::string, double> per_drone_dls;
  double sigma = 0.0;
  double sls = 0.0;
  SeverityCategory category = SeverityCategory::none;
};

inline DroneFailureKind classify_drone(double performance, double degradation,
                                       const FailurePolicy& policy) {
  if (degradation < 0) throw std::domain_error("classify_drone: degradation must be >= 0");
  if (performance < 0 || performance > 1)
    throw std::domain_error("classify_drone: performance must be in [0,1]");
  double residual = performance - degradation;
  if (residual <= policy.sigma_perf) return DroneFailureKind::hard;
  if (residual <= policy.alpha_perf) return DroneFailureKind::soft;
  return DroneFailureKind::healthy;
}

inline SwarmFailureKind classify_swarm(const std::vector<DroneFailureState>& states,
                                       const FailurePolicy& policy) {
  if (states.empty()) throw std::invalid_argument("classify_swarm: empty swarm");
  int hard = 0, soft = 0;
  for (const auto& s : states) {
    if (s.kind == DroneFailureKind::hard) ++hard;
    else if (s.kind == DroneFailureKind::soft) ++soft;
  }
  if (hard >= 1 || soft >= policy.omega) return SwarmFailureKind::complete;
  if (soft >= 1) return SwarmFailureKind::partial;
  return SwarmFailureKind::operational;
}

// Drone Level Severity from default (DEC) and actual (AEC) cumulative
// consumption percentages at the next node and at failure time:
//   DLS = 1 - (DEC_node - DEC_ft) / (AEC_node - AEC_ft)
// Out-of-range ratios are clamped to [0,1]; `clamped`, when given, reports it.
inline double drone_level_severity(double dec_node, double dec_ft, double aec_node,
                                   double aec_ft, bool* clamped = nullptr) {
  if (aec_node <= aec_ft)
    throw std::domain_error("drone_level_severity: AEC must strictly accrue after FT");
  if (dec_node < dec_ft)
    throw std::domain_error("drone_level_severity: DEC_node below DEC_ft");
  double dls = 1.0 - (dec_node - dec_ft) / (aec_node - aec_ft);
  bool out = dls < 0.0 || dls > 1.0;
  if (clamped) *clamped = out;
  return std::clamp(dls, 0.0, 1.0);
}

// sigma = 1 - DEC_node/100: the DLS level beyond which the drone cannot
// reach the next node.
inline double hard_failure_threshold(double dec_node_pct) {
  if (dec_node_pct < 0 || dec_node_pct > 100)
    throw std::domain_error("hard_failure_threshold: DEC_node out of [0,100]");
  return 1.0 - dec_node_pct / 100.0;
}

inline SeverityCategory severity_category(double sls) {
  if (sls < 1.0 / 3.0) return SeverityCategory::low;
  if (sls < 2.0 / 3.0) return SeverityCategory::mid;
  return SeverityCategory::high;
}

struct SwarmSeverity {
  bool any_failure = false;
  double sls = 0.0;
  SeverityCategory category = SeverityCategory::none;
};

inline SwarmSeverity swarm_level_severity(const std::vector<double>& dls_values) {
  if (dls_values.empty()) return {};
  double sum = 0.0;
  for (double v : dls_values) sum += v;
  double sls = sum / static_cast<double>(dls_values.size());
  return {true, sls, severity_category(sls)};
}

// Mission-level delivery check: spread within rho, then window membership.
// Boundary arrivals exactly at st/et are accepted.
inline DeliveryOutcome delivery_success(const std::map<std::string, double>& arrivals,
                                        double window_start, double window_end,
                                        const FailurePolicy& policy) {
  if (arrivals.empty()) throw std::domain_error("delivery_success: no arrivals");
  double lo = arrivals.begin()->second, hi = lo;
  for (const auto& [id, t] : arrivals) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (hi - lo > policy.rho_s) return DeliveryOutcome::non_simultaneous;
  if (lo < window_start) return DeliveryOutcome::early;
  if (hi > window_end) return DeliveryOutcome::late;
  return DeliveryOutcome::success;
}

// Ground-truth soft-failure injection for simulation.
struct InjectionConfig {
  double soft_failure_prob = 0.5;
  double mission_duration_s = 3600.0;  // FT drawn uniformly over this span
  double factor_min = 1.2;
  double factor_max = 1.6;
  double uptime_min_s = 300.0;
  double uptime_max_s = 3600.0;
};

inline std::vector<DroneFailureState> inject_failures(const std::vector<std::string>& drone_ids,
                                                      std::uint64_t seed,
                                                      const InjectionConfig& cfg) {
  std::vector<DroneFailureState> out;
  out.reserve(drone_ids.size());
  Rng rng(seed);
  for (const auto& id : drone_ids) {
    Rng stream = rng.fork(std::hash<std::string>{}(id));
    DroneFailureState st;
    st.drone_id = id;
    if (stream.bernoulli(cfg.soft_failure_prob)) {
      st.kind = DroneFailureKind::soft;
      st.failure_time_s = stream.uniform(0.0, cfg.mission_duration_s);
      st.degradation_factor = stream.uniform(cfg.factor_min, cfg.factor_max);
      st.uptime_after_s = stream.uniform(cfg.uptime_min_s, cfg.uptime_max_s);
    }
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace sdaas::failure
