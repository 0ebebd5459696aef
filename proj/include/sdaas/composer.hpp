#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdaas/energy.hpp"
#include "sdaas/failure.hpp"
#include "sdaas/skyway.hpp"

namespace sdaas::composer {

using energy::DroneSpec;
using energy::EnergyCurve;
using failure::DeliveryOutcome;
using failure::DroneFailureState;
using failure::FailurePolicy;
using failure::SeverityCategory;

enum class SpeedAction { slow_down, speed_up, maintain };
enum class SegmentInterval { early, mid, late, none };
enum class Outcome { success, early, late, non_simultaneous, hard_failure };

inline const char* to_string(SpeedAction a) {
  switch (a) {
    case SpeedAction::slow_down: return "slow_down";
    case SpeedAction::speed_up: return "speed_up";
    default: return "maintain";
  }
}
inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::early: return "early";
    case Outcome::late: return "late";
    case Outcome::non_simultaneous: return "non_simultaneous";
    default: return "hard_failure";
  }
}

// Outcome rank for the exhaustive search: delivered-in-window best, battery
// depletion worst.
inline int outcome_rank(Outcome o) {
  switch (o) {
    case Outcome::success: return 0;
    case Outcome::early: return 1;
    case Outcome::late: return 2;
    case Outcome::non_simultaneous: return 3;
    default: return 4;
  }
}

inline Outcome to_outcome(DeliveryOutcome d) {
  switch (d) {
    case DeliveryOutcome::success: return Outcome::success;
    case DeliveryOutcome::early: return Outcome::early;
    case DeliveryOutcome::late: return Outcome::late;
    default: return Outcome::non_simultaneous;
  }
}

struct SimDrone {
  std::string id;
  double battery_pct = 100.0;
  double payload_kg = 0.0;
  DroneFailureState ground_truth;  // injected, drives simulation
};

// The swarm is atomic: one position, one speed, one clock for all drones.
struct SwarmState {
  std::vector<SimDrone> drones;
  std::string current_node;
  double current_speed = 0.0;
  double clock = 0.0;
  int nodes_visited = 0;
};

struct SpeedDecision {
  SpeedAction action = SpeedAction::maintain;
  double target_speed = 0.0;
  double effective_from = 0.0;  // mission clock; failure time of the most severe drone
};

// Prediction for one drone, mission-clock absolute.
struct NodePrediction {
  double failure_time = 0.0;  // absolute seconds
  double uptime_after = 0.0;
};

// Per-node prediction source. Implementations: the federated pipeline and a
// seeded noisy oracle for large benchmark runs. Only drones predicted to
// soft-fail appear in the map.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::map<std::string, NodePrediction> predict_at_node(const SwarmState& state) = 0;
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

// Ground-truth oracle with seeded Gaussian noise that decays as more nodes
// are visited: early predictions are coarse, continual updates refine them.
class NoisyOraclePredictor : public Predictor {
 public:
  NoisyOraclePredictor(std::vector<DroneFailureState> truth, std::uint64_t seed,
                       double initial_noise_s = 120.0, double decay = 0.5)
      : truth_(std::move(truth)), rng_(seed), noise_s_(initial_noise_s), decay_(decay) {}

  std::map<std::string, NodePrediction> predict_at_node(const SwarmState& state) override {
    std::map<std::string, NodePrediction> out;
    for (const auto& gt : truth_) {
      if (gt.kind == failure::DroneFailureKind::healthy) continue;
      NodePrediction p;
      p.failure_time = std::max(0.0, gt.failure_time_s + rng_.gaussian(0.0, noise_s_));
      p.uptime_after = std::max(1.0, gt.uptime_after_s + rng_.gaussian(0.0, noise_s_));
      out[gt.drone_id] = p;
    }
    noise_s_ *= decay_;
    return out;
  }

 private:
  std::vector<DroneFailureState> truth_;
  Rng rng_;
  double noise_s_;
  double decay_;
};

struct SpeedChange {
  double at_clock = 0.0;
  double speed = 0.0;
};

struct LegRecord {
  std::string from;
  std::string to;
  double dist_m = 0.0;
  double entry_speed = 0.0;
  std::vector<SpeedChange> speed_changes;
  std::map<std::string, double> battery_in;
  std::map<std::string, double> battery_out;
  double travel_time_s = 0.0;
  double charge_time_s = 0.0;  // node time at the leg's destination
  double wait_time_s = 0.0;    // window wait inserted before departing
  double depart_clock = 0.0;
  double arrive_clock = 0.0;
};

struct SimulationTrace {
  std::string request_id;
  std::string strategy;
  std::vector<LegRecord> legs;
  double total_travel_s = 0.0;
  double total_node_s = 0.0;
  double total_wait_s = 0.0;
  double total_distance_m = 0.0;
  double delivery_time_s = 0.0;  // travel + node + wait
  std::map<std::string, double> arrivals;
  Outcome outcome = Outcome::hard_failure;
  std::string failure_detail;

  nlohmann::json to_json() const {
    nlohmann::json legs_j = nlohmann::json::array();
    for (const auto& l : legs) {
      nlohmann::json changes = nlohmann::json::array();
      for (const auto& c : l.speed_changes) changes.push_back({{"at", c.at_clock}, {"speed", c.speed}});
      legs_j.push_back({{"from", l.from},
                        {"to", l.to},
                        {"dist_m", l.dist_m},
                        {"entry_speed", l.entry_speed},
                        {"speed_changes", changes},
                        {"battery_in", l.battery_in},
                        {"battery_out", l.battery_out},
                        {"travel_s", l.travel_time_s},
                        {"charge_s", l.charge_time_s},
                        {"wait_s", l.wait_time_s},
                        {"depart", l.depart_clock},
                        {"arrive", l.arrive_clock}});
    }
    return {{"request_id", request_id}, {"strategy", strategy},
            {"outcome", to_string(outcome)}, {"delivery_time_s", delivery_time_s},
            {"travel_s", total_travel_s},   {"node_s", total_node_s},
            {"wait_s", total_wait_s},       {"distance_m", total_distance_m},
            {"failure_detail", failure_detail}, {"legs", legs_j}};
  }
};

struct ComposerConfig {
  DroneSpec spec;
  EnergyCurve curve;
  FailurePolicy policy;
  double depart_epoch_s = 0.0;
  int speed_grid_steps = 8;  // admissible speeds between v_min and v_max
  int max_leg_factor = 4;    // legs capped at factor * node count
  // Battery floor required to commit to a multi-hop stretch that skips the
  // recharge safety net; direct hops may run the battery to zero.
  double stretch_reserve_pct = 20.0;

  std::vector<double> speed_grid() const {
    std::vector<double> grid;
    for (int i = 0; i < speed_grid_steps; ++i)
      grid.push_back(curve.v_min +
                     (curve.v_max - curve.v_min) * static_cast<double>(i) /
                         static_cast<double>(speed_grid_steps - 1));
    return grid;
  }
};

inline SegmentInterval segment_interval(double ft, double segment_tt) {
  if (segment_tt <= 0) throw std::domain_error("segment_interval: travel time must be positive");
  if (ft < 0 || ft > segment_tt) return SegmentInterval::none;
  if (ft < segment_tt / 3.0) return SegmentInterval::early;
  if (ft < 2.0 * segment_tt / 3.0) return SegmentInterval::mid;
  return SegmentInterval::late;
}

namespace detail {

// Piecewise-constant phase of a leg: one speed, one epm factor per drone.
struct EnergyPhase {
  double speed = 0.0;
  double duration_s = 0.0;
};

// Battery percentage points consumed by `drone` flying `dist_m` with entry
// speed until `change_at` (relative seconds), then `target`, with the
// multiplicative degradation factor applied from `fail_at` (relative).
inline double leg_consumption_pct(const ComposerConfig& cfg, double payload, double dist_m,
                                  double entry_speed, double target_speed, double change_at,
                                  double fail_at, double degradation_factor) {
  double capacity = energy::battery_capacity_joules(cfg.spec);
  double base_epm_min = energy::energy_per_meter(cfg.spec, payload, cfg.curve.v_min,
                                                 cfg.spec.attack_angle_rad);
  auto epm_at = [&](double v, double factor) {
    return energy::epm_at_speed(cfg.curve, base_epm_min, v) * factor;
  };
  // Walk the leg in time; boundaries at the speed change and the failure onset.
  double t = 0.0, covered = 0.0, joules = 0.0;
  while (covered < dist_m - 1e-9) {
    double v = t < change_at ? entry_speed : target_speed;
    double factor = t >= fail_at ? degradation_factor : 1.0;
    double next_boundary = std::numeric_limits<double>::infinity();
    if (t < change_at) next_boundary = std::min(next_boundary, change_at);
    if (t < fail_at) next_boundary = std::min(next_boundary, fail_at);
    double t_arrive = t + (dist_m - covered) / v;
    double t_end = std::min(next_boundary, t_arrive);
    double d = v * (t_end - t);
    joules += epm_at(v, factor) * d;
    covered += d;
    t = t_end;
  }
  return joules / capacity * 100.0;
}

inline double leg_travel_time(double dist_m, double entry_speed, double target_speed,
                              double change_at) {
  double d1 = entry_speed * std::max(0.0, change_at);
  if (d1 >= dist_m) return dist_m / entry_speed;
  return change_at + (dist_m - d1) / target_speed;
}

}  // namespace detail

// Severity evaluation of the predicted failures against the next segment.
struct SegmentRisk {
  bool any = false;
  SegmentInterval interval = SegmentInterval::none;  // of the most severe drone
  SeverityCategory category = SeverityCategory::none;
  double effective_from = 0.0;                       // absolute clock
  std::map<std::string, double> per_drone_dls;
  double sls = 0.0;
  bool predicted_hard = false;
};

// DLS from the default (base-speed) consumption trajectory versus the
// actual trajectory implied by the predicted failure time and uptime: the
// drone is assumed to burn its remaining battery over `uptime` seconds.
inline SegmentRisk assess_segment_risk(const SwarmState& state,
                                       const std::map<std::string, NodePrediction>& preds,
                                       double dist_m, const ComposerConfig& cfg) {
  SegmentRisk risk;
  double tt_base = dist_m / cfg.spec.base_speed;
  double capacity = energy::battery_capacity_joules(cfg.spec);
  double worst_dls = -1.0;
  std::vector<double> dls_values;
  for (const auto& d : state.drones) {
    auto it = preds.find(d.id);
    if (it == preds.end()) continue;
    double ft_rel = it->second.failure_time - state.clock;
    auto interval = segment_interval(ft_rel, tt_base);
    if (interval == SegmentInterval::none) continue;
    double base_epm_min = energy::energy_per_meter(cfg.spec, d.payload_kg, cfg.curve.v_min,
                                                   cfg.spec.attack_angle_rad);
    double epm_base_speed = energy::epm_at_speed(cfg.curve, base_epm_min, cfg.spec.base_speed);
    double default_rate = epm_base_speed * cfg.spec.base_speed / capacity * 100.0;  // %/s
    double dec_ft = default_rate * ft_rel;
    double dec_node = default_rate * tt_base;
    double remaining_at_ft = std::max(1e-6, d.battery_pct - dec_ft);
    double implied_rate = remaining_at_ft / std::max(1.0, it->second.uptime_after);  // %/s
    double aec_node = dec_ft + implied_rate * (tt_base - ft_rel);
    double dls = aec_node > dec_ft
                     ? failure::drone_level_severity(dec_node, dec_ft, aec_node, dec_ft)
                     : 0.0;
    double sigma = failure::hard_failure_threshold(std::min(100.0, dec_node));
    if (dls > sigma) risk.predicted_hard = true;
    risk.per_drone_dls[d.id] = dls;
    dls_values.push_back(dls);
    if (dls > worst_dls) {
      worst_dls = dls;
      risk.interval = interval;
      risk.effective_from = it->second.failure_time;
    }
    risk.any = true;
  }
  if (!risk.any) return risk;
  // Single failure: category from that drone's DLS; multiple: from the SLS.
  auto agg = failure::swarm_level_severity(dls_values);
  risk.sls = agg.sls;
  risk.category = dls_values.size() == 1 ? failure::severity_category(dls_values[0])
                                         : agg.category;
  return risk;
}

// Predicted epm factor per drone for reachability checks: ratio of the
// implied post-failure rate to the default rate, floored at 1.
inline std::map<std::string, std::pair<double, double>> predicted_degradations(
    const SwarmState& state, const std::map<std::string, NodePrediction>& preds,
    const ComposerConfig& cfg) {
  std::map<std::string, std::pair<double, double>> out;  // id -> (fail_at_abs, factor)
  double capacity = energy::battery_capacity_joules(cfg.spec);
  for (const auto& d : state.drones) {
    auto it = preds.find(d.id);
    if (it == preds.end()) {
      out[d.id] = {std::numeric_limits<double>::infinity(), 1.0};
      continue;
    }
    double base_epm_min = energy::energy_per_meter(cfg.spec, d.payload_kg, cfg.curve.v_min,
                                                   cfg.spec.attack_angle_rad);
    double epm_base_speed = energy::epm_at_speed(cfg.curve, base_epm_min, cfg.spec.base_speed);
    double default_rate = epm_base_speed * cfg.spec.base_speed / capacity * 100.0;
    double ft_rel = std::max(0.0, it->second.failure_time - state.clock);
    double dec_ft = default_rate * ft_rel;
    double remaining = std::max(1e-6, d.battery_pct - dec_ft);
    double implied_rate = remaining / std::max(1.0, it->second.uptime_after);
    double factor = std::max(1.0, implied_rate / default_rate);
    out[d.id] = {it->second.failure_time, factor};
  }
  return out;
}

// Can every drone reach the end of a `dist_m` stretch at the given plan,
// keeping at least `reserve_pct` battery?
inline bool all_reachable(const SwarmState& state, double dist_m, double entry_speed,
                          double target_speed, double change_at_rel,
                          const std::map<std::string, std::pair<double, double>>& degradations,
                          const ComposerConfig& cfg, double reserve_pct = 0.0) {
  for (const auto& d : state.drones) {
    auto [fail_abs, factor] = degradations.at(d.id);
    double fail_rel = std::max(0.0, fail_abs - state.clock);
    double drop = detail::leg_consumption_pct(cfg, d.payload_kg, dist_m, entry_speed,
                                              target_speed, change_at_rel, fail_rel, factor);
    if (d.battery_pct - drop < reserve_pct) return false;
  }
  return true;
}

// Decision matrix over (failure interval, severity).
inline std::optional<SpeedDecision> speed_decision(
    const SegmentRisk& risk, const SwarmState& state, double dist_m,
    const std::map<std::string, std::pair<double, double>>& degradations,
    const ComposerConfig& cfg) {
  const auto grid = cfg.speed_grid();
  double current = state.current_speed;
  double change_rel = std::max(0.0, risk.effective_from - state.clock);

  auto reachable_at = [&](double target, double from_rel) {
    return all_reachable(state, dist_m, current, target, from_rel, degradations, cfg);
  };
  auto slow_down = [&]() -> std::optional<SpeedDecision> {
    // Lowest admissible speed; consumption rises with speed, so v_min is the
    // best shot. Unreachable even at v_min means a predicted hard failure.
    if (!reachable_at(cfg.curve.v_min, change_rel)) return std::nullopt;
    return SpeedDecision{SpeedAction::slow_down, cfg.curve.v_min, risk.effective_from};
  };
  auto try_speed_up = [&]() -> SpeedDecision {
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      if (*it <= current) break;
      if (reachable_at(*it, change_rel))
        return {SpeedAction::speed_up, *it, risk.effective_from};
    }
    return {SpeedAction::maintain, current, risk.effective_from};
  };
  auto maintain_or_slow = [&]() -> std::optional<SpeedDecision> {
    if (reachable_at(current, change_rel))
      return SpeedDecision{SpeedAction::maintain, current, risk.effective_from};
    return slow_down();
  };

  switch (risk.interval) {
    case SegmentInterval::early:
      return slow_down();
    case SegmentInterval::mid:
      if (risk.category == SeverityCategory::high) return slow_down();
      if (risk.category == SeverityCategory::low) {
        auto d = try_speed_up();
        if (d.action == SpeedAction::speed_up) return d;
        return maintain_or_slow();
      }
      return maintain_or_slow();  // mid x mid
    case SegmentInterval::late:
      if (risk.category == SeverityCategory::high) return slow_down();
      {
        auto d = try_speed_up();
        if (d.action == SpeedAction::speed_up) return d;
        return maintain_or_slow();
      }
    default:
      return SpeedDecision{SpeedAction::maintain, current, state.clock};
  }
}

struct LegOutcome {
  bool hard_failure = false;
  std::string detail;
  LegRecord record;
};

// Advance the swarm across one segment with ground-truth degradation.
inline LegOutcome simulate_leg(SwarmState& state, const std::string& to, double dist_m,
                               const SpeedDecision& decision, const ComposerConfig& cfg) {
  LegOutcome out;
  LegRecord& leg = out.record;
  leg.from = state.current_node;
  leg.to = to;
  leg.dist_m = dist_m;
  leg.entry_speed = state.current_speed;
  leg.depart_clock = state.clock;

  double change_rel = std::max(0.0, decision.effective_from - state.clock);
  double target = decision.action == SpeedAction::maintain ? state.current_speed
                                                           : decision.target_speed;
  if (decision.action != SpeedAction::maintain) {
    double d1 = state.current_speed * change_rel;
    if (d1 < dist_m)
      leg.speed_changes.push_back({state.clock + change_rel, target});
  }
  double tt = detail::leg_travel_time(dist_m, state.current_speed, target, change_rel);
  leg.travel_time_s = tt;

  for (auto& d : state.drones) {
    leg.battery_in[d.id] = d.battery_pct;
    double fail_rel = d.ground_truth.kind == failure::DroneFailureKind::healthy
                          ? std::numeric_limits<double>::infinity()
                          : std::max(0.0, d.ground_truth.failure_time_s - state.clock);
    double drop = detail::leg_consumption_pct(cfg, d.payload_kg, dist_m, state.current_speed,
                                              target, change_rel, fail_rel,
                                              d.ground_truth.degradation_factor);
    double after = d.battery_pct - drop;
    if (after < 0.0 && !out.hard_failure) {
      out.hard_failure = true;
      // Depletion position: fraction of the drop the battery could cover.
      double frac = d.battery_pct / drop;
      out.detail = "battery depletion of " + d.id + " on " + leg.from + "-" + leg.to +
                   " at ~" + std::to_string(frac * dist_m) + " m";
    }
    d.battery_pct = after;
    leg.battery_out[d.id] = after;
  }
  state.clock += tt;
  state.current_node = to;
  state.current_speed = target;
  leg.arrive_clock = state.clock;
  ++state.nodes_visited;
  return out;
}

// ---------------------------------------------------------------------------
// Mission composition
// ---------------------------------------------------------------------------

enum class Strategy { heuristic, lookahead, greedy, exhaustive };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::heuristic: return "heuristic";
    case Strategy::lookahead: return "lookahead";
    case Strategy::greedy: return "greedy";
    default: return "exhaustive";
  }
}

inline SwarmState initial_state(const net::DeliveryRequest& req,
                                const std::vector<DroneFailureState>& truth,
                                const ComposerConfig& cfg) {
  SwarmState st;
  st.current_node = req.source;
  st.current_speed = cfg.spec.base_speed;
  st.clock = cfg.depart_epoch_s;
  for (std::size_t i = 0; i < req.payloads_kg.size(); ++i) {
    SimDrone d;
    d.id = "D" + std::to_string(i);
    d.payload_kg = req.payloads_kg[i];
    for (const auto& gt : truth)
      if (gt.drone_id == d.id) d.ground_truth = gt;
    if (d.ground_truth.drone_id.empty()) d.ground_truth.drone_id = d.id;
    st.drones.push_back(std::move(d));
  }
  return st;
}

namespace detail {

struct NextStop {
  std::vector<std::string> path;  // from current node (exclusive) to target
  double dist = 0.0;              // combined distance
  // One speed decision and no intermediate recharge for the whole path;
  // otherwise the path is executed hop by hop with recharges.
  bool stretch = true;
};

}  // namespace detail

// Plan the next stop(s), up to `depth + 1` hops out (depth 0: direct
// neighbors only). Candidates are costed closed-form (travel + recharge
// estimate + remaining trip) and admissibility-checked per drone: direct
// hops count as reachable if v_min works (the least-consumption plan);
// multi-hop plans either qualify as a stretch (combined distance at base
// speed with the configured battery reserve, skipping recharges) or fall
// back to hop-by-hop execution with a full recharge between hops. Depth 0
// picks the cheapest admissible candidate; deeper planning commits to the
// longest admissible plan (plans reaching the destination first) so one
// decision covers the whole window. Everything is int-indexed so deep
// lookahead stays cheap.
inline std::optional<detail::NextStop> choose_next(
    const SwarmState& state, const net::SkywayNetwork& netw, const std::string& dst, int depth,
    const std::vector<char>& visited,
    const std::map<std::string, std::pair<double, double>>& degradations,
    const ComposerConfig& cfg, const std::vector<double>& dist_to_dst) {
  const int n = static_cast<int>(netw.nodes().size());
  const int src = netw.index_of(state.current_node);
  const int dst_i = netw.index_of(dst);
  const int max_hops = depth + 1;

  // BFS by hop count keeping the shortest-distance parent per node.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> parent(n, -1);
  std::vector<int> reached;
  dist[src] = 0.0;
  std::vector<int> frontier{src};
  for (int hop = 0; hop < max_hops && !frontier.empty(); ++hop) {
    std::vector<int> next;
    for (int u : frontier)
      for (const auto& [v, w] : netw.adjacency(u)) {
        if (v == src) continue;
        // Deeper hops only extend toward the destination; a stretch worth
        // skipping a recharge for never backtracks mid-flight.
        if (hop > 0 && dist_to_dst[v] >= dist_to_dst[u]) continue;
        double nd = dist[u] + w;
        if (nd < dist[v] - 1e-9) {
          if (dist[v] == inf) reached.push_back(v);
          dist[v] = nd;
          parent[v] = u;
          next.push_back(v);
        }
      }
    frontier = std::move(next);
  }

  // Per-drone consumption rates and the predicted failure phase boundary,
  // for closed-form battery-drop estimates.
  const double capacity = energy::battery_capacity_joules(cfg.spec);
  struct DroneRate {
    double epm_min, epm_base, fail_rel, factor, battery;
  };
  std::vector<DroneRate> rates;
  rates.reserve(state.drones.size());
  for (const auto& d : state.drones) {
    auto [fail_abs, factor] = degradations.at(d.id);
    double base = energy::energy_per_meter(cfg.spec, d.payload_kg, cfg.curve.v_min,
                                           cfg.spec.attack_angle_rad);
    rates.push_back({base, energy::epm_at_speed(cfg.curve, base, cfg.spec.base_speed),
                     std::max(0.0, fail_abs - state.clock), factor, d.battery_pct});
  }

  // Estimated recharge time per reached node from the cumulative battery
  // drop at base speed; intermediates of multi-hop plans reuse it.
  std::vector<double> nt(n, 0.0);
  for (int v : reached) {
    if (v == dst_i) continue;
    int needing = 0;
    double per_drone = 0.0;
    for (const auto& r : rates) {
      double d1 = std::min(dist[v], cfg.spec.base_speed * r.fail_rel);
      double drop = r.epm_base * (d1 + r.factor * (dist[v] - d1)) / capacity * 100.0;
      double level = r.battery - drop;
      if (level < 100.0 - 1e-9) {
        ++needing;
        energy::BatteryState b{std::max(0.0, level), capacity};
        per_drone = std::max(per_drone, energy::charge_duration(b, 100.0, cfg.spec));
      }
    }
    nt[v] = energy::node_time(needing, netw.node_at(v).pads, per_drone);
  }

  // Constant speed from the segment start makes admissibility closed-form.
  auto covers = [&](double seg_dist, double speed, double battery, double fail_dist,
                    double factor, double epm, double reserve) {
    double d1 = std::min(seg_dist, fail_dist);
    double drop = epm * (d1 + factor * (seg_dist - d1)) / capacity * 100.0;
    return battery - drop >= reserve;
  };

  struct Plan {
    int node = -1;
    int hops = 0;
    bool to_dst = false;
    bool stretch = true;
    double cost = 0.0;
  };
  std::optional<Plan> best;
  auto better = [&](const Plan& a, const Plan& b) {
    if (depth > 0) {
      // Deep planning: commit to the longest window, destination first.
      if (a.to_dst != b.to_dst) return a.to_dst;
      if (a.hops != b.hops) return a.hops > b.hops;
    }
    if (a.cost != b.cost) return a.cost < b.cost;
    return netw.node_at(a.node).id < netw.node_at(b.node).id;
  };

  for (int v : reached) {
    if (visited[v] && v != dst_i) continue;
    Plan p;
    p.node = v;
    p.to_dst = v == dst_i;
    for (int u = v; u != src; u = parent[u]) ++p.hops;
    double tt = dist[v] / cfg.spec.base_speed;
    double rem = dist_to_dst[v] / cfg.spec.base_speed;
    if (p.hops == 1) {
      bool ok = true;
      for (const auto& r : rates)
        ok = ok && covers(dist[v], cfg.curve.v_min, r.battery, cfg.curve.v_min * r.fail_rel,
                          r.factor, r.epm_min, 0.0);
      if (!ok) continue;
      p.cost = tt + nt[v] + rem;
    } else {
      bool ok = true;
      for (const auto& r : rates)
        ok = ok && covers(dist[v], cfg.spec.base_speed, r.battery,
                          cfg.spec.base_speed * r.fail_rel, r.factor, r.epm_base,
                          cfg.stretch_reserve_pct);
      if (ok) {
        p.cost = tt + nt[v] + rem;
      } else {
        // Hop-by-hop: the first hop from the current battery, later hops
        // from a full recharge with the degradation worst-cased across
        // the hop; cost carries every recharge along the chain.
        p.stretch = false;
        ok = true;
        double nt_sum = nt[v];
        for (int w = v; w != src && ok; w = parent[w]) {
          int u = parent[w];
          double seg = dist[w] - (u == src ? 0.0 : dist[u]);
          bool first_hop = u == src;
          for (const auto& r : rates)
            ok = ok && covers(seg, cfg.curve.v_min, first_hop ? r.battery : 100.0,
                              first_hop ? cfg.curve.v_min * r.fail_rel : 0.0, r.factor,
                              r.epm_min, 0.0);
          if (!first_hop && ok) nt_sum += nt[u];
        }
        if (!ok) continue;
        p.cost = tt + nt_sum + rem;
      }
    }
    if (!best || better(p, *best)) best = p;
  }
  if (!best) return std::nullopt;

  detail::NextStop stop;
  stop.dist = dist[best->node];
  stop.stretch = best->stretch;
  for (int u = best->node; u != src; u = parent[u]) stop.path.push_back(netw.node_at(u).id);
  std::reverse(stop.path.begin(), stop.path.end());
  return stop;
}

// Shared mission loop. `pinned_path`, when set, fixes the node sequence
// (exhaustive search); `depth` > 0 enables multi-hop candidates (lookahead);
// `greedy` pins the speed to v_min and skips prediction.
inline SimulationTrace run_mission(const net::DeliveryRequest& req, const net::SkywayNetwork& netw,
                                   Predictor* predictor,
                                   const std::vector<DroneFailureState>& truth,
                                   const ComposerConfig& cfg, Strategy strategy, int depth = 0,
                                   const std::vector<std::string>* pinned_path = nullptr) {
  SimulationTrace trace;
  trace.request_id = req.id;
  trace.strategy = to_string(strategy);
  SwarmState state = initial_state(req, truth, cfg);
  const bool greedy = strategy == Strategy::greedy;
  double capacity = energy::battery_capacity_joules(cfg.spec);

  std::vector<double> dist_to_dst = netw.shortest_distances_from(req.destination);

  std::vector<char> visited(netw.nodes().size(), 0);
  visited[netw.index_of(req.source)] = 1;
  std::size_t pinned_pos = 0;
  int max_legs = cfg.max_leg_factor * static_cast<int>(netw.nodes().size());
  int legs_done = 0;

  auto finish_failed = [&](const std::string& detail) {
    trace.outcome = Outcome::hard_failure;
    trace.failure_detail = detail;
    trace.delivery_time_s = trace.total_travel_s + trace.total_node_s + trace.total_wait_s;
    return trace;
  };

  while (state.current_node != req.destination) {
    if (++legs_done > max_legs) return finish_failed("leg budget exhausted");

    std::map<std::string, NodePrediction> preds;
    if (!greedy && predictor) preds = predictor->predict_at_node(state);
    auto degradations = predicted_degradations(state, preds, cfg);

    // Pick the next stop.
    std::vector<std::string> path;  // nodes after the current one
    double dist = 0.0;
    bool stretch = true;
    if (pinned_path) {
      if (pinned_pos + 1 >= pinned_path->size()) return finish_failed("pinned path exhausted");
      path = {(*pinned_path)[pinned_pos + 1]};
      auto d = netw.segment_distance(state.current_node, path[0]);
      if (!d) return finish_failed("pinned path has no segment " + state.current_node + "-" + path[0]);
      dist = *d;
      if (!all_reachable(state, dist, cfg.spec.base_speed, cfg.spec.base_speed, 0.0,
                         degradations, cfg))
        return finish_failed("no admissible speed reaches " + path[0]);
      ++pinned_pos;
    } else {
      auto pick = choose_next(state, netw, req.destination, depth, visited, degradations, cfg,
                              dist_to_dst);
      // Dead-end spur: every neighbor already visited. Backtracking is
      // allowed; the leg budget still bounds cycling.
      if (!pick)
        pick = choose_next(state, netw, req.destination, depth,
                           std::vector<char>(netw.nodes().size(), 0), degradations, cfg,
                           dist_to_dst);
      if (!pick) return finish_failed("no reachable neighbor from " + state.current_node);
      path = std::move(pick->path);
      dist = pick->dist;
      stretch = pick->stretch;
    }

    // A stretch plan gets one speed decision for the combined distance and
    // no intermediate recharge; a hop-by-hop plan reuses the predictions
    // but decides speed and recharges at every hop.
    std::vector<std::pair<std::vector<std::string>, double>> stretches;
    if (stretch) {
      stretches.emplace_back(std::move(path), dist);
    } else {
      std::string prev = state.current_node;
      for (const auto& node : path) {
        stretches.emplace_back(std::vector<std::string>{node},
                               netw.segment_distance(prev, node).value());
        prev = node;
      }
    }

    for (std::size_t si = 0; si < stretches.size(); ++si) {
      const auto& spath = stretches[si].first;
      double sdist = stretches[si].second;
      if (si > 0 && ++legs_done > max_legs) return finish_failed("leg budget exhausted");

      // Greedy enters every segment at the minimum-consumption speed; the
      // others at base speed.
      state.current_speed = greedy ? cfg.curve.v_min : cfg.spec.base_speed;
      SpeedDecision decision{SpeedAction::maintain, state.current_speed, state.clock};
      if (!greedy) {
        auto risk = assess_segment_risk(state, preds, sdist, cfg);
        if (risk.any) {
          auto d = speed_decision(risk, state, sdist, degradations, cfg);
          if (!d) return finish_failed("no admissible speed reaches " + spath.back());
          decision = *d;
        }
      }

      // Window wait at the second-last node: leave late enough that the
      // earliest possible arrival is not before the window opens.
      bool final_stretch = spath.back() == req.destination;
      if (final_stretch) {
        double target = decision.action == SpeedAction::maintain ? state.current_speed
                                                                 : decision.target_speed;
        double change_rel = std::max(0.0, decision.effective_from - state.clock);
        double tt = detail::leg_travel_time(sdist, state.current_speed, target, change_rel);
        double projected = state.clock + tt;
        if (projected < req.window_start) {
          double wait = req.window_start - projected;
          trace.total_wait_s += wait;
          state.clock += wait;
          if (decision.action != SpeedAction::maintain)
            decision.effective_from += wait;
        }
      }

      // Traverse the stretch hop by hop; intermediate hops get no node time.
      for (std::size_t h = 0; h < spath.size(); ++h) {
        const std::string& to = spath[h];
        auto seg = netw.segment_distance(state.current_node, to);
        double hop_dist = seg.value();
        auto leg = simulate_leg(state, to, hop_dist, decision, cfg);
        leg.record.wait_time_s = h == 0 && final_stretch ? trace.total_wait_s : 0.0;
        bool at_stop = h + 1 == spath.size();
        if (at_stop && to != req.destination) {
          // Full recharge in pad-limited batches.
          int needing = 0;
          double per_drone = 0.0;
          for (auto& d : state.drones) {
            if (d.battery_pct < 100.0 - 1e-9 && d.battery_pct >= 0.0) {
              ++needing;
              energy::BatteryState b{d.battery_pct, capacity};
              per_drone = std::max(per_drone, energy::charge_duration(b, 100.0, cfg.spec));
            }
          }
          if (!leg.hard_failure) {
            leg.record.charge_time_s = energy::node_time(needing, netw.node(to).pads, per_drone);
            state.clock += leg.record.charge_time_s;
            for (auto& d : state.drones) d.battery_pct = 100.0;
            trace.total_node_s += leg.record.charge_time_s;
          }
        }
        trace.total_travel_s += leg.record.travel_time_s;
        trace.total_distance_m += hop_dist;
        visited[netw.index_of(to)] = 1;
        trace.legs.push_back(leg.record);
        if (leg.hard_failure) return finish_failed(leg.detail);
      }
    }
  }

  trace.delivery_time_s = trace.total_travel_s + trace.total_node_s + trace.total_wait_s;
  for (const auto& d : state.drones) trace.arrivals[d.id] = state.clock;
  trace.outcome =
      to_outcome(failure::delivery_success(trace.arrivals, req.window_start, req.window_end,
                                           cfg.policy));
  return trace;
}

inline SimulationTrace compose_heuristic(const net::DeliveryRequest& req,
                                         const net::SkywayNetwork& netw,
                                         const PredictorFactory& make_predictor,
                                         const std::vector<DroneFailureState>& truth,
                                         const ComposerConfig& cfg) {
  auto predictor = make_predictor();
  return run_mission(req, netw, predictor.get(), truth, cfg, Strategy::heuristic);
}

inline SimulationTrace compose_lookahead(const net::DeliveryRequest& req,
                                         const net::SkywayNetwork& netw,
                                         const PredictorFactory& make_predictor,
                                         const std::vector<DroneFailureState>& truth,
                                         const ComposerConfig& cfg, int depth) {
  if (depth < 1) throw std::invalid_argument("compose_lookahead: depth must be >= 1");
  auto predictor = make_predictor();
  auto trace = run_mission(req, netw, predictor.get(), truth, cfg, Strategy::lookahead, depth);
  return trace;
}

inline SimulationTrace compose_greedy(const net::DeliveryRequest& req,
                                      const net::SkywayNetwork& netw,
                                      const std::vector<DroneFailureState>& truth,
                                      const ComposerConfig& cfg) {
  return run_mission(req, netw, nullptr, truth, cfg, Strategy::greedy);
}

inline SimulationTrace compose_exhaustive(const net::DeliveryRequest& req,
                                          const net::SkywayNetwork& netw,
                                          const PredictorFactory& make_predictor,
                                          const std::vector<DroneFailureState>& truth,
                                          const ComposerConfig& cfg, int cap) {
  if (cap < 1) throw std::invalid_argument("compose_exhaustive: cap must be >= 1");
  auto paths = net::shortest_paths_topk(netw, req.source, req.destination, cap);
  std::optional<SimulationTrace> best;
  for (const auto& path : paths) {
    auto predictor = make_predictor();
    auto trace = run_mission(req, netw, predictor.get(), truth, cfg, Strategy::exhaustive, 0, &path);
    if (!best) {
      best = std::move(trace);
      continue;
    }
    int ra = outcome_rank(trace.outcome), rb = outcome_rank(best->outcome);
    if (ra < rb ||
        (ra == rb && (trace.delivery_time_s < best->delivery_time_s ||
                      (trace.delivery_time_s == best->delivery_time_s &&
                       trace.total_node_s < best->total_node_s))))
      best = std::move(trace);
  }
  if (!best) {
    SimulationTrace t;
    t.request_id = req.id;
    t.strategy = to_string(Strategy::exhaustive);
    t.outcome = Outcome::hard_failure;
    t.failure_detail = "no path from " + req.source + " to " + req.destination;
    return t;
  }
  return *best;
}

}  // namespace sdaas::composer
