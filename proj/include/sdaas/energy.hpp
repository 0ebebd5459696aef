#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdaas::energy {

inline constexpr double kGravity = 9.81;        // m/s^2
inline constexpr double kAirDensity = 1.225;    // kg/m^3
inline constexpr double kKmhToMs = 1.0 / 3.6;

struct DroneSpec {
  double body_mass_kg = 1.216;
  double battery_mass_kg = 0.365;
  double battery_capacity_mAh = 4480.0;  // DJI Phantom 3 battery
  double battery_voltage = 15.2;
  double eta = 0.8;                      // power transfer efficiency, (0,1]
  double rotor_area_m2 = 0.2;            // total disc area for induced-speed approx
  double max_payload_kg = 2.5;
  double base_speed = 105.0 * kKmhToMs;  // m/s
  double min_energy_speed = 70.0 * kKmhToMs;
  double charge_power_w = 500.0;
  double attack_angle_rad = 0.1;

  void validate() const {
    if (body_mass_kg <= 0 || battery_mass_kg <= 0 || battery_capacity_mAh <= 0 ||
        battery_voltage <= 0 || rotor_area_m2 <= 0 || max_payload_kg <= 0 ||
        charge_power_w <= 0)
      throw std::invalid_argument("DroneSpec: all physical quantities must be positive");
    if (eta <= 0 || eta > 1) throw std::invalid_argument("DroneSpec: eta must be in (0,1]");
    if (!(min_energy_speed < base_speed))
      throw std::invalid_argument("DroneSpec: min_energy_speed must be below base_speed");
  }
};

// Convex speed-energy curve. Consumption is minimal at v_min and grows
// quadratically; excess_ratio fixes the curvature so that
// epm(v_max) = excess_ratio * epm(v_min).
struct EnergyCurve {
  double v_min = 70.0 * kKmhToMs;   // m/s, vertex of the curve
  double v_max = 105.0 * kKmhToMs;  // m/s, operating ceiling (base speed)
  double excess_ratio = 1.25;

  // Curvature normalized by the baseline consumption, 1/(m/s)^2.
  double curvature_per_base() const {
    double dv = v_max - v_min;
    return (excess_ratio - 1.0) / (dv * dv);
  }

  void validate() const {
    if (!(v_min > 0) || !(v_max > v_min))
      throw std::invalid_argument("EnergyCurve: require 0 < v_min < v_max");
    if (excess_ratio < 1.0)
      throw std::invalid_argument("EnergyCurve: excess_ratio must be >= 1");
  }
};

struct BatteryState {
  double level_pct = 100.0;  // [0, 100]
  double capacity_J = 0.0;
};

// Total capacity in joules: mAh/1000 * V * 3600. Evaluated in exactly this
// grouping so the DJI Phantom 3 figures come out bit-exact.
inline double battery_capacity_joules(const DroneSpec& spec) {
  if (spec.battery_capacity_mAh <= 0 || spec.battery_voltage <= 0)
    throw std::invalid_argument("battery_capacity_joules: mAh and voltage must be positive");
  return spec.battery_capacity_mAh / 1000.0 * spec.battery_voltage * 3600.0;
}

inline double thrust_newtons(const DroneSpec& spec, double payload_kg) {
  return (spec.body_mass_kg + spec.battery_mass_kg + payload_kg) * kGravity;
}

// Momentum-theory induced speed at hover, held constant along a segment.
inline double induced_speed(const DroneSpec& spec, double payload_kg) {
  double t = thrust_newtons(spec, payload_kg);
  return std::sqrt(t / (2.0 * kAirDensity * spec.rotor_area_m2));
}

// Baseline energy per meter (J/m) at airspeed v_a:
//   Epm = degradation * T * (v_a sin(alpha) + v_i) / (v_a * eta)
inline double energy_per_meter(const DroneSpec& spec, double payload_kg, double airspeed,
                               double attack_angle_rad, double degradation_factor = 1.0) {
  if (airspeed <= 0) throw std::domain_error("energy_per_meter: airspeed must be positive");
  if (attack_angle_rad < 0 || attack_angle_rad >= 1.5707963267948966)
    throw std::domain_error("energy_per_meter: attack angle must be in [0, pi/2)");
  if (degradation_factor < 1.0)
    throw std::domain_error("energy_per_meter: degradation factor must be >= 1");
  if (payload_kg < 0) throw std::domain_error("energy_per_meter: payload must be >= 0");
  if (payload_kg > spec.max_payload_kg)
    throw std::domain_error("energy_per_meter: payload " + std::to_string(payload_kg) +
                            " kg exceeds drone capacity");
  double t = thrust_newtons(spec, payload_kg);
  double vi = induced_speed(spec, payload_kg);
  return degradation_factor * t * (airspeed * std::sin(attack_angle_rad) + vi) /
         (airspeed * spec.eta);
}

inline double max_range(double capacity_J, double epm) {
  if (epm <= 0) throw std::domain_error("max_range: energy per meter must be positive");
  return capacity_J / epm;
}

// Consumption at speed v given the baseline consumption at v_min.
inline double epm_at_speed(const EnergyCurve& curve, double base_epm, double v) {
  if (v < curve.v_min || v > curve.v_max)
    throw std::domain_error("epm_at_speed: speed outside operating range");
  double dv = v - curve.v_min;
  return base_epm * (1.0 + curve.curvature_per_base() * dv * dv);
}

// Time spent at a node when `drones` need a recharge on `pads` pads,
// charging in sequential batches.
inline double node_time(int drones_needing_charge, int pads, double per_drone_charge_s) {
  if (drones_needing_charge < 0 || pads < 1 || per_drone_charge_s < 0)
    throw std::invalid_argument("node_time: invalid inputs");
  if (drones_needing_charge == 0) return 0.0;
  int batches = (drones_needing_charge + pads - 1) / pads;
  return static_cast<double>(batches) * per_drone_charge_s;
}

inline double charge_duration(const BatteryState& b, double target_pct, const DroneSpec& spec) {
  if (target_pct > 100.0) throw std::domain_error("charge_duration: target above 100%");
  if (target_pct < b.level_pct)
    throw std::domain_error("charge_duration: target below current level");
  return (target_pct - b.level_pct) / 100.0 * b.capacity_J / spec.charge_power_w;
}

}  // namespace sdaas::energy
