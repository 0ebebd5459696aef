#pragma once

#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "sdaas/composer.hpp"
#include "sdaas/failure.hpp"
#include "sdaas/fedlearn.hpp"
#include "sdaas/flightlog.hpp"

namespace sdaas::config {

// Flat `key = value` file; `#` starts a comment. Speeds accept a `kmh`
// suffix and are converted to m/s on load; all other units are SI.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& is) {
    KeyValueFile kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos)
          throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      kv.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(it->second, key);
  }

  int get_int(const std::string& key, int fallback) const {
    return static_cast<int>(get_double(key, fallback));
  }

  // Speed in m/s; a trailing `kmh` marks km/h input.
  double get_speed(const std::string& key, double fallback_ms) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback_ms;
    std::string v = it->second;
    bool kmh = false;
    if (v.size() > 3 && v.substr(v.size() - 3) == "kmh") {
      kmh = true;
      v = trim(v.substr(0, v.size() - 3));
    }
    double x = to_double(v, key);
    return kmh ? x / 3.6 : x;
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  static double to_double(const std::string& v, const std::string& key) {
    try {
      std::size_t pos = 0;
      double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw std::runtime_error("config key '" + key + "': malformed number '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

inline composer::ComposerConfig load_composer_config(const KeyValueFile& kv) {
  composer::ComposerConfig cfg;
  cfg.spec.body_mass_kg = kv.get_double("drone.body_mass_kg", cfg.spec.body_mass_kg);
  cfg.spec.battery_mass_kg = kv.get_double("drone.battery_mass_kg", cfg.spec.battery_mass_kg);
  cfg.spec.battery_capacity_mAh = kv.get_double("drone.battery_mAh", cfg.spec.battery_capacity_mAh);
  cfg.spec.battery_voltage = kv.get_double("drone.battery_V", cfg.spec.battery_voltage);
  cfg.spec.eta = kv.get_double("drone.eta", cfg.spec.eta);
  cfg.spec.rotor_area_m2 = kv.get_double("drone.rotor_area_m2", cfg.spec.rotor_area_m2);
  cfg.spec.max_payload_kg = kv.get_double("drone.max_payload_kg", cfg.spec.max_payload_kg);
  cfg.spec.base_speed = kv.get_speed("drone.base_speed", cfg.spec.base_speed);
  cfg.spec.min_energy_speed = kv.get_speed("drone.min_energy_speed", cfg.spec.min_energy_speed);
  cfg.spec.charge_power_w = kv.get_double("drone.charge_power_w", cfg.spec.charge_power_w);
  cfg.spec.attack_angle_rad = kv.get_double("drone.attack_angle_rad", cfg.spec.attack_angle_rad);
  cfg.curve.v_min = kv.get_speed("curve.v_min", cfg.spec.min_energy_speed);
  cfg.curve.v_max = kv.get_speed("curve.v_max", cfg.spec.base_speed);
  cfg.curve.excess_ratio = kv.get_double("curve.excess_ratio", cfg.curve.excess_ratio);
  cfg.policy.sigma_perf = kv.get_double("policy.sigma", cfg.policy.sigma_perf);
  cfg.policy.alpha_perf = kv.get_double("policy.alpha", cfg.policy.alpha_perf);
  cfg.policy.omega = kv.get_int("policy.omega", cfg.policy.omega);
  cfg.policy.rho_s = kv.get_double("policy.rho_s", cfg.policy.rho_s);
  cfg.policy.epsilon_excess = kv.get_double("policy.epsilon", cfg.policy.epsilon_excess);
  cfg.speed_grid_steps = kv.get_int("composer.speed_grid_steps", cfg.speed_grid_steps);
  cfg.max_leg_factor = kv.get_int("composer.max_leg_factor", cfg.max_leg_factor);
  cfg.stretch_reserve_pct = kv.get_double("composer.stretch_reserve_pct", cfg.stretch_reserve_pct);
  cfg.spec.validate();
  cfg.curve.validate();
  return cfg;
}

inline failure::InjectionConfig load_injection_config(const KeyValueFile& kv) {
  failure::InjectionConfig inj;
  inj.soft_failure_prob = kv.get_double("inject.soft_failure_prob", inj.soft_failure_prob);
  inj.mission_duration_s = kv.get_double("inject.mission_duration_s", inj.mission_duration_s);
  inj.factor_min = kv.get_double("inject.factor_min", inj.factor_min);
  inj.factor_max = kv.get_double("inject.factor_max", inj.factor_max);
  inj.uptime_min_s = kv.get_double("inject.uptime_min_s", inj.uptime_min_s);
  inj.uptime_max_s = kv.get_double("inject.uptime_max_s", inj.uptime_max_s);
  return inj;
}

inline fed::TrainConfig load_train_config(const KeyValueFile& kv) {
  fed::TrainConfig cfg;
  cfg.epochs = kv.get_int("train.epochs", cfg.epochs);
  cfg.initial_lr = kv.get_double("train.initial_lr", cfg.initial_lr);
  cfg.history_weight = kv.get_int("train.history_weight", cfg.history_weight);
  cfg.validate();
  return cfg;
}

}  // namespace sdaas::config
