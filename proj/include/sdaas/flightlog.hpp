#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdaas/rng.hpp"
#include "sdaas/skyway.hpp"

namespace sdaas::flightlog {

// Telemetry feature schema, fixed order.
inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "velocity_x",       "velocity_y",       "velocity_z",
      "angular_vel_x",    "angular_vel_y",    "angular_vel_z",
      "linear_acc_x",     "linear_acc_y",     "linear_acc_z",
      "magnetic_x",       "magnetic_y",       "magnetic_z",
      "fluid_pressure",   "temperature",      "altitude_error",
      "airspeed_error",   "tracking_error",   "ideal_distance"};
  return names;
}

inline std::size_t feature_count() { return feature_names().size(); }

inline int feature_index(const std::string& name) {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

struct RawLogPoint {
  double timestamp_s = 0.0;
  int feature = 0;  // index into feature_names()
  double value = 0.0;
};

struct FeatureVector {
  std::int64_t second = 0;
  std::vector<double> values;  // feature_count() entries
};

struct LabeledSeries {
  std::vector<FeatureVector> vectors;  // sorted by second, unique
  double label_ttf = 0.0;              // seconds from series start to fault onset
  double label_uptime = 0.0;           // flight time after onset
};

// Per-feature standardization statistics (population std).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;  // zero-variance columns, transform to 0

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::object();
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
      cols[names[i]] = {{"mean", mean[i]}, {"std", std[i]}, {"constant", (bool)constant[i]}};
    return cols;
  }

  static Scaler from_json(const nlohmann::json& j) {
    Scaler s;
    const auto& names = feature_names();
    s.mean.resize(names.size());
    s.std.resize(names.size());
    s.constant.resize(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& c = j.at(names[i]);
      s.mean[i] = c.at("mean").get<double>();
      s.std[i] = c.at("std").get<double>();
      s.constant[i] = c.at("constant").get<bool>();
    }
    return s;
  }
};

inline Scaler standardize_fit(const std::vector<std::vector<double>>& columns) {
  if (columns.size() != feature_count())
    throw std::invalid_argument("standardize_fit: column count does not match schema");
  Scaler s;
  for (const auto& col : columns) {
    if (col.empty()) throw std::invalid_argument("standardize_fit: empty column");
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= static_cast<double>(col.size());
    double sd = std::sqrt(var);
    bool flat = sd == 0.0;
    s.mean.push_back(mean);
    s.std.push_back(flat ? 1.0 : sd);
    s.constant.push_back(flat);
  }
  return s;
}

inline std::vector<double> standardize_apply(const Scaler& s, const std::vector<double>& x) {
  if (x.size() != s.mean.size())
    throw std::invalid_argument("standardize_apply: schema mismatch");
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - s.mean[i]) / s.std[i];
  return z;
}

inline Scaler fit_scaler(const std::vector<LabeledSeries>& corpus) {
  std::vector<std::vector<double>> cols(feature_count());
  for (const auto& series : corpus)
    for (const auto& fv : series.vectors)
      for (std::size_t i = 0; i < fv.values.size(); ++i) cols[i].push_back(fv.values[i]);
  return standardize_fit(cols);
}

inline void apply_scaler(const Scaler& s, LabeledSeries& series) {
  for (auto& fv : series.vectors) fv.values = standardize_apply(s, fv.values);
}

// Merge raw points into one vector per second: per-feature mean over
// [s, s+1), forward-filling features that are silent in a second (zero if
// never seen yet).
inline std::vector<FeatureVector> range_merge(const std::vector<RawLogPoint>& points) {
  if (points.empty()) return {};
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  // (second, feature) -> (sum, count)
  std::map<std::pair<std::int64_t, int>, std::pair<double, int>> buckets;
  for (const auto& p : points) {
    if (p.timestamp_s < 0) throw std::invalid_argument("range_merge: negative timestamp");
    std::int64_t s = static_cast<std::int64_t>(std::floor(p.timestamp_s));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    auto& b = buckets[{s, p.feature}];
    b.first += p.value;
    b.second += 1;
  }
  std::vector<FeatureVector> out;
  std::vector<double> carry(feature_count(), 0.0);
  for (std::int64_t s = lo; s <= hi; ++s) {
    FeatureVector fv;
    fv.second = s;
    for (std::size_t f = 0; f < feature_count(); ++f) {
      auto it = buckets.find({s, static_cast<int>(f)});
      if (it != buckets.end()) carry[f] = it->second.first / it->second.second;
      fv.values.push_back(carry[f]);
    }
    out.push_back(std::move(fv));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation. Each series carries a latent degradation
// process: healthy until the onset second, then a linearly growing fault
// signal. Feature columns mix a per-feature baseline, a component
// proportional to the remaining time to onset, a component proportional to
// the series' post-fault endurance, and Gaussian noise, so both regression
// targets are linearly recoverable. A drift configuration shifts baselines
// and response gains for "recent" flights.
// ---------------------------------------------------------------------------

struct DriftConfig {
  bool enabled = false;
  double baseline_shift = 1.5;  // added to drifted feature baselines (pre-noise units)
  double gain_scale = 1.35;     // multiplies the ttf-response gain when drifted
};

struct SyntheticLogConfig {
  int min_duration_s = 60;
  int max_duration_s = 140;
  double noise_std = 0.35;
  double signal_scale = 1.0;
  DriftConfig drift;
};

namespace detail {

// Fixed per-feature mixing coefficients, deterministic across runs.
inline const std::vector<std::array<double, 3>>& mixing() {
  static const std::vector<std::array<double, 3>> m = [] {
    std::vector<std::array<double, 3>> out;
    Rng rng(0x5dca55);
    for (std::size_t i = 0; i < feature_count(); ++i)
      out.push_back({rng.uniform(-2.0, 2.0),    // baseline
                     rng.uniform(-0.8, 0.8),    // ttf-margin response
                     rng.uniform(-0.4, 0.4)});  // endurance response
    return out;
  }();
  return m;
}

}  // namespace detail

inline LabeledSeries generate_series(Rng& rng, const SyntheticLogConfig& cfg, bool drifted) {
  LabeledSeries series;
  int duration = static_cast<int>(rng.uniform_int(cfg.min_duration_s, cfg.max_duration_s));
  double onset = rng.uniform(0.2, 0.9) * duration;
  series.label_ttf = onset;
  series.label_uptime = duration - onset;
  const auto& mix = detail::mixing();
  double gain = cfg.drift.enabled && drifted ? cfg.drift.gain_scale : 1.0;
  double shift = cfg.drift.enabled && drifted ? cfg.drift.baseline_shift : 0.0;
  for (int t = 0; t < duration; ++t) {
    FeatureVector fv;
    fv.second = t;
    double margin = (onset - t) / 60.0;                 // minutes to fault, may go negative
    double endurance = series.label_uptime / 60.0;      // minutes of post-fault flight
    for (std::size_t f = 0; f < feature_count(); ++f) {
      double v = mix[f][0] + shift * mix[f][0] * 0.5 + shift +
                 gain * mix[f][1] * cfg.signal_scale * margin +
                 mix[f][2] * cfg.signal_scale * endurance +
                 rng.gaussian(0.0, cfg.noise_std);
      fv.values.push_back(v);
    }
    series.vectors.push_back(std::move(fv));
  }
  return series;
}

inline std::vector<LabeledSeries> generate_synthetic_logs(int count, std::uint64_t seed,
                                                          const SyntheticLogConfig& cfg = {},
                                                          bool drifted = false) {
  if (count < 1) throw std::invalid_argument("generate_synthetic_logs: count must be >= 1");
  std::vector<LabeledSeries> out;
  out.reserve(count);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    Rng stream = rng.fork(static_cast<std::uint64_t>(i) + (drifted ? 0x8000000000ull : 0));
    out.push_back(generate_series(stream, cfg, drifted));
  }
  return out;
}

// ---------------------------------------------------------------------------
// File I/O. Flight CSV rows are `timestamp,feature,value`; labels travel as
// rows with feature `label_ttf` / `label_uptime` (timestamp ignored).
// ---------------------------------------------------------------------------

inline void save_flight_csv(const LabeledSeries& series, std::ostream& os) {
  os << "timestamp,feature,value\n";
  os.precision(17);
  os << "0,label_ttf," << series.label_ttf << '\n';
  os << "0,label_uptime," << series.label_uptime << '\n';
  const auto& names = feature_names();
  for (const auto& fv : series.vectors)
    for (std::size_t f = 0; f < fv.values.size(); ++f)
      os << fv.second << ',' << names[f] << ',' << fv.values[f] << '\n';
}

inline LabeledSeries load_flight_csv(std::istream& is) {
  std::vector<RawLogPoint> points;
  LabeledSeries series;
  std::string line;
  int lineno = 0;
  bool header_skipped = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = net::detail::split_csv(line);
    if (!header_skipped) {
      header_skipped = true;
      if (!f.empty() && f[0] == "timestamp") continue;
    }
    if (f.size() != 3) throw net::ParseError("flight row needs timestamp,feature,value", lineno);
    double value = net::detail::parse_double(f[2], "value", lineno);
    if (f[1] == "label_ttf") {
      series.label_ttf = value;
      continue;
    }
    if (f[1] == "label_uptime") {
      series.label_uptime = value;
      continue;
    }
    int idx = feature_index(f[1]);
    if (idx < 0) throw net::ParseError("unknown feature '" + f[1] + "'", lineno);
    points.push_back({net::detail::parse_double(f[0], "timestamp", lineno), idx, value});
  }
  series.vectors = range_merge(points);
  return series;
}

inline nlohmann::json series_to_json(const LabeledSeries& s) {
  nlohmann::json vecs = nlohmann::json::array();
  for (const auto& fv : s.vectors) vecs.push_back({{"second", fv.second}, {"values", fv.values}});
  return {{"label_ttf", s.label_ttf}, {"label_uptime", s.label_uptime}, {"vectors", vecs}};
}

inline LabeledSeries series_from_json(const nlohmann::json& j) {
  LabeledSeries s;
  s.label_ttf = j.at("label_ttf").get<double>();
  s.label_uptime = j.at("label_uptime").get<double>();
  for (const auto& v : j.at("vectors"))
    s.vectors.push_back({v.at("second").get<std::int64_t>(), v.at("values").get<std::vector<double>>()});
  return s;
}

}  // namespace sdaas::flightlog
