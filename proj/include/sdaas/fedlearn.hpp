#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdaas/flightlog.hpp"

namespace sdaas::fed {

struct RegressionModel {
  std::vector<double> weights;
  double bias = 0.0;

  static RegressionModel zeros(std::size_t arity) {
    RegressionModel m;
    m.weights.assign(arity, 0.0);
    return m;
  }

  double predict(const std::vector<double>& x) const {
    if (x.size() != weights.size())
      throw std::invalid_argument("RegressionModel: feature arity mismatch");
    double y = bias;
    for (std::size_t i = 0; i < x.size(); ++i) y += weights[i] * x[i];
    return y;
  }

  bool finite() const {
    if (!std::isfinite(bias)) return false;
    for (double w : weights)
      if (!std::isfinite(w)) return false;
    return true;
  }

  nlohmann::json to_json() const { return {{"weights", weights}, {"bias", bias}}; }
  static RegressionModel from_json(const nlohmann::json& j) {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
  }
};

struct TrainConfig {
  int epochs = 3000;
  double initial_lr = 1e-2;
  int history_weight = 2;  // w: current-flight samples counted w times
  // Optional per-epoch hook: (epoch, lr, training MAE after the update).
  std::function<void(int, double, double)> trace;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (initial_lr <= 0) throw std::invalid_argument("TrainConfig: initial_lr must be positive");
    if (history_weight < 1) throw std::invalid_argument("TrainConfig: weight must be >= 1");
  }
};

// Learning-rate schedule: divide by 10 every 1000 epochs (0-based).
inline double lr_at_epoch(double initial_lr, int epoch) {
  return initial_lr * std::pow(10.0, -static_cast<double>(epoch / 1000));
}

struct Example {
  std::vector<double> x;
  double y = 0.0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

inline double mae(const RegressionModel& m, const std::vector<Example>& data) {
  double total = 0.0;
  for (const auto& ex : data) total += std::abs(m.predict(ex.x) - ex.y);
  return total / static_cast<double>(data.size());
}

// Full-batch subgradient descent on mean absolute error, fixed data order.
// sign(0) is taken as 0.
inline RegressionModel train_mae(RegressionModel model, const std::vector<Example>& data,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train_mae: empty dataset");
  const std::size_t arity = data.front().x.size();
  if (model.weights.size() != arity)
    throw std::invalid_argument("train_mae: model arity does not match data");
  const double n = static_cast<double>(data.size());
  std::vector<double> grad(arity);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = lr_at_epoch(cfg.initial_lr, epoch);
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (const auto& ex : data) {
      double r = model.predict(ex.x) - ex.y;
      double s = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      for (std::size_t i = 0; i < arity; ++i) grad[i] += s * ex.x[i];
      grad_b += s;
    }
    for (std::size_t i = 0; i < arity; ++i) model.weights[i] -= lr * grad[i] / n;
    model.bias -= lr * grad_b / n;
    if (!model.finite()) throw TrainingError("train_mae: model diverged", epoch);
    if (cfg.trace) cfg.trace(epoch, lr, mae(model, data));
  }
  return model;
}

enum class Target { time_to_failure, uptime };

// Per-second training pairs: at second t the time-to-failure target is
// label_ttf - t (unclamped; predictions clamp at the interface), the uptime
// target is the series' endurance after onset.
inline void append_examples(const flightlog::LabeledSeries& series, Target target, int repeat,
                            std::vector<Example>& out) {
  for (const auto& fv : series.vectors) {
    Example ex;
    ex.x = fv.values;
    ex.y = target == Target::time_to_failure
               ? series.label_ttf - static_cast<double>(fv.second)
               : series.label_uptime;
    for (int r = 0; r < repeat; ++r) out.push_back(ex);
  }
}

struct DroneHistory {
  std::vector<flightlog::LabeledSeries> old_flights;  // all prior flights
  std::vector<flightlog::LabeledSeries> new_flights;  // current flight, grows per node

  bool empty() const { return old_flights.empty() && new_flights.empty(); }

  const flightlog::FeatureVector* latest_vector() const {
    for (auto it = new_flights.rbegin(); it != new_flights.rend(); ++it)
      if (!it->vectors.empty()) return &it->vectors.back();
    for (auto it = old_flights.rbegin(); it != old_flights.rend(); ++it)
      if (!it->vectors.empty()) return &it->vectors.back();
    return nullptr;
  }
};

// Effective dataset: old samples once, each new sample repeated w times
// consecutively. The drone's raw series never leave this function; only the
// trained weights do.
inline std::vector<Example> build_examples(const DroneHistory& history, Target target, int w) {
  std::vector<Example> data;
  for (const auto& s : history.old_flights) append_examples(s, target, 1, data);
  for (const auto& s : history.new_flights) append_examples(s, target, w, data);
  return data;
}

inline RegressionModel local_train(const RegressionModel& global, const DroneHistory& history,
                                   Target target, const TrainConfig& cfg) {
  if (history.empty()) throw std::invalid_argument("local_train: empty history");
  auto data = build_examples(history, target, cfg.history_weight);
  return train_mae(global, data, cfg);
}

inline RegressionModel fed_average(const std::vector<RegressionModel>& models) {
  if (models.empty()) throw std::invalid_argument("fed_average: no models");
  const std::size_t arity = models.front().weights.size();
  RegressionModel avg = RegressionModel::zeros(arity);
  for (const auto& m : models) {
    if (m.weights.size() != arity) throw std::invalid_argument("fed_average: arity mismatch");
    for (std::size_t i = 0; i < arity; ++i) avg.weights[i] += m.weights[i];
    avg.bias += m.bias;
  }
  const double n = static_cast<double>(models.size());
  for (auto& w : avg.weights) w /= n;
  avg.bias /= n;
  return avg;
}

struct FailurePrediction {
  std::string drone_id;
  double predicted_ft_s = 0.0;      // seconds from now, clamped at 0
  double predicted_uptime_s = 0.0;  // clamped at 0
};

struct GlobalModels {
  RegressionModel ft;
  RegressionModel uptime;

  static GlobalModels zeros(std::size_t arity) {
    return {RegressionModel::zeros(arity), RegressionModel::zeros(arity)};
  }
};

// One federation round: distribute the global models, train locally per
// drone, average at the lead drone, then predict on each drone's latest
// feature vector with the fresh global models.
inline std::pair<GlobalModels, std::vector<FailurePrediction>> federated_round(
    const std::map<std::string, DroneHistory>& histories, const GlobalModels& global,
    const TrainConfig& cfg) {
  if (histories.empty()) throw std::invalid_argument("federated_round: no drones");
  std::vector<RegressionModel> local_ft, local_up;
  for (const auto& [id, hist] : histories) {
    local_ft.push_back(local_train(global.ft, hist, Target::time_to_failure, cfg));
    local_up.push_back(local_train(global.uptime, hist, Target::uptime, cfg));
  }
  GlobalModels next{fed_average(local_ft), fed_average(local_up)};
  std::vector<FailurePrediction> preds;
  for (const auto& [id, hist] : histories) {
    const auto* latest = hist.latest_vector();
    if (!latest) throw std::invalid_argument("federated_round: drone " + id + " has no data");
    FailurePrediction p;
    p.drone_id = id;
    p.predicted_ft_s = std::max(0.0, next.ft.predict(latest->values));
    p.predicted_uptime_s = std::max(0.0, next.uptime.predict(latest->values));
    preds.push_back(std::move(p));
  }
  return {std::move(next), std::move(preds)};
}

// Continual step at a node landing: fold the freshly recorded segment logs
// into each drone's new history and rerun the round.
inline std::pair<GlobalModels, std::vector<FailurePrediction>> continual_update(
    std::map<std::string, DroneHistory>& histories,
    const std::map<std::string, flightlog::LabeledSeries>& segment_logs,
    const GlobalModels& global, const TrainConfig& cfg) {
  for (auto& [id, hist] : histories) {
    auto it = segment_logs.find(id);
    if (it != segment_logs.end() && !it->second.vectors.empty())
      hist.new_flights.push_back(it->second);
  }
  return federated_round(histories, global, cfg);
}

inline nlohmann::json checkpoint_json(const GlobalModels& g, const flightlog::Scaler& scaler,
                                      const TrainConfig& cfg) {
  return {{"ft", g.ft.to_json()},
          {"uptime", g.uptime.to_json()},
          {"scaler", scaler.to_json()},
          {"config", {{"epochs", cfg.epochs},
                      {"initial_lr", cfg.initial_lr},
                      {"history_weight", cfg.history_weight}}}};
}

}  // namespace sdaas::fed
