#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sdaas/composer.hpp"
#include "sdaas/failure.hpp"
#include "sdaas/skyway.hpp"

namespace sdaas::bench {

using composer::Outcome;
using composer::Strategy;

struct BenchConfig {
  std::vector<Strategy> strategies;
  std::vector<std::uint64_t> seeds;  // repetition seeds, explicit
  composer::ComposerConfig composer;
  failure::InjectionConfig injection;
  int lookahead_depth = 1;
  int exhaustive_cap = 100;
  int workers = 1;
  // Wall-time repetitions per request; the minimum is kept so scheduler
  // noise does not leak into execution-time comparisons.
  int timing_reps = 1;
  // Oracle predictor noise; one predictor instance per mission.
  double predictor_noise_s = 120.0;
  double predictor_noise_decay = 0.5;

  void validate() const {
    if (strategies.empty()) throw std::invalid_argument("BenchConfig: no strategies");
    if (seeds.empty()) throw std::invalid_argument("BenchConfig: no seeds");
    if (workers < 1) throw std::invalid_argument("BenchConfig: workers must be >= 1");
    if (timing_reps < 1) throw std::invalid_argument("BenchConfig: timing_reps must be >= 1");
  }
};

struct MetricsRow {
  std::string strategy;
  std::uint64_t seed = 0;
  int total_requests = 0;
  int successful_requests = 0;  // delivered before depletion
  int on_time_requests = 0;     // delivered within the window, simultaneously
  double mean_delivery_time_s = 0.0;  // successful requests only
  double mean_execution_time_s = 0.0;
  double median_execution_time_s = 0.0;
};

struct RequestResult {
  composer::SimulationTrace trace;
  double execution_time_s = 0.0;
  std::uint64_t seed = 0;
};

struct BenchResult {
  std::vector<MetricsRow> rows;
  std::vector<RequestResult> results;  // ordered by (strategy, seed, request)
};

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "heuristic") return Strategy::heuristic;
  if (s == "lookahead") return Strategy::lookahead;
  if (s == "greedy") return Strategy::greedy;
  if (s == "exhaustive") return Strategy::exhaustive;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

// Ground truth for one request: seeded off (bench seed, request id), shared
// by every strategy so comparisons are paired.
inline std::vector<failure::DroneFailureState> request_ground_truth(
    const net::DeliveryRequest& req, std::uint64_t seed, const net::SkywayNetwork& netw,
    const BenchConfig& cfg) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < req.payloads_kg.size(); ++i) ids.push_back("D" + std::to_string(i));
  failure::InjectionConfig inj = cfg.injection;
  // FT spans the estimated mission so every segment interval gets exercised.
  double dist = netw.shortest_distance(req.source, req.destination);
  inj.mission_duration_s = dist / cfg.composer.spec.base_speed;
  std::uint64_t mixed = seed ^ (std::hash<std::string>{}(req.id) * 0x9e3779b97f4a7c15ull);
  return failure::inject_failures(ids, mixed, inj);
}

inline composer::SimulationTrace run_one(const net::DeliveryRequest& req,
                                         const net::SkywayNetwork& netw, Strategy strategy,
                                         std::uint64_t seed, const BenchConfig& cfg) {
  auto truth = request_ground_truth(req, seed, netw, cfg);
  std::uint64_t pseed = seed ^ (std::hash<std::string>{}(req.id) * 0xbf58476d1ce4e5b9ull) ^ 0x5bd1e995;
  composer::PredictorFactory factory = [&truth, pseed, &cfg]() {
    return std::make_unique<composer::NoisyOraclePredictor>(
        truth, pseed, cfg.predictor_noise_s, cfg.predictor_noise_decay);
  };
  switch (strategy) {
    case Strategy::heuristic:
      return composer::compose_heuristic(req, netw, factory, truth, cfg.composer);
    case Strategy::lookahead:
      return composer::compose_lookahead(req, netw, factory, truth, cfg.composer,
                                         cfg.lookahead_depth);
    case Strategy::greedy:
      return composer::compose_greedy(req, netw, truth, cfg.composer);
    default:
      return composer::compose_exhaustive(req, netw, factory, truth, cfg.composer,
                                          cfg.exhaustive_cap);
  }
}

inline BenchResult run_bench(const net::SkywayNetwork& netw,
                             const std::vector<net::DeliveryRequest>& requests,
                             const BenchConfig& cfg) {
  cfg.validate();
  struct Job {
    std::size_t strategy_i, seed_i, request_i;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < cfg.strategies.size(); ++si)
    for (std::size_t ri = 0; ri < cfg.seeds.size(); ++ri)
      for (std::size_t qi = 0; qi < requests.size(); ++qi) jobs.push_back({si, ri, qi});

  std::vector<RequestResult> results(jobs.size());
  std::mutex next_mu;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t j;
      {
        std::lock_guard<std::mutex> lock(next_mu);
        if (next >= jobs.size()) return;
        j = next++;
      }
      const Job& job = jobs[j];
      auto t0 = std::chrono::steady_clock::now();
      auto trace = run_one(requests[job.request_i], netw, cfg.strategies[job.strategy_i],
                           cfg.seeds[job.seed_i], cfg);
      auto t1 = std::chrono::steady_clock::now();
      double best = std::chrono::duration<double>(t1 - t0).count();
      // Repeat runs are identical by construction; only the clock differs.
      for (int rep = 1; rep < cfg.timing_reps; ++rep) {
        t0 = std::chrono::steady_clock::now();
        run_one(requests[job.request_i], netw, cfg.strategies[job.strategy_i],
                cfg.seeds[job.seed_i], cfg);
        t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
      }
      results[j] = {std::move(trace), best, cfg.seeds[job.seed_i]};
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  BenchResult out;
  out.results = std::move(results);
  // Aggregate per (strategy, seed). Jobs are laid out strategy-major, so the
  // slices are contiguous and ordered by request regardless of worker timing.
  std::size_t per_slice = requests.size();
  std::size_t idx = 0;
  for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
    for (std::size_t ri = 0; ri < cfg.seeds.size(); ++ri) {
      MetricsRow row;
      row.strategy = composer::to_string(cfg.strategies[si]);
      row.seed = cfg.seeds[ri];
      row.total_requests = static_cast<int>(per_slice);
      double delivery_sum = 0.0, exec_sum = 0.0;
      std::vector<double> exec_times;
      for (std::size_t qi = 0; qi < per_slice; ++qi, ++idx) {
        const auto& r = out.results[idx];
        exec_sum += r.execution_time_s;
        exec_times.push_back(r.execution_time_s);
        if (r.trace.outcome != Outcome::hard_failure) {
          ++row.successful_requests;
          delivery_sum += r.trace.delivery_time_s;
          if (r.trace.outcome == Outcome::success) ++row.on_time_requests;
        }
      }
      row.mean_delivery_time_s =
          row.successful_requests ? delivery_sum / row.successful_requests : 0.0;
      row.mean_execution_time_s = exec_sum / static_cast<double>(per_slice);
      std::sort(exec_times.begin(), exec_times.end());
      row.median_execution_time_s = exec_times[exec_times.size() / 2];
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

inline constexpr const char* kMetricsHeader =
    "schema_version,strategy,seed,total_requests,successful_requests,on_time_requests,"
    "mean_delivery_time_s";
inline constexpr const char* kTimingsHeader =
    "schema_version,strategy,seed,mean_execution_time_s,median_execution_time_s";

// metrics.csv is byte-stable across identically seeded runs; wall-clock
// timings land in timings.csv.
inline void write_metrics_csv(const BenchResult& res, std::ostream& os) {
  os << kMetricsHeader << '\n';
  os.precision(17);
  for (const auto& r : res.rows)
    os << "1," << r.strategy << ',' << r.seed << ',' << r.total_requests << ','
       << r.successful_requests << ',' << r.on_time_requests << ',' << r.mean_delivery_time_s
       << '\n';
}

inline void write_timings_csv(const BenchResult& res, std::ostream& os) {
  os << kTimingsHeader << '\n';
  os.precision(17);
  for (const auto& r : res.rows)
    os << "1," << r.strategy << ',' << r.seed << ',' << r.mean_execution_time_s << ','
       << r.median_execution_time_s << '\n';
}

inline void write_traces_jsonl(const BenchResult& res, std::ostream& os) {
  for (const auto& r : res.results) {
    auto j = r.trace.to_json();
    j["seed"] = r.seed;
    os << j.dump() << '\n';
  }
}

}  // namespace sdaas::bench
