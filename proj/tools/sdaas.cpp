#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdaas/bench.hpp"
#include "sdaas/composer.hpp"
#include "sdaas/config.hpp"
#include "sdaas/fedlearn.hpp"
#include "sdaas/flightlog.hpp"
#include "sdaas/skyway.hpp"

namespace fs = std::filesystem;
using namespace sdaas;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

net::SkywayNetwork load_net(const std::string& edges, const std::string& nodes,
                            std::uint64_t pads_seed) {
  auto e = open_input(edges);
  if (nodes.empty()) return net::load_network(e, net::PadPolicy::uniform(1, 4, pads_seed));
  auto n = open_input(nodes);
  return net::load_network(e, net::PadPolicy::uniform(1, 4, pads_seed), &n);
}

std::vector<net::DeliveryRequest> load_requests(const std::string& path) {
  auto f = open_input(path);
  std::vector<net::DeliveryRequest> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(net::request_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw std::runtime_error(path + ": no requests");
  return out;
}

config::KeyValueFile load_kv(const std::string& path) {
  if (path.empty()) {
    std::istringstream empty;
    return config::KeyValueFile::parse(empty);
  }
  auto f = open_input(path);
  return config::KeyValueFile::parse(f);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"swarm drone delivery composition and benchmark toolkit"};
  app.require_subcommand(1);

  // --- gen-network ---
  auto* gn = app.add_subcommand("gen-network", "generate a random skyway network");
  int gn_nodes = 50;
  std::uint64_t gn_seed = 0;
  std::string gn_out = ".";
  gn->add_option("--nodes", gn_nodes, "node count");
  gn->add_option("--seed", gn_seed, "generator seed");
  gn->add_option("--out", gn_out, "output directory (edges.csv, nodes.csv)");

  // --- gen-requests ---
  auto* gr = app.add_subcommand("gen-requests", "generate a delivery request corpus");
  std::string gr_network, gr_nodes, gr_out = "requests.jsonl";
  int gr_count = 200;
  std::uint64_t gr_seed = 0, gr_pads_seed = 0;
  gr->add_option("--network", gr_network, "edge CSV")->required();
  gr->add_option("--nodes-file", gr_nodes, "node CSV (id,x_m,y_m,pads)");
  gr->add_option("--count", gr_count, "request count");
  gr->add_option("--seed", gr_seed, "generator seed");
  gr->add_option("--pads-seed", gr_pads_seed, "pad assignment seed when no node file");
  gr->add_option("--out", gr_out, "output JSONL file");

  // --- gen-logs ---
  auto* gl = app.add_subcommand("gen-logs", "generate synthetic flight logs");
  int gl_flights = 20;
  std::uint64_t gl_seed = 0;
  bool gl_drift = false;
  std::string gl_out = "logs";
  gl->add_option("--flights", gl_flights, "number of flights");
  gl->add_option("--seed", gl_seed, "generator seed");
  gl->add_flag("--drift", gl_drift, "apply sensor drift to the corpus");
  gl->add_option("--out", gl_out, "output directory (flight_NNN.csv)");

  // --- train ---
  auto* tr = app.add_subcommand("train", "federated training over a flight-log corpus");
  std::string tr_logs, tr_config, tr_out = "train-out";
  int tr_drones = 4, tr_rounds = 3;
  tr->add_option("--logs", tr_logs, "directory of flight CSVs")->required();
  tr->add_option("--drones", tr_drones, "number of federated clients");
  tr->add_option("--rounds", tr_rounds, "continual rounds after the initial one");
  tr->add_option("--config", tr_config, "key-value config (train.* keys)");
  tr->add_option("--out", tr_out, "output directory (checkpoint.json, loss.csv)");

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "run one request with one strategy");
  std::string sim_network, sim_nodes, sim_requests, sim_strategy = "heuristic";
  std::string sim_config, sim_inject, sim_request_id;
  std::uint64_t sim_seed = 0;
  int sim_depth = 1, sim_cap = 100;
  sim->add_option("--network", sim_network, "edge CSV")->required();
  sim->add_option("--nodes-file", sim_nodes, "node CSV");
  sim->add_option("--requests", sim_requests, "request JSONL")->required();
  sim->add_option("--request-id", sim_request_id, "request to run (default: first)");
  sim->add_option("--strategy", sim_strategy, "heuristic|lookahead|greedy|exhaustive");
  sim->add_option("--seed", sim_seed, "injection/predictor seed");
  sim->add_option("--config", sim_config, "composer key-value config");
  sim->add_option("--inject", sim_inject, "injection key-value config");
  sim->add_option("--lookahead-depth", sim_depth, "lookahead depth");
  sim->add_option("--exhaustive-cap", sim_cap, "top-k path cap");

  // --- bench ---
  auto* be = app.add_subcommand("bench", "benchmark strategies over a request corpus");
  std::string be_network, be_nodes, be_requests, be_strategies = "heuristic,lookahead,greedy,exhaustive";
  std::string be_config, be_inject, be_out = "bench-out", be_seeds = "0";
  int be_depth = 1, be_cap = 100, be_workers = 1, be_timing_reps = 1;
  be->add_option("--network", be_network, "edge CSV")->required();
  be->add_option("--nodes-file", be_nodes, "node CSV");
  be->add_option("--requests", be_requests, "request JSONL")->required();
  be->add_option("--strategies", be_strategies, "comma-separated strategy list");
  be->add_option("--seed", be_seeds, "comma-separated repetition seeds");
  be->add_option("--lookahead-depth", be_depth, "lookahead depth");
  be->add_option("--exhaustive-cap", be_cap, "top-k path cap");
  be->add_option("--config", be_config, "composer key-value config");
  be->add_option("--inject", be_inject, "injection key-value config");
  be->add_option("--out", be_out, "output directory");
  be->add_option("--workers", be_workers, "worker thread count");
  be->add_option("--timing-reps", be_timing_reps, "wall-time repetitions per request; minimum kept");

  CLI11_PARSE(app, argc, argv);

  if (*gn) {
    net::NetworkGenConfig cfg;
    cfg.pads = net::PadPolicy::uniform(1, 4, gn_seed);
    auto netw = net::generate_network(gn_nodes, gn_seed, cfg);
    auto edges = open_output(fs::path(gn_out) / "edges.csv");
    auto nodes = open_output(fs::path(gn_out) / "nodes.csv");
    net::save_network(netw, edges, nodes);
    std::cout << "wrote " << (fs::path(gn_out) / "edges.csv").string() << " and nodes.csv ("
              << netw.nodes().size() << " nodes, " << netw.segments().size() << " segments)\n";
    return 0;
  }

  if (*gr) {
    auto netw = load_net(gr_network, gr_nodes, gr_pads_seed);
    auto reqs = net::generate_requests(netw, gr_count, gr_seed);
    auto out = open_output(gr_out);
    for (const auto& r : reqs) out << net::request_to_json(r).dump() << '\n';
    std::cout << "wrote " << reqs.size() << " requests to " << gr_out << '\n';
    return 0;
  }

  if (*gl) {
    flightlog::SyntheticLogConfig cfg;
    cfg.drift.enabled = gl_drift;
    auto corpus = flightlog::generate_synthetic_logs(gl_flights, gl_seed, cfg, gl_drift);
    fs::create_directories(gl_out);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "flight_%03zu.csv", i);
      auto f = open_output(fs::path(gl_out) / name);
      flightlog::save_flight_csv(corpus[i], f);
    }
    std::cout << "wrote " << corpus.size() << " flights to " << gl_out << '\n';
    return 0;
  }

  if (*tr) {
    auto kv = load_kv(tr_config);
    auto tcfg = config::load_train_config(kv);
    if (tr_drones < 1) throw std::runtime_error("--drones must be >= 1");

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(tr_logs))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .csv flight logs in " + tr_logs);

    std::vector<flightlog::LabeledSeries> flights;
    for (const auto& p : files) {
      auto f = open_input(p.string());
      flights.push_back(flightlog::load_flight_csv(f));
    }
    auto scaler = flightlog::fit_scaler(flights);
    for (auto& s : flights) flightlog::apply_scaler(scaler, s);

    // Round-robin partition; the first flight of each drone seeds its history,
    // the rest arrive one per continual round.
    std::map<std::string, fed::DroneHistory> histories;
    std::map<std::string, std::vector<flightlog::LabeledSeries>> queued;
    for (std::size_t i = 0; i < flights.size(); ++i) {
      std::string id = "D" + std::to_string(i % static_cast<std::size_t>(tr_drones));
      if (!histories.count(id) || histories[id].old_flights.empty())
        histories[id].old_flights.push_back(flights[i]);
      else
        queued[id].push_back(flights[i]);
    }

    auto loss = open_output(fs::path(tr_out) / "loss.csv");
    loss << "schema_version,round,target,train_mae\n";
    loss.precision(17);
    auto record = [&](int round, const fed::GlobalModels& g) {
      std::vector<fed::Example> ft_ex, up_ex;
      for (const auto& [id, h] : histories) {
        for (const auto& s : h.old_flights) {
          fed::append_examples(s, fed::Target::time_to_failure, 1, ft_ex);
          fed::append_examples(s, fed::Target::uptime, 1, up_ex);
        }
        for (const auto& s : h.new_flights) {
          fed::append_examples(s, fed::Target::time_to_failure, 1, ft_ex);
          fed::append_examples(s, fed::Target::uptime, 1, up_ex);
        }
      }
      loss << "1," << round << ",ft," << fed::mae(g.ft, ft_ex) << '\n';
      loss << "1," << round << ",uptime," << fed::mae(g.uptime, up_ex) << '\n';
    };

    auto global = fed::GlobalModels::zeros(flightlog::feature_count());
    auto [g0, preds] = fed::federated_round(histories, global, tcfg);
    global = std::move(g0);
    record(0, global);
    for (int r = 1; r <= tr_rounds; ++r) {
      std::map<std::string, flightlog::LabeledSeries> segments;
      for (auto& [id, q] : queued)
        if (!q.empty()) {
          segments[id] = q.front();
          q.erase(q.begin());
        }
      auto [g, p] = fed::continual_update(histories, segments, global, tcfg);
      global = std::move(g);
      preds = std::move(p);
      record(r, global);
    }

    auto ck = open_output(fs::path(tr_out) / "checkpoint.json");
    ck << fed::checkpoint_json(global, scaler, tcfg).dump(2) << '\n';
    for (const auto& p : preds)
      std::cout << p.drone_id << ": ft " << p.predicted_ft_s << " s, uptime "
                << p.predicted_uptime_s << " s\n";
    std::cout << "wrote " << (fs::path(tr_out) / "checkpoint.json").string() << " and loss.csv\n";
    return 0;
  }

  if (*sim) {
    auto netw = load_net(sim_network, sim_nodes, sim_seed);
    auto reqs = load_requests(sim_requests);
    const net::DeliveryRequest* req = &reqs.front();
    if (!sim_request_id.empty()) {
      req = nullptr;
      for (const auto& r : reqs)
        if (r.id == sim_request_id) req = &r;
      if (!req) throw std::runtime_error("request id '" + sim_request_id + "' not in corpus");
    }
    bench::BenchConfig cfg;
    cfg.strategies = {bench::strategy_from_string(sim_strategy)};
    cfg.seeds = {sim_seed};
    cfg.composer = config::load_composer_config(load_kv(sim_config));
    cfg.injection = config::load_injection_config(load_kv(sim_inject));
    cfg.lookahead_depth = sim_depth;
    cfg.exhaustive_cap = sim_cap;
    auto trace = bench::run_one(*req, netw, cfg.strategies[0], sim_seed, cfg);
    std::cout << trace.to_json().dump(2) << '\n';
    return 0;
  }

  if (*be) {
    bench::BenchConfig cfg;
    for (const auto& s : split_list(be_strategies))
      cfg.strategies.push_back(bench::strategy_from_string(s));
    for (const auto& s : split_list(be_seeds)) cfg.seeds.push_back(std::stoull(s));
    cfg.composer = config::load_composer_config(load_kv(be_config));
    cfg.injection = config::load_injection_config(load_kv(be_inject));
    cfg.lookahead_depth = be_depth;
    cfg.exhaustive_cap = be_cap;
    cfg.workers = be_workers;
    cfg.timing_reps = be_timing_reps;
    cfg.validate();

    auto netw = load_net(be_network, be_nodes, cfg.seeds.front());
    auto reqs = load_requests(be_requests);
    auto res = bench::run_bench(netw, reqs, cfg);

    auto metrics = open_output(fs::path(be_out) / "metrics.csv");
    bench::write_metrics_csv(res, metrics);
    auto timings = open_output(fs::path(be_out) / "timings.csv");
    bench::write_timings_csv(res, timings);
    auto traces = open_output(fs::path(be_out) / "traces.jsonl");
    bench::write_traces_jsonl(res, traces);
    std::cout << "wrote metrics.csv, timings.csv, traces.jsonl to " << be_out << '\n';
    for (const auto& row : res.rows)
      std::cout << row.strategy << " seed " << row.seed << ": " << row.successful_requests << '/'
                << row.total_requests << " successful, " << row.on_time_requests
                << " on time, mean delivery " << row.mean_delivery_time_s << " s\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
