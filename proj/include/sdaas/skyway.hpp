#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdaas/rng.hpp"

namespace sdaas::net {

struct SkywayNode {
  std::string id;
  double x_m = 0.0;
  double y_m = 0.0;
  int pads = 1;
  bool has_coords = false;
};

struct Segment {
  std::string from;
  std::string to;
  double dist_m = 0.0;
};

struct DeliveryRequest {
  std::string id;
  std::string source;
  std::string destination;
  std::vector<double> payloads_kg;
  double window_start = 0.0;  // st, seconds since epoch
  double window_end = 0.0;    // et
};

struct PadPolicy {
  // Fixed count when lo == hi, otherwise seeded uniform in [lo, hi].
  int lo = 1;
  int hi = 4;
  std::uint64_t seed = 0;

  static PadPolicy fixed(int pads) { return {pads, pads, 0}; }
  static PadPolicy uniform(int lo, int hi, std::uint64_t seed) { return {lo, hi, seed}; }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Undirected skyway graph over recharging nodes. Immutable once built.
class SkywayNetwork {
 public:
  void add_node(SkywayNode node) {
    if (node.pads < 1) throw std::invalid_argument("node " + node.id + ": pads must be >= 1");
    if (index_.count(node.id)) throw std::invalid_argument("duplicate node id " + node.id);
    index_[node.id] = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(node));
    adj_.emplace_back();
  }

  void add_segment(const std::string& from, const std::string& to, double dist_m) {
    if (from == to) throw std::invalid_argument("self-loop segment at " + from);
    if (dist_m <= 0) throw std::invalid_argument("segment " + from + "-" + to + ": non-positive distance");
    int a = index_of(from), b = index_of(to);
    for (const auto& [nbr, d] : adj_[a])
      if (nbr == b) throw std::invalid_argument("duplicate segment " + from + "-" + to);
    adj_[a].push_back({b, dist_m});
    adj_[b].push_back({a, dist_m});
    segments_.push_back({from, to, dist_m});
  }

  void finalize() {
    for (auto& nbrs : adj_)
      std::sort(nbrs.begin(), nbrs.end(), [this](const auto& l, const auto& r) {
        return nodes_[l.first].id < nodes_[r.first].id;
      });
  }

  bool has_node(const std::string& id) const { return index_.count(id) > 0; }
  int index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::invalid_argument("unknown node id " + id);
    return it->second;
  }
  const SkywayNode& node(const std::string& id) const { return nodes_[index_of(id)]; }
  const SkywayNode& node_at(int idx) const { return nodes_[idx]; }
  // Index-keyed adjacency for hot paths; pairs of (node index, distance).
  const std::vector<std::pair<int, double>>& adjacency(int idx) const { return adj_[idx]; }
  const std::vector<SkywayNode>& nodes() const { return nodes_; }
  const std::vector<Segment>& segments() const { return segments_; }

  // Neighbors sorted by id; pairs of (node id, distance).
  std::vector<std::pair<std::string, double>> neighbors(const std::string& id) const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [nbr, d] : adj_[index_of(id)]) out.push_back({nodes_[nbr].id, d});
    return out;
  }

  std::optional<double> segment_distance(const std::string& from, const std::string& to) const {
    for (const auto& [nbr, d] : adj_[index_of(from)])
      if (nodes_[nbr].id == to) return d;
    return std::nullopt;
  }

  bool connected() const {
    if (nodes_.empty()) return true;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<int> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const auto& [v, d] : adj_[u])
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          stack.push_back(v);
        }
    }
    return reached == nodes_.size();
  }

  double euclidean(const std::string& a, const std::string& b) const {
    const auto& na = node(a);
    const auto& nb = node(b);
    if (!na.has_coords || !nb.has_coords) return 0.0;
    return std::hypot(na.x_m - nb.x_m, na.y_m - nb.y_m);
  }

  bool all_have_coords() const {
    for (const auto& n : nodes_)
      if (!n.has_coords) return false;
    return !nodes_.empty();
  }

  // Single-source shortest distances (meters) by Dijkstra.
  std::vector<double> shortest_distances_from(const std::string& src) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nodes_.size(), inf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    int s = index_of(src);
    dist[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : adj_[u])
        if (d + w < dist[v]) {
          dist[v] = d + w;
          pq.push({dist[v], v});
        }
    }
    return dist;
  }

  double shortest_distance(const std::string& src, const std::string& dst) const {
    return shortest_distances_from(src)[index_of(dst)];
  }

 private:
  std::vector<SkywayNode> nodes_;
  std::vector<Segment> segments_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  std::map<std::string, int> index_;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& s, const char* what, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("malformed ") + what + " '" + s + "'", line);
  }
}

}  // namespace detail

// Optional node rows: `id,x_m,y_m[,pads]`. When a pads column is present it
// overrides the policy.
inline void load_nodes(SkywayNetwork& net, std::istream& node_csv, const PadPolicy& policy) {
  Rng rng(policy.seed);
  std::string line;
  int lineno = 0;
  bool header_skipped = false;
  while (std::getline(node_csv, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = detail::split_csv(line);
    if (!header_skipped) {
      header_skipped = true;
      if (!f.empty() && f[0] == "id") continue;  // header row
    }
    if (f.size() < 3) throw ParseError("node row needs id,x_m,y_m[,pads]", lineno);
    SkywayNode n;
    n.id = f[0];
    n.x_m = detail::parse_double(f[1], "x coordinate", lineno);
    n.y_m = detail::parse_double(f[2], "y coordinate", lineno);
    n.has_coords = true;
    if (f.size() >= 4 && !f[3].empty()) {
      n.pads = static_cast<int>(detail::parse_double(f[3], "pad count", lineno));
    } else {
      n.pads = policy.lo == policy.hi ? policy.lo
                                      : static_cast<int>(rng.uniform_int(policy.lo, policy.hi));
    }
    if (n.pads < 1) throw ParseError("pads must be >= 1", lineno);
    net.add_node(std::move(n));
  }
}

// Edge rows: `from,to,dist_m` or `from,to` (distance derived from node
// coordinates, which must then be loaded first).
inline SkywayNetwork load_network(std::istream& edge_csv, const PadPolicy& policy,
                                  std::istream* node_csv = nullptr,
                                  bool require_connected = true) {
  SkywayNetwork net;
  if (node_csv) load_nodes(net, *node_csv, policy);

  Rng rng(policy.seed + 1);
  std::string line;
  int lineno = 0;
  bool header_skipped = false;
  auto ensure_node = [&](const std::string& id) {
    if (!net.has_node(id)) {
      SkywayNode n;
      n.id = id;
      n.pads = policy.lo == policy.hi ? policy.lo
                                      : static_cast<int>(rng.uniform_int(policy.lo, policy.hi));
      net.add_node(std::move(n));
    }
  };
  while (std::getline(edge_csv, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = detail::split_csv(line);
    if (!header_skipped) {
      header_skipped = true;
      if (!f.empty() && f[0] == "from") continue;
    }
    if (f.size() < 2) throw ParseError("edge row needs from,to[,dist_m]", lineno);
    ensure_node(f[0]);
    ensure_node(f[1]);
    double dist;
    if (f.size() >= 3 && !f[2].empty()) {
      dist = detail::parse_double(f[2], "distance", lineno);
    } else {
      if (!net.node(f[0]).has_coords || !net.node(f[1]).has_coords)
        throw ParseError("edge without distance requires node coordinates", lineno);
      dist = net.euclidean(f[0], f[1]);
    }
    if (dist <= 0) throw ParseError("non-positive segment distance", lineno);
    try {
      net.add_segment(f[0], f[1], dist);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  net.finalize();
  if (require_connected && !net.connected())
    throw std::invalid_argument("network is not connected");
  return net;
}

inline void save_network(const SkywayNetwork& net, std::ostream& edge_csv,
                         std::ostream& node_csv) {
  node_csv << "id,x_m,y_m,pads\n";
  for (const auto& n : net.nodes())
    node_csv << n.id << ',' << n.x_m << ',' << n.y_m << ',' << n.pads << '\n';
  edge_csv << "from,to,dist_m\n";
  edge_csv.precision(17);
  for (const auto& s : net.segments())
    edge_csv << s.from << ',' << s.to << ',' << s.dist_m << '\n';
}

struct RequestGenConfig {
  int max_packages = 5;
  double max_package_weight_kg = 2.5;
  // Window placement relative to an estimated base-speed trip duration.
  double base_speed_hint_ms = 105.0 / 3.6;
  double nominal_node_s = 600.0;
  double window_start_factor = 0.85;
  double window_end_factor = 1.6;
  double depart_epoch_s = 0.0;
};

inline std::vector<DeliveryRequest> generate_requests(const SkywayNetwork& net, int count,
                                                      std::uint64_t seed,
                                                      const RequestGenConfig& cfg = {}) {
  if (count < 1) throw std::invalid_argument("generate_requests: count must be >= 1");
  const auto& nodes = net.nodes();
  std::int64_t n = static_cast<std::int64_t>(nodes.size());
  if (n < 2) throw std::invalid_argument("generate_requests: need at least two nodes");
  if (static_cast<std::int64_t>(count) > n * (n - 1))
    throw std::invalid_argument("generate_requests: count exceeds distinct pair capacity");

  Rng rng(seed);
  std::set<std::pair<int, int>> used;
  std::vector<DeliveryRequest> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    int a, b;
    do {
      a = static_cast<int>(rng.uniform_int(0, n - 1));
      b = static_cast<int>(rng.uniform_int(0, n - 1));
    } while (a == b || used.count({a, b}));
    used.insert({a, b});
    DeliveryRequest req;
    req.id = "R" + std::to_string(i);
    req.source = nodes[a].id;
    req.destination = nodes[b].id;
    int packages = static_cast<int>(rng.uniform_int(1, cfg.max_packages));
    for (int p = 0; p < packages; ++p)
      req.payloads_kg.push_back(rng.uniform(0.1, cfg.max_package_weight_kg));
    double dist = net.shortest_distance(req.source, req.destination);
    double hops = std::max(1.0, dist / 3000.0);
    double est = dist / cfg.base_speed_hint_ms + hops * cfg.nominal_node_s;
    req.window_start = cfg.depart_epoch_s + cfg.window_start_factor * est;
    req.window_end = cfg.depart_epoch_s + cfg.window_end_factor * est;
    out.push_back(std::move(req));
  }
  return out;
}

struct NetworkGenConfig {
  double extent_m = 20000.0;   // square side
  int nearest_links = 3;       // edges per node toward nearest neighbors
  PadPolicy pads = PadPolicy::uniform(1, 4, 0);
};

// Seeded random geometric skyway network: n rooftop nodes in a square,
// each linked to its nearest neighbors, stitched into one component.
inline SkywayNetwork generate_network(int n, std::uint64_t seed, NetworkGenConfig cfg = {}) {
  if (n < 2) throw std::invalid_argument("generate_network: need at least two nodes");
  Rng rng(seed);
  SkywayNetwork net;
  PadPolicy pads = cfg.pads;
  pads.seed = seed;
  Rng pad_rng(pads.seed + 17);
  std::vector<std::pair<double, double>> pts;
  int width = static_cast<int>(std::to_string(n - 1).size());
  for (int i = 0; i < n; ++i) {
    SkywayNode node;
    std::string num = std::to_string(i);
    node.id = "N" + std::string(width - num.size(), '0') + num;
    node.x_m = rng.uniform(0.0, cfg.extent_m);
    node.y_m = rng.uniform(0.0, cfg.extent_m);
    node.has_coords = true;
    node.pads = pads.lo == pads.hi ? pads.lo
                                   : static_cast<int>(pad_rng.uniform_int(pads.lo, pads.hi));
    pts.push_back({node.x_m, node.y_m});
    net.add_node(std::move(node));
  }
  auto dist = [&](int a, int b) {
    return std::hypot(pts[a].first - pts[b].first, pts[a].second - pts[b].second);
  };
  std::set<std::pair<int, int>> edges;
  auto link = [&](int a, int b) {
    if (a == b) return;
    auto key = std::minmax(a, b);
    if (edges.count({key.first, key.second})) return;
    edges.insert({key.first, key.second});
    net.add_segment(net.nodes()[a].id, net.nodes()[b].id, dist(a, b));
  };
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back({dist(i, j), j});
    std::sort(order.begin(), order.end());
    for (int k = 0; k < cfg.nearest_links && k < static_cast<int>(order.size()); ++k)
      link(i, order[k].second);
  }
  // Stitch components with the closest cross pair until connected.
  auto components = [&]() {
    std::vector<int> comp(n, -1);
    int c = 0;
    for (int i = 0; i < n; ++i) {
      if (comp[i] != -1) continue;
      std::vector<int> stack{i};
      comp[i] = c;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const auto& [vid, d] : net.neighbors(net.nodes()[u].id)) {
          int v = net.index_of(vid);
          if (comp[v] == -1) {
            comp[v] = c;
            stack.push_back(v);
          }
        }
      }
      ++c;
    }
    return std::pair{comp, c};
  };
  for (;;) {
    auto [comp, c] = components();
    if (c == 1) break;
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> pick{-1, -1};
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (comp[i] != comp[j] && dist(i, j) < best) {
          best = dist(i, j);
          pick = {i, j};
        }
    link(pick.first, pick.second);
  }
  net.finalize();
  return net;
}

inline nlohmann::json request_to_json(const DeliveryRequest& r) {
  return {{"id", r.id},
          {"source", r.source},
          {"destination", r.destination},
          {"payloads_kg", r.payloads_kg},
          {"window", {{"st", r.window_start}, {"et", r.window_end}}}};
}

inline DeliveryRequest request_from_json(const nlohmann::json& j) {
  DeliveryRequest r;
  r.id = j.at("id").get<std::string>();
  r.source = j.at("source").get<std::string>();
  r.destination = j.at("destination").get<std::string>();
  r.payloads_kg = j.at("payloads_kg").get<std::vector<double>>();
  r.window_start = j.at("window").at("st").get<double>();
  r.window_end = j.at("window").at("et").get<double>();
  return r;
}

// Yen's k-shortest loop-free paths, distances ascending; equal-distance
// paths ordered by their node-id sequence.
inline std::vector<std::vector<std::string>> shortest_paths_topk(const SkywayNetwork& net,
                                                                 const std::string& src,
                                                                 const std::string& dst, int k) {
  if (k < 1) throw std::invalid_argument("shortest_paths_topk: k must be >= 1");
  net.index_of(src);
  net.index_of(dst);
  if (src == dst) return {{src}};

  using Path = std::vector<std::string>;
  auto path_length = [&](const Path& p) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      auto d = net.segment_distance(p[i], p[i + 1]);
      if (!d) return std::numeric_limits<double>::infinity();
      total += *d;
    }
    return total;
  };

  // Dijkstra with banned nodes/edges, deterministic lexicographic tie-break.
  auto dijkstra = [&](const std::string& from, const std::set<std::string>& banned_nodes,
                      const std::set<std::pair<std::string, std::string>>& banned_edges) -> Path {
    std::map<std::string, double> dist;
    std::map<std::string, std::string> prev;
    auto cmp_path = [&](const std::string& a, const std::string& b) {
      return a < b;  // node-id order, used for tie-breaks
    };
    using Item = std::tuple<double, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from] = 0.0;
    pq.push({0.0, from});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      auto it = dist.find(u);
      if (it == dist.end() || d > it->second) continue;
      for (const auto& [v, w] : net.neighbors(u)) {
        if (banned_nodes.count(v)) continue;
        if (banned_edges.count({u, v}) || banned_edges.count({v, u})) continue;
        double nd = d + w;
        auto dit = dist.find(v);
        if (dit == dist.end() || nd < dit->second - 1e-12 ||
            (std::abs(nd - dit->second) <= 1e-12 && prev.count(v) && cmp_path(u, prev[v]))) {
          dist[v] = nd;
          prev[v] = u;
          pq.push({nd, v});
        }
      }
    }
    if (!dist.count(dst)) return {};
    Path p;
    for (std::string cur = dst; ; cur = prev[cur]) {
      p.push_back(cur);
      if (cur == from) break;
    }
    std::reverse(p.begin(), p.end());
    return p;
  };

  std::vector<Path> result;
  auto by_cost = [&](const Path& a, const Path& b) {
    double la = path_length(a), lb = path_length(b);
    if (la != lb) return la < lb;
    return a < b;
  };
  std::set<Path, decltype(by_cost)> candidates(by_cost);

  Path first = dijkstra(src, {}, {});
  if (first.empty()) return {};
  result.push_back(first);

  while (static_cast<int>(result.size()) < k) {
    const Path& last = result.back();
    for (std::size_t i = 0; i + 1 < last.size(); ++i) {
      Path root(last.begin(), last.begin() + i + 1);
      std::set<std::pair<std::string, std::string>> banned_edges;
      for (const auto& p : result) {
        if (p.size() > i + 1 && std::equal(root.begin(), root.end(), p.begin()))
          banned_edges.insert({p[i], p[i + 1]});
      }
      std::set<std::string> banned_nodes(root.begin(), root.end() - 1);
      Path spur = dijkstra(root.back(), banned_nodes, banned_edges);
      if (spur.empty()) continue;
      Path total(root.begin(), root.end() - 1);
      total.insert(total.end(), spur.begin(), spur.end());
      if (std::find(result.begin(), result.end(), total) == result.end())
        candidates.insert(total);
    }
    if (candidates.empty()) break;
    result.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return result;
}

}  // namespace sdaas::net
