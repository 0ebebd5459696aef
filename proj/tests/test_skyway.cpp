#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "sdaas/skyway.hpp"

using namespace sdaas::net;

namespace {

SkywayNetwork triangle() {
  std::istringstream edges("from,to,dist_m\nA,B,1000\nB,C,1000\nA,C,1500\n");
  return load_network(edges, PadPolicy::fixed(2));
}

// All simple paths src->dst by DFS, ordered by (distance, node sequence).
std::vector<std::vector<std::string>> brute_force_paths(const SkywayNetwork& net,
                                                        const std::string& src,
                                                        const std::string& dst) {
  std::vector<std::vector<std::string>> all;
  std::vector<std::string> cur{src};
  std::function<void()> dfs = [&]() {
    if (cur.back() == dst) {
      all.push_back(cur);
      return;
    }
    for (const auto& [nbr, d] : net.neighbors(cur.back())) {
      if (std::find(cur.begin(), cur.end(), nbr) != cur.end()) continue;
      cur.push_back(nbr);
      dfs();
      cur.pop_back();
    }
  };
  dfs();
  auto length = [&](const std::vector<std::string>& p) {
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) t += *net.segment_distance(p[i], p[i + 1]);
    return t;
  };
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    double la = length(a), lb = length(b);
    if (la != lb) return la < lb;
    return a < b;
  });
  return all;
}

}  // namespace

TEST_CASE("triangle network loads") {
  auto net = triangle();
  CHECK(net.nodes().size() == 3);
  CHECK(net.segments().size() == 3);
  for (const auto& n : net.nodes()) CHECK(n.pads == 2);
  CHECK(net.connected());
  CHECK(*net.segment_distance("A", "B") == doctest::Approx(1000.0));
  CHECK(*net.segment_distance("B", "A") == doctest::Approx(1000.0));  // bidirectional
}

TEST_CASE("parse errors carry line numbers") {
  std::istringstream bad("from,to,dist_m\nA,B,-5\n");
  CHECK_THROWS_AS(load_network(bad, PadPolicy::fixed(1)), ParseError);
  try {
    std::istringstream bad2("from,to,dist_m\nA,B,1000\nC,D,xyz\n");
    load_network(bad2, PadPolicy::fixed(1));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream self("from,to,dist_m\nA,A,10\n");
  CHECK_THROWS(load_network(self, PadPolicy::fixed(1)));
}

TEST_CASE("disconnected network rejected") {
  std::istringstream edges("from,to,dist_m\nA,B,100\nC,D,100\n");
  CHECK_THROWS_AS(load_network(edges, PadPolicy::fixed(1)), std::invalid_argument);
  std::istringstream edges2("from,to,dist_m\nA,B,100\nC,D,100\n");
  auto net = load_network(edges2, PadPolicy::fixed(1), nullptr, false);
  CHECK_FALSE(net.connected());
}

TEST_CASE("distances derived from coordinates") {
  std::istringstream nodes("id,x_m,y_m,pads\nA,0,0,2\nB,3000,4000,1\n");
  std::istringstream edges("from,to\nA,B\n");
  auto net = load_network(edges, PadPolicy::fixed(1), &nodes);
  CHECK(*net.segment_distance("A", "B") == doctest::Approx(5000.0));
  CHECK(net.node("A").pads == 2);
}

TEST_CASE("save then load round-trips nodes, segments, pads") {
  auto net = generate_network(30, 11);
  std::ostringstream edges_out, nodes_out;
  save_network(net, edges_out, nodes_out);
  std::istringstream edges_in(edges_out.str()), nodes_in(nodes_out.str());
  auto again = load_network(edges_in, PadPolicy::fixed(1), &nodes_in);
  REQUIRE(again.nodes().size() == net.nodes().size());
  REQUIRE(again.segments().size() == net.segments().size());
  for (const auto& n : net.nodes()) {
    CHECK(again.node(n.id).pads == n.pads);
    CHECK(again.node(n.id).x_m == doctest::Approx(n.x_m));
  }
  for (const auto& s : net.segments())
    CHECK(*again.segment_distance(s.from, s.to) == doctest::Approx(s.dist_m));
}

TEST_CASE("generated network at paper scale") {
  auto net = generate_network(208, 3);
  CHECK(net.nodes().size() == 208);
  CHECK(net.connected());
  for (const auto& n : net.nodes()) {
    CHECK(n.pads >= 1);
    CHECK(n.pads <= 4);
  }
}

TEST_CASE("request generation") {
  auto net = generate_network(30, 19);
  RequestGenConfig cfg;
  auto reqs = generate_requests(net, 50, 7, cfg);
  REQUIRE(reqs.size() == 50);
  for (const auto& r : reqs) {
    CHECK(r.source != r.destination);
    CHECK(r.payloads_kg.size() >= 1);
    CHECK(r.payloads_kg.size() <= 5);
    for (double w : r.payloads_kg) {
      CHECK(w > 0.0);
      CHECK(w <= 2.5);
    }
    CHECK(r.window_start < r.window_end);
  }

  auto again = generate_requests(net, 50, 7, cfg);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    CHECK(reqs[i].source == again[i].source);
    CHECK(reqs[i].destination == again[i].destination);
    CHECK(reqs[i].payloads_kg == again[i].payloads_kg);
    CHECK(reqs[i].window_start == again[i].window_start);
  }

  auto tri = triangle();
  auto ten = generate_requests(tri, 6, 1, cfg);
  for (const auto& r : ten) CHECK(r.source != r.destination);
  CHECK_THROWS_AS(generate_requests(tri, 7, 1, cfg), std::invalid_argument);

  // JSON round-trip.
  auto j = request_to_json(reqs[0]);
  auto back = request_from_json(j);
  CHECK(back.id == reqs[0].id);
  CHECK(back.payloads_kg == reqs[0].payloads_kg);
  CHECK(back.window_end == reqs[0].window_end);
}

TEST_CASE("paper-scale request corpus") {
  auto net = generate_network(208, 3);
  auto reqs = generate_requests(net, 1700, 21);
  CHECK(reqs.size() == 1700);
  for (const auto& r : reqs) {
    CHECK(r.source != r.destination);
    CHECK(r.payloads_kg.size() <= 5);
  }
}

TEST_CASE("top-k shortest paths on the triangle") {
  auto net = triangle();
  auto paths = shortest_paths_topk(net, "A", "B", 2);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0] == std::vector<std::string>{"A", "B"});
  CHECK(paths[1] == std::vector<std::string>{"A", "C", "B"});

  CHECK(shortest_paths_topk(net, "A", "A", 3) ==
        std::vector<std::vector<std::string>>{{"A"}});
}

TEST_CASE("top-k on a line graph") {
  std::istringstream edges("from,to,dist_m\nA,B,100\nB,C,100\nC,D,100\n");
  auto net = load_network(edges, PadPolicy::fixed(1));
  auto paths = shortest_paths_topk(net, "A", "D", 3);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0] == std::vector<std::string>{"A", "B", "C", "D"});
}

TEST_CASE("top-k matches brute force on small random graphs") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto net = generate_network(7, seed);
    const std::string src = net.nodes().front().id;
    const std::string dst = net.nodes().back().id;
    auto expect = brute_force_paths(net, src, dst);
    auto got = shortest_paths_topk(net, src, dst, 10);
    std::size_t want = std::min<std::size_t>(10, expect.size());
    REQUIRE(got.size() == want);
    auto length = [&](const std::vector<std::string>& p) {
      double t = 0.0;
      for (std::size_t i = 0; i + 1 < p.size(); ++i) t += *net.segment_distance(p[i], p[i + 1]);
      return t;
    };
    double prev = 0.0;
    for (std::size_t i = 0; i < want; ++i) {
      // Same path set and non-decreasing distances.
      CHECK(length(got[i]) == doctest::Approx(length(expect[i])).epsilon(1e-9));
      CHECK(length(got[i]) >= prev - 1e-9);
      prev = length(got[i]);
      // Each returned path is simple and connects src to dst.
      CHECK(got[i].front() == src);
      CHECK(got[i].back() == dst);
      auto sorted = got[i];
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
  }
}

TEST_CASE("no path yields empty list") {
  std::istringstream edges("from,to,dist_m\nA,B,100\nC,D,100\n");
  auto net = load_network(edges, PadPolicy::fixed(1), nullptr, false);
  CHECK(shortest_paths_topk(net, "A", "D", 5).empty());
}
