#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "qflo/fluid_opt.hpp"
#include "support.hpp"

using namespace qflo;
using qflo::test::make_flow;
using qflo::test::make_network;

namespace {

bool some_set_contains(const NetworkSpec& spec, std::initializer_list<Link> links) {
  for (const auto& set : spec.interference_sets) {
    bool all = true;
    for (const auto& l : links) {
      const auto idx = spec.find_link(l.from, l.to);
      all = all && idx && std::find(set.begin(), set.end(), *idx) != set.end();
    }
    if (all) return true;
  }
  return false;
}

NetworkSpec sample_network() { return qflo::test::sample_config().network; }

}  // namespace

TEST_CASE("single one-hop flow gives a single coordinate") {
  auto spec = make_network(8, {{5, 7}}, {make_flow(7, {{5, 7}})});
  const auto index = build_link_flow_index(spec);
  REQUIRE(index.size() == 1);
  CHECK(index[0].from == 5);
  CHECK(index[0].to == 7);
  CHECK(index[0].flow == 7);
  CHECK(index.find(5, 7, 7) == 0u);
  CHECK_FALSE(index.find(7, 5, 7));
}

TEST_CASE("flow 9 of the sample network covers every distinct route link") {
  auto spec = make_network(10, {{0, 1}, {1, 3}, {3, 7}, {7, 9}, {0, 4}, {4, 9}, {0, 2}, {2, 6}, {6, 8}, {8, 9}},
                           {make_flow(9, {{0, 1, 3, 7, 9}, {0, 4, 9}, {0, 2, 6, 8, 9}})});
  const auto index = build_link_flow_index(spec);
  // three routes of 4, 2 and 4 hops, no shared link
  CHECK(index.size() == 10);
  std::set<Link> links;
  for (const auto& e : index.entries()) links.insert({e.from, e.to});
  CHECK(links.size() == 10);
}

TEST_CASE("two flows sharing a link get separate coordinates") {
  auto spec = make_network(10, {{4, 9}, {9, 5}}, {make_flow(9, {{4, 9}}), make_flow(5, {{4, 9, 5}})});
  const auto index = build_link_flow_index(spec);
  REQUIRE(index.size() == 3);
  const auto a = index.find(4, 9, 9), b = index.find(4, 9, 5);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(*a != *b);
  CHECK(index[*a].link == index[*b].link);
  CHECK(index.coordinates_of_link(index[*a].link).size() == 2);
}

TEST_CASE("coordinates are ordered by transmitter, receiver, flow") {
  auto spec = sample_network();
  const auto index = build_link_flow_index(spec);
  CHECK(index.size() == 15);
  for (std::size_t k = 1; k < index.size(); ++k) {
    const auto& a = index[k - 1];
    const auto& b = index[k];
    CHECK(std::tie(a.from, a.to, a.flow) < std::tie(b.from, b.to, b.flow));
  }
}

TEST_CASE("route through a missing link names the route and the hop") {
  NetworkSpec spec = make_network(4, {{0, 1}});
  spec.flows.push_back(make_flow(2, {{0, 1, 2}}));
  try {
    build_link_flow_index(spec);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("route 0 (0->1->2)") != std::string::npos);
    CHECK(msg.find("1->2") != std::string::npos);
  }
  CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("validate rejects structural errors") {
  SUBCASE("self link") {
    auto spec = make_network(3, {{0, 1}});
    spec.links.push_back({2, 2});
    CHECK_THROWS_AS(validate(spec), ConfigError);
  }
  SUBCASE("route not ending at destination") {
    auto spec = make_network(3, {{0, 1}, {1, 2}});
    Flow f = make_flow(2, {{0, 1}});
    spec.flows.push_back(f);
    CHECK_THROWS_AS(validate(spec), ConfigError);
  }
  SUBCASE("negative rate") {
    auto spec = make_network(2, {{0, 1}}, {make_flow(1, {{0, 1}}, -1.0)});
    CHECK_THROWS_AS(validate(spec), ConfigError);
  }
  SUBCASE("valid network") {
    auto spec = make_network(3, {{0, 1}, {1, 2}}, {make_flow(2, {{0, 1, 2}})});
    CHECK_NOTHROW(validate(spec));
  }
}

TEST_CASE("node interference sets") {
  SUBCASE("star around node 2") {
    auto spec = make_network(5, {{1, 2}, {3, 2}, {2, 4}});
    CHECK(some_set_contains(spec, {{1, 2}, {3, 2}, {2, 4}}));
    // the leaf sets are subsets of the centre set and are dropped
    CHECK(spec.interference_sets.size() == 1);
  }
  SUBCASE("disjoint links share nothing") {
    auto spec = make_network(5, {{1, 2}, {3, 4}});
    CHECK_FALSE(some_set_contains(spec, {{1, 2}, {3, 4}}));
    CHECK(spec.interference_sets.size() == 2);
  }
  SUBCASE("node 9 of the sample network") {
    auto spec = sample_network();
    const auto node_sets = node_interference_sets(spec);
    REQUIRE(node_sets[9]);
    std::set<Link> links;
    for (auto l : spec.interference_sets[*node_sets[9]]) links.insert(spec.links[l]);
    CHECK(links == std::set<Link>{{7, 9}, {4, 9}, {8, 9}});
  }
  SUBCASE("user sets are kept, duplicates removed") {
    NetworkSpec spec = make_network(6, {{0, 1}, {2, 3}, {4, 5}});
    spec.interference_sets.push_back({0, 1});
    spec.interference_sets.push_back({1, 0});
    spec = derive_interference_sets(spec);
    CHECK(some_set_contains(spec, {{0, 1}, {2, 3}}));
    std::size_t holding_both = 0;
    for (const auto& set : spec.interference_sets)
      holding_both += (std::count(set.begin(), set.end(), 0u) && std::count(set.begin(), set.end(), 1u)) ? 1 : 0;
    CHECK(holding_both == 1);
  }
  SUBCASE("every pair of links sharing a node is covered") {
    auto spec = sample_network();
    for (const auto& a : spec.links)
      for (const auto& b : spec.links)
        if (a.from == b.from || a.from == b.to || a.to == b.from || a.to == b.to) CHECK(some_set_contains(spec, {a, b}));
  }
}

TEST_CASE("halfspace normals and bounds") {
  // node 0 with three incident links, each carrying one flow
  auto spec = make_network(4, {{0, 1}, {0, 2}, {0, 3}},
                           {make_flow(1, {{0, 1}}), make_flow(2, {{0, 2}}), make_flow(3, {{0, 3}})});
  const auto index = build_link_flow_index(spec);
  const auto cs = build_constraints(index, spec);
  REQUIRE(cs.halfspaces.size() == 1);
  const auto& h = cs.halfspaces[0];
  CHECK(h.size() == 3);
  CHECK(h.normal_component() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(h.bound() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(h.normal_component() * h.normal_component() * 3.0 == doctest::Approx(1.0));

  auto single = make_network(2, {{0, 1}}, {make_flow(1, {{0, 1}})});
  const auto cs1 = build_constraints(build_link_flow_index(single), single);
  REQUIRE(cs1.halfspaces.size() == 1);
  CHECK(cs1.halfspaces[0].normal_component() == 1.0);
  CHECK(cs1.halfspaces[0].bound() == 1.0);
}

TEST_CASE("a set whose links carry no flow yields no halfspace") {
  auto spec = make_network(4, {{0, 1}, {2, 3}}, {make_flow(1, {{0, 1}})});
  const auto cs = build_constraints(build_link_flow_index(spec), spec);
  CHECK(cs.halfspaces.size() == 1);
}

TEST_CASE("endpoint halfspaces of link (3,7) are the node-3 and node-7 sets") {
  auto spec = sample_network();
  const auto index = build_link_flow_index(spec);
  const auto cs = build_constraints(index, spec);
  const auto node_sets = node_interference_sets(spec);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k].from != 3 || index[k].to != 7) continue;
    std::set<std::size_t> sources;
    for (auto h : cs.endpoint_halfspaces[k]) sources.insert(cs.halfspaces[h].source_set);
    CHECK(sources == std::set<std::size_t>{*node_sets[3], *node_sets[7]});
  }
}

TEST_CASE("constraint construction is deterministic") {
  auto spec = sample_network();
  const auto a = build_constraints(build_link_flow_index(spec), spec);
  const auto b = build_constraints(build_link_flow_index(sample_network()), sample_network());
  REQUIRE(a.halfspaces.size() == b.halfspaces.size());
  for (std::size_t i = 0; i < a.halfspaces.size(); ++i) CHECK(a.halfspaces[i].members == b.halfspaces[i].members);
  CHECK(a.endpoint_halfspaces == b.endpoint_halfspaces);
}

TEST_CASE("feasible schedules respect per-link and pairwise limits") {
  auto spec = sample_network();
  const auto index = build_link_flow_index(spec);
  const auto cs = build_constraints(index, spec);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(index.size()));
    for (auto& x : s) x = u(rng);
    finalize_feasible(s, cs);
    REQUIRE(is_feasible(s, cs));
    std::vector<double> per_link(spec.links.size(), 0.0);
    for (std::size_t k = 0; k < index.size(); ++k) per_link[index[k].link] += s(static_cast<Eigen::Index>(k));
    for (double v : per_link) CHECK(v <= 1.0 + 1e-9);
    for (const auto& set : spec.interference_sets)
      for (auto a : set)
        for (auto b : set)
          if (a != b) CHECK(per_link[a] + per_link[b] <= 1.0 + 1e-9);
  }
}
