#ifndef QFLO_TESTS_SUPPORT_HPP
#define QFLO_TESTS_SUPPORT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "qflo/config.hpp"
#include "qflo/net_model.hpp"

namespace qflo::test {

// Nodes on a circle so no two coincide.
inline NetworkSpec make_network(int nodes, std::vector<Link> links, std::vector<Flow> flows = {}) {
  NetworkSpec spec;
  for (int i = 0; i < nodes; ++i) {
    const double a = 2.0 * M_PI * i / nodes;
    spec.nodes.push_back({i, 0.5 + 0.4 * std::cos(a), 0.5 + 0.4 * std::sin(a)});
  }
  spec.links = std::move(links);
  spec.flows = std::move(flows);
  return derive_interference_sets(std::move(spec));
}

inline Flow make_flow(NodeId destination, std::vector<std::vector<NodeId>> routes, double rate = 1.0) {
  Flow f;
  f.destination = destination;
  for (const auto& r : routes) {
    bool seen = false;
    for (const auto& s : f.sources) seen = seen || s.node == r.front();
    if (!seen) f.sources.push_back({r.front(), rate});
  }
  f.routes = std::move(routes);
  return f;
}

inline std::string sample_config_path() { return std::string(QFLO_PRESET_DIR) + "/sample_network.yaml"; }

inline SimConfig sample_config() { return load_config(sample_config_path()); }

inline const char* kMinimalConfig = R"(network:
  nodes:
    - {id: 0, x: 0.1, y: 0.1}
    - {id: 1, x: 0.9, y: 0.9}
  links:
    - [0, 1]
  flows:
    - destination: 1
      sources:
        - {node: 0, rate_pkts_per_slot: 0.5}
      routes:
        - [0, 1]
)";

}  // namespace qflo::test

#endif
