#include "qflo/oracle_check.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace qflo {

RandomInstance random_instance(std::mt19937_64& rng, const InstanceOptions& options) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  while (true) {
    NetworkSpec net;
    const int n_nodes = std::uniform_int_distribution<int>(3, 6)(rng);
    for (int i = 0; i < n_nodes; ++i) net.nodes.push_back({i, unit(rng), unit(rng)});
    std::uniform_int_distribution<int> pick_node(0, n_nodes - 1);

    std::set<NodeId> destinations;
    const int n_flows = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int f = 0; f < n_flows; ++f) {
      const NodeId dest = pick_node(rng);
      if (!destinations.insert(dest).second) continue;
      Flow flow;
      flow.destination = dest;
      const int n_sources = std::uniform_int_distribution<int>(1, 2)(rng);
      for (int s = 0; s < n_sources; ++s) {
        const NodeId src = pick_node(rng);
        if (src == dest || std::any_of(flow.sources.begin(), flow.sources.end(), [&](const Source& x) { return x.node == src; }))
          continue;
        flow.sources.push_back({src, 1.0});
        const NodeId via = pick_node(rng);
        if (coin(rng) && via != src && via != dest)
          flow.routes.push_back({src, via, dest});
        else
          flow.routes.push_back({src, dest});
      }
      if (!flow.sources.empty()) net.flows.push_back(std::move(flow));
    }
    for (const auto& flow : net.flows)
      for (const auto& route : flow.routes)
        for (std::size_t h = 0; h + 1 < route.size(); ++h)
          if (!net.find_link(route[h], route[h + 1])) net.links.push_back({route[h], route[h + 1]});
    if (net.flows.empty()) continue;

    net = derive_interference_sets(std::move(net));
    auto index = build_link_flow_index(net);
    if (index.size() == 0 || index.size() > options.max_dimension) continue;
    auto constraints = build_constraints(index, net);

    std::map<FlowId, double> theta;
    for (const auto& flow : net.flows) theta[flow.id()] = coin(rng) ? options.theta_hat : 1.0;
    std::map<std::pair<NodeId, FlowId>, double> backlog;
    std::uniform_int_distribution<std::int64_t> pick_backlog(0, options.max_backlog);
    std::uniform_real_distribution<double> pick_rate(options.min_rate, options.max_rate);
    std::vector<double> rate(net.links.size());
    for (auto& r : rate) r = pick_rate(rng);

    const auto n = static_cast<Eigen::Index>(index.size());
    WeightVector<double> w{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd::Constant(n, options.theta_hat)};
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& e = index[static_cast<std::size_t>(k)];
      auto key = std::make_pair(e.from, e.flow);
      if (!backlog.count(key)) backlog[key] = static_cast<double>(pick_backlog(rng));
      w.w(k) = theta[e.flow] * backlog[key];
      w.mu(k) = rate[e.link];
    }
    return {std::move(net), std::move(index), std::move(constraints), std::move(w)};
  }
}

double scaled_step(const WeightVector<double>& w, double base_step, double reference_gradient) {
  const double largest = w.size() ? w.gradient().maxCoeff() : 0.0;
  return largest > 0.0 ? base_step * reference_gradient / largest : base_step;
}

double OracleComparison::allowance() const { return std::max(c3, 0.01 * oracle); }

std::vector<OracleComparison> oracle_check(std::uint64_t seed, std::size_t count, int cycles,
                                           const InstanceOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<OracleComparison> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto inst = random_instance(rng, options);
    OptParams params;
    params.cycles = cycles;
    params.step_size = scaled_step(inst.weights);
    const auto [s, diag] = solve_review_optimization(inst.weights, inst.constraints, params);
    OracleComparison c;
    c.dimension = inst.index.size();
    c.oracle = oracle_solve(inst.weights, inst.constraints).second;
    c.solver = objective(s, inst.weights);
    c.c3 = diag.c3;
    c.step = params.step_size;
    out.push_back(c);
  }
  return out;
}

}  // namespace qflo
