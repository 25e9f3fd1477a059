#include "qflo/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qflo {

namespace {

std::string route_name(const Flow& flow, std::size_t r) {
  std::ostringstream os;
  os << "flow " << flow.id() << " route " << r << " (";
  for (std::size_t h = 0; h < flow.routes[r].size(); ++h) os << (h ? "->" : "") << flow.routes[r][h];
  os << ")";
  return os.str();
}

bool is_subset(const InterferenceSet& small, const InterferenceSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

std::optional<std::size_t> NetworkSpec::find_link(NodeId from, NodeId to) const {
  for (std::size_t l = 0; l < links.size(); ++l)
    if (links[l].from == from && links[l].to == to) return l;
  return std::nullopt;
}

const Flow& NetworkSpec::flow(FlowId id) const {
  for (const auto& f : flows)
    if (f.id() == id) return f;
  throw ConfigError("unknown flow " + std::to_string(id));
}

void validate(const NetworkSpec& spec) {
  if (spec.nodes.empty()) throw ConfigError("network.nodes: at least one node required");
  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    if (spec.nodes[i].id != static_cast<NodeId>(i))
      throw ConfigError("network.nodes[" + std::to_string(i) + "].id: node ids must be 0..N-1 in order");

  std::set<Link> seen;
  for (std::size_t l = 0; l < spec.links.size(); ++l) {
    const auto& link = spec.links[l];
    const std::string key = "network.links[" + std::to_string(l) + "]";
    if (!spec.has_node(link.from) || !spec.has_node(link.to))
      throw ConfigError(key + ": endpoint is not a node");
    if (link.from == link.to) throw ConfigError(key + ": self-link");
    if (!seen.insert(link).second) throw ConfigError(key + ": duplicate link");
  }

  std::set<FlowId> flow_ids;
  for (const auto& flow : spec.flows) {
    const std::string key = "network.flows[destination=" + std::to_string(flow.id()) + "]";
    if (!spec.has_node(flow.destination)) throw ConfigError(key + ": destination is not a node");
    if (!flow_ids.insert(flow.id()).second) throw ConfigError(key + ": duplicate flow destination");
    if (flow.sources.empty()) throw ConfigError(key + ".sources: at least one source required");
    for (const auto& src : flow.sources) {
      if (!spec.has_node(src.node)) throw ConfigError(key + ".sources: node " + std::to_string(src.node) + " does not exist");
      if (src.node == flow.destination) throw ConfigError(key + ".sources: source equals destination");
      if (!(src.arrival_rate >= 0.0) || !std::isfinite(src.arrival_rate))
        throw ConfigError(key + ".sources.rate_pkts_per_slot: must be >= 0");
      const bool routed = std::any_of(flow.routes.begin(), flow.routes.end(),
                                      [&](const auto& r) { return !r.empty() && r.front() == src.node; });
      if (!routed) throw ConfigError(key + ".routes: no route starts at source " + std::to_string(src.node));
    }
    for (std::size_t r = 0; r < flow.routes.size(); ++r) {
      const auto& route = flow.routes[r];
      if (route.size() < 2) throw ConfigError(key + ".routes: " + route_name(flow, r) + " needs at least two nodes");
      const bool from_source = std::any_of(flow.sources.begin(), flow.sources.end(),
                                           [&](const Source& s) { return s.node == route.front(); });
      if (!from_source) throw ConfigError(key + ".routes: " + route_name(flow, r) + " does not start at a source");
      if (route.back() != flow.destination)
        throw ConfigError(key + ".routes: " + route_name(flow, r) + " does not end at the destination");
      std::set<NodeId> visited(route.begin(), route.end());
      if (visited.size() != route.size()) throw ConfigError(key + ".routes: " + route_name(flow, r) + " revisits a node");
      for (std::size_t h = 0; h + 1 < route.size(); ++h)
        if (!spec.find_link(route[h], route[h + 1]))
          throw ConfigError(key + ".routes: " + route_name(flow, r) + " hop " + std::to_string(route[h]) + "->" +
                            std::to_string(route[h + 1]) + " is not a link");
    }
    if (flow.qos.kind != QosKind::kNone && !(flow.qos.theta_hat > 1.0))
      throw ConfigError(key + ".qos.theta_hat: must be > 1");
    if (flow.qos.kind == QosKind::kMeanDelay && !(flow.qos.target_slots > 0.0))
      throw ConfigError(key + ".qos.target_slots: must be > 0");
    if (flow.qos.kind == QosKind::kHardDeadline) {
      if (!(flow.qos.deadline_slots > 0.0)) throw ConfigError(key + ".qos.deadline_slots: must be > 0");
      if (!(flow.qos.drop_ratio_target > 0.0 && flow.qos.drop_ratio_target < 1.0))
        throw ConfigError(key + ".qos.drop_ratio_target: must lie in (0,1)");
    }
  }

  for (std::size_t s = 0; s < spec.interference_sets.size(); ++s)
    for (auto l : spec.interference_sets[s])
      if (l >= spec.links.size())
        throw ConfigError("network.interference_sets[" + std::to_string(s) + "]: link index out of range");
}

LinkFlowIndex::LinkFlowIndex(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.from, a.to, a.flow) < std::tie(b.from, b.to, b.flow);
  });
  entries_.erase(std::unique(entries_.begin(), entries_.end(),
                             [](const Entry& a, const Entry& b) {
                               return a.from == b.from && a.to == b.to && a.flow == b.flow;
                             }),
                 entries_.end());
  for (std::size_t k = 0; k < entries_.size(); ++k)
    lookup_.emplace(std::make_tuple(entries_[k].from, entries_[k].to, entries_[k].flow), k);
}

std::optional<std::size_t> LinkFlowIndex::find(NodeId from, NodeId to, FlowId flow) const {
  auto it = lookup_.find(std::make_tuple(from, to, flow));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> LinkFlowIndex::coordinates_of_link(std::size_t link) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < entries_.size(); ++k)
    if (entries_[k].link == link) out.push_back(k);
  return out;
}

LinkFlowIndex build_link_flow_index(const NetworkSpec& spec) {
  std::vector<LinkFlowIndex::Entry> entries;
  for (const auto& flow : spec.flows) {
    for (std::size_t r = 0; r < flow.routes.size(); ++r) {
      const auto& route = flow.routes[r];
      for (std::size_t h = 0; h + 1 < route.size(); ++h) {
        auto link = spec.find_link(route[h], route[h + 1]);
        if (!link)
          throw ConfigError(route_name(flow, r) + ": hop " + std::to_string(route[h]) + "->" +
                            std::to_string(route[h + 1]) + " is not a link");
        entries.push_back({*link, route[h], route[h + 1], flow.id()});
      }
    }
  }
  return LinkFlowIndex(std::move(entries));
}

NetworkSpec derive_interference_sets(NetworkSpec spec) {
  std::vector<InterferenceSet> candidates;
  for (const auto& node : spec.nodes) {
    InterferenceSet set;
    for (std::size_t l = 0; l < spec.links.size(); ++l)
      if (spec.links[l].from == node.id || spec.links[l].to == node.id) set.push_back(l);
    candidates.push_back(std::move(set));
  }
  for (auto set : spec.interference_sets) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    candidates.push_back(std::move(set));
  }

  std::vector<InterferenceSet> kept;
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    const auto& cand = candidates[a];
    if (cand.empty()) continue;
    bool redundant = false;
    for (std::size_t b = 0; b < candidates.size() && !redundant; ++b) {
      if (a == b) continue;
      const auto& other = candidates[b];
      if (other.size() > cand.size() && is_subset(cand, other)) redundant = true;
      if (other == cand && b < a) redundant = true;  // keep first duplicate
    }
    if (!redundant) kept.push_back(cand);
  }
  spec.interference_sets = std::move(kept);
  return spec;
}

std::vector<std::optional<std::size_t>> node_interference_sets(const NetworkSpec& spec) {
  std::vector<std::optional<std::size_t>> out(spec.nodes.size());
  for (const auto& node : spec.nodes) {
    InterferenceSet incident;
    for (std::size_t l = 0; l < spec.links.size(); ++l)
      if (spec.links[l].from == node.id || spec.links[l].to == node.id) incident.push_back(l);
    if (incident.empty()) continue;
    for (std::size_t s = 0; s < spec.interference_sets.size(); ++s) {
      auto set = spec.interference_sets[s];
      std::sort(set.begin(), set.end());
      if (is_subset(incident, set)) {
        out[node.id] = s;
        break;
      }
    }
  }
  return out;
}

double Halfspace::normal_component() const { return 1.0 / std::sqrt(static_cast<double>(members.size())); }
double Halfspace::bound() const { return normal_component(); }

ConstraintSet build_constraints(const LinkFlowIndex& index, const NetworkSpec& spec) {
  ConstraintSet cs;
  std::vector<std::optional<std::size_t>> hs_of_set(spec.interference_sets.size());
  for (std::size_t s = 0; s < spec.interference_sets.size(); ++s) {
    const std::set<std::size_t> links(spec.interference_sets[s].begin(), spec.interference_sets[s].end());
    Halfspace h;
    h.source_set = s;
    std::set<std::size_t> carrying;
    for (std::size_t k = 0; k < index.size(); ++k) {
      if (links.count(index[k].link)) {
        h.members.push_back(k);
        carrying.insert(index[k].link);
      }
    }
    if (h.members.empty()) continue;
    h.link_count = carrying.size();
    hs_of_set[s] = cs.halfspaces.size();
    cs.halfspaces.push_back(std::move(h));
  }

  const auto node_sets = node_interference_sets(spec);
  cs.endpoint_halfspaces.resize(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    auto& out = cs.endpoint_halfspaces[k];
    for (NodeId v : {index[k].from, index[k].to}) {
      const auto set = node_sets.at(v);
      if (!set || !hs_of_set[*set]) continue;
      if (std::find(out.begin(), out.end(), *hs_of_set[*set]) == out.end()) out.push_back(*hs_of_set[*set]);
    }
  }
  return cs;
}

std::vector<std::vector<std::size_t>> link_conflicts(const NetworkSpec& spec) {
  std::vector<std::set<std::size_t>> acc(spec.links.size());
  for (std::size_t l = 0; l < spec.links.size(); ++l) acc[l].insert(l);
  for (const auto& set : spec.interference_sets)
    for (auto a : set)
      for (auto b : set) acc[a].insert(b);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(acc.size());
  for (const auto& s : acc) out.emplace_back(s.begin(), s.end());
  return out;
}

}  // namespace qflo
