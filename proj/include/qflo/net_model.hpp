#ifndef QFLO_NET_MODEL_HPP
#define QFLO_NET_MODEL_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace qflo {

using NodeId = int;
using FlowId = int;  // a flow is named by its destination node

/// Raised for any inconsistency in user-supplied configuration. The message
/// names the offending key or object.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  NodeId id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Link {
  NodeId from = 0;
  NodeId to = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

enum class QosKind { kNone, kMeanDelay, kHardDeadline };

struct QosSpec {
  QosKind kind = QosKind::kNone;
  double target_slots = 0.0;       // mean-delay target
  double deadline_slots = 0.0;     // hard deadline
  double drop_ratio_target = 0.0;  // tolerated late fraction
  double theta_hat = 2.0;          // priority weight while violated
};

struct Source {
  NodeId node = 0;
  double arrival_rate = 0.0;  // packets/slot, Poisson
};

/// All traffic sharing a destination. Several sources may inject into it.
struct Flow {
  NodeId destination = 0;
  std::vector<Source> sources;
  std::vector<std::vector<NodeId>> routes;
  QosSpec qos;

  FlowId id() const { return destination; }
};

/// Links are indices into NetworkSpec::links.
using InterferenceSet = std::vector<std::size_t>;

struct NetworkSpec {
  std::vector<Node> nodes;  // node i has id i
  std::vector<Link> links;
  std::vector<Flow> flows;
  std::vector<InterferenceSet> interference_sets;

  std::optional<std::size_t> find_link(NodeId from, NodeId to) const;
  const Flow& flow(FlowId id) const;
  bool has_node(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes.size(); }
};

/// Throws ConfigError on the first violated structural invariant.
void validate(const NetworkSpec& spec);

/// Coordinate space K of the schedule vector: every (link, flow) pair that
/// some route of the flow traverses, ordered by (from, to, flow).
class LinkFlowIndex {
 public:
  struct Entry {
    std::size_t link = 0;  // index into NetworkSpec::links
    NodeId from = 0;
    NodeId to = 0;
    FlowId flow = 0;
  };

  LinkFlowIndex() = default;
  explicit LinkFlowIndex(std::vector<Entry> entries);

  std::size_t size() const { return entries_.size(); }
  const Entry& operator[](std::size_t k) const { return entries_[k]; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<std::size_t> find(NodeId from, NodeId to, FlowId flow) const;

  /// Coordinates k whose link is the given link index.
  std::vector<std::size_t> coordinates_of_link(std::size_t link) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::tuple<NodeId, NodeId, FlowId>, std::size_t> lookup_;
};

/// A constraint sum_{k in members} s(k) <= 1 written with a unit normal:
/// <s, nu> <= beta, nu = 1/sqrt(n) on the n members, beta = 1/sqrt(n).
struct Halfspace {
  std::vector<std::size_t> members;  // sorted coordinates of K
  std::size_t link_count = 0;        // distinct links behind the members
  std::size_t source_set = 0;        // index into NetworkSpec::interference_sets

  std::size_t size() const { return members.size(); }
  double normal_component() const;
  double bound() const;
};

struct ConstraintSet {
  std::vector<Halfspace> halfspaces;
  /// Per coordinate: halfspaces of the sets covering the links at i(k) and
  /// j(k). Holds one entry when both endpoints map to the same set.
  std::vector<std::vector<std::size_t>> endpoint_halfspaces;

  std::size_t dimension() const { return endpoint_halfspaces.size(); }
};

LinkFlowIndex build_link_flow_index(const NetworkSpec& spec);

/// Adds one set per node holding every incident link, keeps user sets, and
/// drops sets that duplicate or are contained in another set.
NetworkSpec derive_interference_sets(NetworkSpec spec);

ConstraintSet build_constraints(const LinkFlowIndex& index, const NetworkSpec& spec);

/// Interference set indices covering all links incident on each node after
/// derive_interference_sets (the smallest-index superset of the node's links).
std::vector<std::optional<std::size_t>> node_interference_sets(const NetworkSpec& spec);

/// For each link, the links that may not be co-active with it (itself included).
std::vector<std::vector<std::size_t>> link_conflicts(const NetworkSpec& spec);

}  // namespace qflo

#endif  // QFLO_NET_MODEL_HPP
