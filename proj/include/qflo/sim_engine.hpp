#ifndef QFLO_SIM_ENGINE_HPP
#define QFLO_SIM_ENGINE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "qflo/channel.hpp"
#include "qflo/fluid_opt.hpp"
#include "qflo/review_control.hpp"
#include "qflo/sim_config.hpp"

namespace qflo {

struct Packet {
  Slot created_at = 0;
  std::int32_t hops = 0;
};

struct FlowMetrics {
  FlowId flow = 0;
  std::int64_t created = 0;
  std::int64_t delivered = 0;  // reached the destination and kept
  std::int64_t dropped = 0;    // reached a hard-deadline destination late
  std::int64_t delay_sum = 0;  // over delivered + dropped
  std::map<std::int64_t, std::int64_t> delay_histogram;  // delay (slots) -> packets

  std::int64_t arrived() const { return delivered + dropped; }
  /// Absent before the first arrival at the destination.
  std::optional<double> mean_delay() const;
  std::optional<double> drop_ratio() const;

  friend bool operator==(const FlowMetrics&, const FlowMetrics&) = default;
};

struct QueueMetrics {
  NodeId node = 0;
  FlowId flow = 0;
  double mean_length = 0.0;  // averaged over slot ends
  std::int64_t final_length = 0;

  friend bool operator==(const QueueMetrics&, const QueueMetrics&) = default;
};

struct PeriodDiagnostics {
  Slot start = 0;
  Slot length = 0;
  double objective = 0.0;
  double c3 = 0.0;
  std::optional<double> oracle_gap;
  std::int64_t projections = 0;
  std::int64_t messages = 0;

  friend bool operator==(const PeriodDiagnostics&, const PeriodDiagnostics&) = default;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  Slot horizon = 0;
  std::vector<FlowMetrics> flows;  // ascending flow id
  std::vector<QueueMetrics> queues;
  std::vector<PeriodDiagnostics> periods;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// (mean delay, drop ratio) of one flow; each absent when nothing arrived.
/// Throws std::invalid_argument for an unknown flow.
std::pair<std::optional<double>, std::optional<double>> flow_statistics(const MetricsReport& report, FlowId flow);

/// One slot's observable outcome, for tracing and invariant checks.
struct SlotTrace {
  Slot slot = 0;
  bool reviewed = false;
  std::vector<std::size_t> scheduled;    // coordinates of K scheduled this slot
  std::vector<std::size_t> transmitted;  // links that moved at least one packet
  std::vector<std::int64_t> queue_lengths;  // end of slot, see Simulator::queue_key
  double objective = 0.0;                   // of the current period's schedule
};

/// Slotted packet-level run of the discrete-review controller. Each slot:
/// review (when due), Poisson arrivals, then service of scheduled links.
/// Service is sized from start-of-slot queue lengths, so a packet moves at
/// most one hop per slot.
class Simulator {
 public:
  Simulator(SimConfig config, std::uint64_t seed);

  void step();
  Slot now() const { return now_; }
  const SlotTrace& last_slot() const { return last_; }

  /// Queue lengths in the order of queue_key().
  std::vector<std::int64_t> queue_lengths() const;
  const std::vector<std::pair<NodeId, FlowId>>& queue_key() const { return keys_; }

  /// Q(0) + arrivals + receptions - transmissions for every queue; must equal
  /// queue_lengths().
  std::vector<std::int64_t> bookkeeping_lengths() const;

  std::int64_t packets_created() const;
  std::int64_t packets_queued() const;
  std::int64_t packets_delivered() const;
  std::int64_t packets_dropped() const;

  const LinkFlowIndex& index() const { return index_; }
  const ConstraintSet& constraints() const { return constraints_; }
  const SimConfig& config() const { return config_; }
  const SlotSchedule& schedule() const { return schedule_; }

  MetricsReport report() const;

 private:
  struct QueueState {
    NodeId node = 0;
    std::size_t flow = 0;  // index into config_.network.flows
    std::deque<Packet> packets;
    std::int64_t arrivals = 0;
    std::int64_t received = 0;
    std::int64_t transmitted = 0;
    double length_sum = 0.0;
  };

  void review();
  std::size_t queue_of(NodeId node, std::size_t flow) const;
  std::int64_t service_capacity(double rate);

  SimConfig config_;
  std::uint64_t seed_;
  LinkFlowIndex index_;
  ConstraintSet constraints_;
  std::vector<std::vector<std::size_t>> conflicts_;
  std::vector<std::size_t> flow_of_coordinate_;  // index into flows
  std::vector<QueueState> queues_;
  std::vector<std::pair<NodeId, FlowId>> keys_;
  std::vector<std::ptrdiff_t> queue_lookup_;  // node * flows + flow -> queue or -1
  std::vector<FlowMetrics> flow_metrics_;     // parallel to config_.network.flows
  QosState qos_;

  ReviewClock clock_;
  Slot now_ = 0;
  std::int64_t period_ = 0;
  RateTable rates_;
  SlotSchedule schedule_;
  double period_objective_ = 0.0;
  std::vector<PeriodDiagnostics> periods_;
  SlotTrace last_;

  std::mt19937_64 arrival_rng_;
  std::mt19937_64 service_rng_;
};

/// Runs `horizon` slots with the given seed. When `trace` is set it is called
/// after every slot.
MetricsReport run_simulation(const SimConfig& config, std::uint64_t seed, Slot horizon,
                             const std::function<void(const Simulator&)>& trace = {});

}  // namespace qflo

#endif  // QFLO_SIM_ENGINE_HPP
