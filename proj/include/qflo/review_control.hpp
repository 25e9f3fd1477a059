#ifndef QFLO_REVIEW_CONTROL_HPP
#define QFLO_REVIEW_CONTROL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

#include "qflo/net_model.hpp"

namespace qflo {

using Slot = std::int64_t;

struct ReviewClock {
  Slot prev = 0;
  Slot next = 0;
  double a1 = 1.0;
  double a2 = 1.0;
};

/// t + max(1, round(a1 * ln(1 + a2 * backlog))).
Slot next_review_time(Slot t, double total_backlog, double a1, double a2);

/// Destination-side statistics of one flow. `arrived` counts every packet that
/// reached the destination, on time or not.
struct FlowQosStats {
  std::int64_t arrived = 0;
  std::int64_t delay_sum = 0;
  std::int64_t late = 0;
};

using QosState = std::map<FlowId, FlowQosStats>;

/// theta^f for every flow: theta_hat while the flow's QoS criterion is
/// violated (strictly), 1 otherwise or before any delivery.
std::map<FlowId, double> update_qos_weights(const std::vector<Flow>& flows, const QosState& state);

/// Activations over [begin, end): active[t - begin] lists the coordinates of K
/// transmitting in slot t.
struct SlotSchedule {
  Slot begin = 0;
  Slot end = 0;
  std::vector<std::vector<std::size_t>> active;
  std::vector<std::int64_t> assigned;  // slots granted per coordinate

  Slot length() const { return end - begin; }
  const std::vector<std::size_t>& at(Slot t) const { return active.at(static_cast<std::size_t>(t - begin)); }
};

/// floor(fraction * window), plus one when the remainder exceeds one half.
std::int64_t slot_quota(double fraction, Slot window);

/// Greedy realization of time-fractions: coordinates in K order (transmitter,
/// receiver, flow), slots ascending; a slot is taken when the coordinate is
/// under quota and no conflicting link is already active in it.
SlotSchedule build_slot_schedule(const Eigen::VectorXd& s, Slot begin, Slot end, const LinkFlowIndex& index,
                                 const std::vector<std::vector<std::size_t>>& conflicts);

inline bool safety_stock_gate(std::int64_t queue, std::int64_t safety_stock) { return queue > safety_stock; }

}  // namespace qflo

#endif  // QFLO_REVIEW_CONTROL_HPP
