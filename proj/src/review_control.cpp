#include "qflo/review_control.hpp"

#include <algorithm>
#include <cmath>

namespace qflo {

Slot next_review_time(Slot t, double total_backlog, double a1, double a2) {
  if (total_backlog < 0.0) throw std::domain_error("next_review_time: negative backlog");
  const auto span = static_cast<Slot>(std::llround(a1 * std::log1p(a2 * total_backlog)));
  return t + std::max<Slot>(1, span);
}

std::map<FlowId, double> update_qos_weights(const std::vector<Flow>& flows, const QosState& state) {
  std::map<FlowId, double> theta;
  for (const auto& flow : flows) {
    double value = 1.0;
    auto it = state.find(flow.id());
    if (it != state.end() && it->second.arrived > 0) {
      const auto& st = it->second;
      const double n = static_cast<double>(st.arrived);
      switch (flow.qos.kind) {
        case QosKind::kMeanDelay:
          if (static_cast<double>(st.delay_sum) / n > flow.qos.target_slots) value = flow.qos.theta_hat;
          break;
        case QosKind::kHardDeadline:
          if (static_cast<double>(st.late) / n > flow.qos.drop_ratio_target) value = flow.qos.theta_hat;
          break;
        case QosKind::kNone:
          break;
      }
    }
    theta[flow.id()] = value;
  }
  return theta;
}

std::int64_t slot_quota(double fraction, Slot window) {
  const double exact = std::max(0.0, fraction) * static_cast<double>(window);
  const double whole = std::floor(exact);
  auto quota = static_cast<std::int64_t>(whole) + (exact - whole > 0.5 ? 1 : 0);
  return std::min<std::int64_t>(quota, window);
}

SlotSchedule build_slot_schedule(const Eigen::VectorXd& s, Slot begin, Slot end, const LinkFlowIndex& index,
                                 const std::vector<std::vector<std::size_t>>& conflicts) {
  SlotSchedule sched;
  sched.begin = begin;
  sched.end = std::max(begin, end);
  const auto window = sched.length();
  sched.active.assign(static_cast<std::size_t>(window), {});
  sched.assigned.assign(index.size(), 0);

  // busy[t][link] marks links transmitting in slot begin + t
  std::vector<std::vector<char>> busy(static_cast<std::size_t>(window), std::vector<char>(conflicts.size(), 0));
  for (std::size_t k = 0; k < index.size(); ++k) {
    const auto quota = slot_quota(s(static_cast<Eigen::Index>(k)), window);
    const auto link = index[k].link;
    for (Slot t = 0; t < window && sched.assigned[k] < quota; ++t) {
      auto& row = busy[static_cast<std::size_t>(t)];
      const bool blocked = std::any_of(conflicts[link].begin(), conflicts[link].end(),
                                       [&](std::size_t other) { return row[other] != 0; });
      if (blocked) continue;
      row[link] = 1;
      sched.active[static_cast<std::size_t>(t)].push_back(k);
      ++sched.assigned[k];
    }
  }
  return sched;
}

}  // namespace qflo
