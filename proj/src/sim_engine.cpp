#include "qflo/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qflo {

namespace {

constexpr std::uint32_t kArrivalStream = 0x61727276;  // "arrv"
constexpr std::uint32_t kServiceStream = 0x73657276;  // "serv"

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

}  // namespace

std::optional<double> FlowMetrics::mean_delay() const {
  if (arrived() == 0) return std::nullopt;
  return static_cast<double>(delay_sum) / static_cast<double>(arrived());
}

std::optional<double> FlowMetrics::drop_ratio() const {
  if (arrived() == 0) return std::nullopt;
  return static_cast<double>(dropped) / static_cast<double>(arrived());
}

std::pair<std::optional<double>, std::optional<double>> flow_statistics(const MetricsReport& report, FlowId flow) {
  for (const auto& f : report.flows)
    if (f.flow == flow) return {f.mean_delay(), f.drop_ratio()};
  throw std::invalid_argument("flow_statistics: unknown flow " + std::to_string(flow));
}

Simulator::Simulator(SimConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      arrival_rng_(make_stream(seed, kArrivalStream)),
      service_rng_(make_stream(seed, kServiceStream)) {
  validate(config_);
  const auto& net = config_.network;
  index_ = build_link_flow_index(net);
  constraints_ = build_constraints(index_, net);
  conflicts_ = link_conflicts(net);

  const std::size_t n_flows = net.flows.size();
  std::map<FlowId, std::size_t> flow_pos;
  for (std::size_t f = 0; f < n_flows; ++f) flow_pos[net.flows[f].id()] = f;
  for (std::size_t k = 0; k < index_.size(); ++k) flow_of_coordinate_.push_back(flow_pos.at(index_[k].flow));

  // One queue per (node, flow) for every node a route of the flow leaves from.
  queue_lookup_.assign(net.nodes.size() * n_flows, -1);
  std::vector<std::pair<NodeId, std::size_t>> present;
  for (std::size_t f = 0; f < n_flows; ++f)
    for (const auto& route : net.flows[f].routes)
      for (std::size_t h = 0; h + 1 < route.size(); ++h) present.emplace_back(route[h], f);
  std::sort(present.begin(), present.end(), [&](const auto& a, const auto& b) {
    return std::make_pair(a.first, net.flows[a.second].id()) < std::make_pair(b.first, net.flows[b.second].id());
  });
  present.erase(std::unique(present.begin(), present.end()), present.end());
  for (const auto& [node, f] : present) {
    queue_lookup_[static_cast<std::size_t>(node) * n_flows + f] = static_cast<std::ptrdiff_t>(queues_.size());
    QueueState q;
    q.node = node;
    q.flow = f;
    queues_.push_back(std::move(q));
    keys_.emplace_back(node, net.flows[f].id());
  }

  flow_metrics_.resize(n_flows);
  for (std::size_t f = 0; f < n_flows; ++f) {
    flow_metrics_[f].flow = net.flows[f].id();
    qos_[net.flows[f].id()] = {};
  }
  clock_.a1 = config_.control.a1;
  clock_.a2 = config_.control.a2;
}

std::size_t Simulator::queue_of(NodeId node, std::size_t flow) const {
  const auto q = queue_lookup_[static_cast<std::size_t>(node) * config_.network.flows.size() + flow];
  if (q < 0) throw std::logic_error("no queue for node " + std::to_string(node));
  return static_cast<std::size_t>(q);
}

std::int64_t Simulator::service_capacity(double rate) {
  const double whole = std::floor(rate);
  auto packets = static_cast<std::int64_t>(whole);
  if (config_.control.rounding == RateRounding::kProbabilistic) {
    std::bernoulli_distribution extra(rate - whole);
    if (extra(service_rng_)) ++packets;
  }
  return packets;
}

void Simulator::review() {
  const auto& net = config_.network;
  rates_ = compute_rates(draw_gains(net, config_.channel, period_, seed_), config_.channel);
  const auto theta = update_qos_weights(net.flows, qos_);

  const auto n = static_cast<Eigen::Index>(index_.size());
  WeightVector<double> w{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& e = index_[static_cast<std::size_t>(k)];
    const auto& flow = net.flows[flow_of_coordinate_[static_cast<std::size_t>(k)]];
    const auto backlog = static_cast<double>(queues_[queue_of(e.from, flow_of_coordinate_[static_cast<std::size_t>(k)])].packets.size());
    w.w(k) = theta.at(flow.id()) * backlog;
    w.mu(k) = rates_.rates[e.link];
    w.theta_max(k) = flow.qos.kind == QosKind::kNone ? 1.0 : flow.qos.theta_hat;
  }
  auto [s, diag] = solve_review_optimization(w, constraints_, config_.optimizer);

  double backlog = 0.0;
  for (const auto& q : queues_) backlog += static_cast<double>(q.packets.size());
  clock_.prev = now_;
  clock_.next = next_review_time(now_, backlog, clock_.a1, clock_.a2);
  schedule_ = build_slot_schedule(s, clock_.prev, clock_.next, index_, conflicts_);

  PeriodDiagnostics pd;
  pd.start = clock_.prev;
  pd.length = clock_.next - clock_.prev;
  pd.objective = objective(s, w);
  pd.c3 = diag.c3;
  pd.projections = static_cast<std::int64_t>(diag.projections);
  pd.messages = static_cast<std::int64_t>(diag.messages);
  if (config_.run.oracle_gap && index_.size() <= kOracleMaxDimension)
    pd.oracle_gap = oracle_solve(w, constraints_).second - pd.objective;
  period_objective_ = pd.objective;
  periods_.push_back(pd);
  ++period_;
}

void Simulator::step() {
  const auto& net = config_.network;
  last_ = SlotTrace{};
  last_.slot = now_;
  if (now_ == clock_.next) {
    review();
    last_.reviewed = true;
  }
  last_.objective = period_objective_;

  std::vector<std::int64_t> start_len(queues_.size());
  for (std::size_t q = 0; q < queues_.size(); ++q) start_len[q] = static_cast<std::int64_t>(queues_[q].packets.size());

  for (std::size_t f = 0; f < net.flows.size(); ++f) {
    for (const auto& src : net.flows[f].sources) {
      if (src.arrival_rate <= 0.0) continue;
      std::poisson_distribution<std::int64_t> arrivals(src.arrival_rate);
      const auto count = arrivals(arrival_rng_);
      auto& q = queues_[queue_of(src.node, f)];
      for (std::int64_t p = 0; p < count; ++p) q.packets.push_back({now_, 0});
      q.arrivals += count;
      flow_metrics_[f].created += count;
    }
  }

  last_.scheduled = schedule_.at(now_);
  for (auto k : last_.scheduled) {
    const auto& e = index_[k];
    const auto f = flow_of_coordinate_[k];
    const auto qi = queue_of(e.from, f);
    if (!safety_stock_gate(start_len[qi], config_.control.safety_stock)) continue;
    const auto cap = service_capacity(rates_.rates[e.link]);
    const auto count = std::min(cap, start_len[qi] - config_.control.safety_stock);
    if (count <= 0) continue;

    auto& from = queues_[qi];
    const auto& flow = net.flows[f];
    auto& metrics = flow_metrics_[f];
    auto& qos = qos_[flow.id()];
    for (std::int64_t p = 0; p < count; ++p) {
      Packet pkt = from.packets.front();
      from.packets.pop_front();
      ++pkt.hops;
      if (e.to == flow.destination) {
        const auto delay = now_ - pkt.created_at;
        if (delay < pkt.hops) throw std::logic_error("packet delay below hop count");
        const bool late = flow.qos.kind == QosKind::kHardDeadline &&
                          static_cast<double>(delay) > flow.qos.deadline_slots;
        ++(late ? metrics.dropped : metrics.delivered);
        metrics.delay_sum += delay;
        ++metrics.delay_histogram[delay];
        ++qos.arrived;
        qos.delay_sum += delay;
        if (late) ++qos.late;
      } else {
        auto& to = queues_[queue_of(e.to, f)];
        to.packets.push_back(pkt);
        ++to.received;
      }
    }
    from.transmitted += count;
    last_.transmitted.push_back(e.link);
  }
  std::sort(last_.transmitted.begin(), last_.transmitted.end());
  last_.transmitted.erase(std::unique(last_.transmitted.begin(), last_.transmitted.end()), last_.transmitted.end());

  for (auto& q : queues_) q.length_sum += static_cast<double>(q.packets.size());
  ++now_;
  if (config_.run.trace) last_.queue_lengths = queue_lengths();
}

std::vector<std::int64_t> Simulator::queue_lengths() const {
  std::vector<std::int64_t> out;
  out.reserve(queues_.size());
  for (const auto& q : queues_) out.push_back(static_cast<std::int64_t>(q.packets.size()));
  return out;
}

std::vector<std::int64_t> Simulator::bookkeeping_lengths() const {
  std::vector<std::int64_t> out;
  out.reserve(queues_.size());
  for (const auto& q : queues_) out.push_back(q.arrivals + q.received - q.transmitted);
  return out;
}

std::int64_t Simulator::packets_created() const {
  return std::accumulate(flow_metrics_.begin(), flow_metrics_.end(), std::int64_t{0},
                         [](std::int64_t acc, const FlowMetrics& m) { return acc + m.created; });
}

std::int64_t Simulator::packets_queued() const {
  return std::accumulate(queues_.begin(), queues_.end(), std::int64_t{0},
                         [](std::int64_t acc, const QueueState& q) { return acc + static_cast<std::int64_t>(q.packets.size()); });
}

std::int64_t Simulator::packets_delivered() const {
  return std::accumulate(flow_metrics_.begin(), flow_metrics_.end(), std::int64_t{0},
                         [](std::int64_t acc, const FlowMetrics& m) { return acc + m.delivered; });
}

std::int64_t Simulator::packets_dropped() const {
  return std::accumulate(flow_metrics_.begin(), flow_metrics_.end(), std::int64_t{0},
                         [](std::int64_t acc, const FlowMetrics& m) { return acc + m.dropped; });
}

MetricsReport Simulator::report() const {
  MetricsReport r;
  r.seed = seed_;
  r.horizon = now_;
  r.flows = flow_metrics_;
  std::sort(r.flows.begin(), r.flows.end(), [](const auto& a, const auto& b) { return a.flow < b.flow; });
  for (std::size_t q = 0; q < queues_.size(); ++q) {
    QueueMetrics m;
    m.node = keys_[q].first;
    m.flow = keys_[q].second;
    m.mean_length = now_ > 0 ? queues_[q].length_sum / static_cast<double>(now_) : 0.0;
    m.final_length = static_cast<std::int64_t>(queues_[q].packets.size());
    r.queues.push_back(m);
  }
  r.periods = periods_;
  return r;
}

MetricsReport run_simulation(const SimConfig& config, std::uint64_t seed, Slot horizon,
                             const std::function<void(const Simulator&)>& trace) {
  Simulator sim(config, seed);
  for (Slot t = 0; t < horizon; ++t) {
    sim.step();
    if (trace) trace(sim);
  }
  return sim.report();
}

}  // namespace qflo
