#include "doctest.h"

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <sstream>

#include "qflo/sim_engine.hpp"
#include "support.hpp"

using namespace qflo;

namespace {

SimConfig single_link(double lambda, double rate, int safety_stock, const std::string& qos = "") {
  std::ostringstream os;
  os << R"(network:
  nodes:
    - {id: 0, x: 0.2, y: 0.5}
    - {id: 1, x: 0.8, y: 0.5}
  links:
    - [0, 1]
  flows:
    - destination: 1
      sources:
        - {node: 0, rate_pkts_per_slot: )"
     << lambda << R"(}
      routes:
        - [0, 1]
)" << qos
     << "channel:\n  fixed_rate: " << rate << "\ncontrol:\n  safety_stock_pkts: " << safety_stock << "\n";
  return parse_config(os.str());
}

// Minimal single-queue slot simulator: Poisson arrivals, then up to `service`
// head-of-line departures sized from the start-of-slot length above q_bar.
double brute_force_mean_delay(double lambda, std::int64_t service, std::int64_t q_bar, std::int64_t slots,
                              std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  std::poisson_distribution<int> arrivals(lambda);
  std::deque<std::int64_t> queue;
  double delay_sum = 0.0;
  std::int64_t served = 0;
  for (std::int64_t t = 0; t < slots; ++t) {
    const auto start = static_cast<std::int64_t>(queue.size());
    for (int a = arrivals(rng); a > 0; --a) queue.push_back(t);
    const auto n = start > q_bar ? std::min(service, start - q_bar) : 0;
    for (std::int64_t i = 0; i < n; ++i) {
      delay_sum += static_cast<double>(t - queue.front());
      queue.pop_front();
      ++served;
    }
  }
  return delay_sum / static_cast<double>(served);
}

}  // namespace

TEST_CASE("no arrivals: nothing moves") {
  auto cfg = single_link(0.0, 1.5, 5);
  Simulator sim(cfg, 1);
  for (int t = 0; t < 50; ++t) sim.step();
  CHECK(sim.now() == 50);
  CHECK(sim.packets_created() == 0);
  CHECK(sim.queue_lengths() == std::vector<std::int64_t>{0});
  const auto r = sim.report();
  REQUIRE(r.flows.size() == 1);
  CHECK(r.flows[0].arrived() == 0);
  CHECK_FALSE(r.flows[0].mean_delay());
}

TEST_CASE("horizon zero gives an empty report") {
  const auto r = run_simulation(qflo::test::sample_config(), 1, 0);
  CHECK(r.horizon == 0);
  CHECK(r.periods.empty());
  for (const auto& f : r.flows) {
    CHECK(f.created == 0);
    CHECK(f.arrived() == 0);
  }
}

TEST_CASE("service is capped by the rate floor and the safety stock") {
  auto cfg = single_link(3.0, 2.5, 5);
  Simulator sim(cfg, 4);
  int capped_at_two = 0, capped_by_stock = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto before = sim.queue_lengths()[0];
    const auto delivered = sim.packets_delivered();
    sim.step();
    const auto moved = sim.packets_delivered() - delivered;
    const auto expected = before > 5 ? std::min<std::int64_t>(2, before - 5) : 0;
    REQUIRE(moved == expected);
    capped_at_two += before >= 10 ? 1 : 0;
    capped_by_stock += before == 6 ? 1 : 0;
    REQUIRE(sim.queue_lengths()[0] >= std::min<std::int64_t>(before, 5));
  }
  CHECK(capped_at_two > 0);
  CHECK(capped_by_stock > 0);
}

TEST_CASE("single link matches an independent slot simulator") {
  for (int q_bar : {0, 5}) {
    const double lambda = 0.7;
    const auto report = run_simulation(single_link(lambda, 1.4, q_bar), 3, 1000000);
    const double oracle = brute_force_mean_delay(lambda, 1, q_bar, 1000000, 99);
    REQUIRE(report.flows[0].mean_delay());
    CHECK(*report.flows[0].mean_delay() == doctest::Approx(oracle).epsilon(0.10));
  }
}

TEST_CASE("hard deadline: late packets are dropped at the destination") {
  const std::string qos = "      qos: {kind: hard_deadline, deadline_slots: 4, drop_ratio_target: 0.02}\n";
  const auto r = run_simulation(single_link(0.9, 1.2, 0, qos), 8, 20000);
  const auto& f = r.flows[0];
  std::int64_t late = 0, on_time = 0, sum = 0;
  for (const auto& [delay, count] : f.delay_histogram) {
    (delay > 4 ? late : on_time) += count;
    sum += delay * count;
  }
  CHECK(late > 0);
  CHECK(f.dropped == late);
  CHECK(f.delivered == on_time);
  CHECK(f.delay_sum == sum);
  CHECK(*f.drop_ratio() == doctest::Approx(static_cast<double>(late) / static_cast<double>(late + on_time)));
}

TEST_CASE("flow statistics") {
  MetricsReport r;
  FlowMetrics a;
  a.flow = 7;
  a.delivered = 3;
  a.delay_sum = 60;  // delays 10, 20, 30
  FlowMetrics b;
  b.flow = 8;
  b.delivered = 98;
  b.dropped = 2;
  b.delay_sum = 100;
  FlowMetrics c;
  c.flow = 9;
  r.flows = {a, b, c};
  CHECK(*flow_statistics(r, 7).first == 20.0);
  CHECK(*flow_statistics(r, 8).second == doctest::Approx(0.02));
  CHECK_FALSE(flow_statistics(r, 9).first);
  CHECK_FALSE(flow_statistics(r, 9).second);
  CHECK_THROWS_AS(flow_statistics(r, 3), std::invalid_argument);
}

TEST_CASE("sample network: invariants hold every slot") {
  auto cfg = qflo::test::sample_config();
  Simulator sim(cfg, 2);
  const auto& spec = sim.config().network;
  const auto stock = cfg.control.safety_stock;
  for (int t = 0; t < 5000; ++t) {
    const auto before = sim.queue_lengths();
    sim.step();
    const auto after = sim.queue_lengths();
    REQUIRE(after == sim.bookkeeping_lengths());
    REQUIRE(sim.packets_created() == sim.packets_queued() + sim.packets_delivered() + sim.packets_dropped());
    // only arrivals can lift a queue, transmissions never dig below the stock
    for (std::size_t q = 0; q < after.size(); ++q) REQUIRE(after[q] >= std::min(before[q], stock));
    const auto& links = sim.last_slot().transmitted;
    for (const auto& set : spec.interference_sets) {
      int active = 0;
      for (auto l : links) active += std::count(set.begin(), set.end(), l) ? 1 : 0;
      REQUIRE(active <= 1);
    }
  }
  CHECK(sim.packets_delivered() > 0);
}

TEST_CASE("runs are deterministic in config and seed") {
  const auto cfg = qflo::test::sample_config();
  const auto a = run_simulation(cfg, 5, 3000);
  const auto b = run_simulation(cfg, 5, 3000);
  CHECK(a == b);
  CHECK_FALSE(a == run_simulation(cfg, 6, 3000));
}

TEST_CASE("sample network at ten iterations: flow 8 delay near 13 slots") {
  auto cfg = qflo::test::sample_config();
  for (auto& f : cfg.network.flows) f.qos.kind = QosKind::kNone;
  cfg.optimizer.cycles = 10;
  double sum = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) sum += *flow_statistics(run_simulation(cfg, seed, 100000), 8).first;
  const double mean = sum / 3.0;
  MESSAGE("flow 8 mean delay at 10 iterations: " << mean);
  CHECK(mean >= 13.0 * 0.25);
  CHECK(mean <= 13.0 * 1.75);
}

TEST_CASE("review periods follow the backlog") {
  auto cfg = qflo::test::sample_config();
  cfg.run.oracle_gap = false;
  const auto r = run_simulation(cfg, 1, 2000);
  REQUIRE(!r.periods.empty());
  CHECK(r.periods.front().start == 0);
  CHECK(r.periods.front().length == 1);  // empty network at slot 0
  Slot covered = 0;
  for (const auto& p : r.periods) {
    CHECK(p.start == covered);
    CHECK(p.length >= 1);
    covered += p.length;
  }
  CHECK(covered >= 2000);
}

TEST_CASE("oracle gap is reported when requested") {
  auto cfg = single_link(0.5, 1.4, 0);
  cfg.run.oracle_gap = true;
  const auto r = run_simulation(cfg, 1, 200);
  for (const auto& p : r.periods) {
    REQUIRE(p.oracle_gap);
    CHECK(*p.oracle_gap >= -1e-9);
  }
}
