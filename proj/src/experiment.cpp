#include "qflo/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qflo/config.hpp"

namespace qflo {

namespace {

Flow& flow_by_id(SimConfig& cfg, FlowId id) {
  for (auto& f : cfg.network.flows)
    if (f.id() == id) return f;
  throw ConfigError("preset needs flow " + std::to_string(id) + " in the network");
}

void clear_qos(SimConfig& cfg) {
  for (auto& f : cfg.network.flows) f.qos.kind = QosKind::kNone;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string csv_params(const GridPoint& p) {
  std::string out;
  for (const auto& [k, v] : p.params) out += (out.empty() ? "" : ";") + k + "=" + v;
  return out;
}

GridPoint mean_delay_pair(double theta, double target7, double target8) {
  GridPoint p;
  p.params = {{"theta_hat", num(theta)}, {"target_flow7_slots", num(target7)}, {"target_flow8_slots", num(target8)}};
  p.label = "theta=" + std::to_string(static_cast<int>(theta)) + " targets=" + std::to_string(static_cast<int>(target7)) +
            "/" + std::to_string(static_cast<int>(target8));
  p.apply = [=](SimConfig& cfg) {
    clear_qos(cfg);
    cfg.optimizer.cycles = 8;
    cfg.optimizer.projection_repeats = 10;
    for (auto [id, target] : {std::pair{7, target7}, std::pair{8, target8}}) {
      auto& q = flow_by_id(cfg, id).qos;
      q.kind = QosKind::kMeanDelay;
      q.target_slots = target;
      q.theta_hat = theta;
    }
  };
  return p;
}

GridPoint deadline_pair(double deadline7, double target8) {
  GridPoint p;
  p.params = {{"deadline_flow7_slots", num(deadline7)}, {"drop_ratio_target_flow7", num(0.02)},
              {"target_flow8_slots", num(target8)}};
  p.label = "deadline=" + std::to_string(static_cast<int>(deadline7)) + " target8=" + std::to_string(static_cast<int>(target8));
  p.apply = [=](SimConfig& cfg) {
    clear_qos(cfg);
    cfg.optimizer.cycles = 8;
    cfg.optimizer.projection_repeats = 10;
    auto& q7 = flow_by_id(cfg, 7).qos;
    q7.kind = QosKind::kHardDeadline;
    q7.deadline_slots = deadline7;
    q7.drop_ratio_target = 0.02;
    q7.theta_hat = 2.0;
    auto& q8 = flow_by_id(cfg, 8).qos;
    q8.kind = QosKind::kMeanDelay;
    q8.target_slots = target8;
    q8.theta_hat = 1.5;
  };
  return p;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig3b-sweep", "table1", "table2", "custom"};
  return names;
}

ExperimentPreset make_preset(std::string_view name) {
  ExperimentPreset preset;
  preset.name = std::string(name);
  if (name == "fig3b-sweep") {
    for (int cycles : {1, 2, 3, 4, 5, 7, 10, 12, 15, 20}) {
      GridPoint p;
      p.label = "iterations=" + std::to_string(cycles);
      p.params = {{"iterations", std::to_string(cycles)}};
      p.apply = [cycles](SimConfig& cfg) {
        clear_qos(cfg);
        cfg.optimizer.cycles = cycles;
      };
      preset.grid.push_back(std::move(p));
    }
  } else if (name == "table1") {
    for (double theta : {6.0, 7.0})
      for (auto [t7, t8] : {std::pair{50.0, 30.0}, {40.0, 25.0}, {30.0, 20.0}, {25.0, 15.0}})
        preset.grid.push_back(mean_delay_pair(theta, t7, t8));
  } else if (name == "table2") {
    for (auto [d7, t8] : {std::pair{180.0, 50.0}, {180.0, 40.0}, {180.0, 35.0}, {160.0, 45.0}, {140.0, 30.0}, {120.0, 35.0}})
      preset.grid.push_back(deadline_pair(d7, t8));
  } else if (name == "custom") {
    preset.grid.push_back({"custom", {}, [](SimConfig&) {}});
  } else {
    throw ConfigError("preset: unknown name '" + std::string(name) + "'");
  }
  return preset;
}

std::vector<RunRecord> run_grid(const ExperimentPreset& preset, const SimConfig& base, Slot horizon,
                                const std::vector<std::uint64_t>& seeds, unsigned workers) {
  std::vector<SimConfig> configs;
  for (const auto& p : preset.grid) {
    SimConfig cfg = base;
    p.apply(cfg);
    validate(cfg);
    configs.push_back(std::move(cfg));
  }

  std::vector<RunRecord> runs(configs.size() * seeds.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    runs[i].point = i / seeds.size();
    runs[i].seed = seeds[i % seeds.size()];
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        runs[i].report = run_simulation(configs[runs[i].point], runs[i].seed, horizon);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return runs;
}

std::vector<FlowAggregate> aggregate(const std::vector<RunRecord>& runs, std::size_t point) {
  std::map<FlowId, FlowAggregate> acc;
  std::map<FlowId, double> delay_sum, drop_sum;
  for (const auto& run : runs) {
    if (run.point != point) continue;
    for (const auto& f : run.report.flows) {
      auto& a = acc[f.flow];
      a.flow = f.flow;
      if (!f.mean_delay()) continue;
      ++a.replications;
      delay_sum[f.flow] += *f.mean_delay();
      drop_sum[f.flow] += *f.drop_ratio();
    }
  }
  std::vector<FlowAggregate> out;
  for (auto& [id, a] : acc) {
    if (a.replications > 0) {
      a.mean_delay = delay_sum[id] / static_cast<double>(a.replications);
      a.drop_ratio = drop_sum[id] / static_cast<double>(a.replications);
    }
    out.push_back(a);
  }
  return out;
}

std::string runs_csv(const ExperimentPreset& preset, const std::vector<RunRecord>& runs) {
  std::ostringstream os;
  os << "preset,point,params,seed,flow,created,arrived,mean_delay_slots,drop_ratio,mean_oracle_gap,mean_c3\n";
  for (const auto& run : runs) {
    double gap_sum = 0.0, c3_sum = 0.0;
    std::size_t gaps = 0;
    for (const auto& p : run.report.periods) {
      c3_sum += p.c3;
      if (p.oracle_gap) {
        gap_sum += *p.oracle_gap;
        ++gaps;
      }
    }
    const std::optional<double> gap = gaps ? std::optional(gap_sum / static_cast<double>(gaps)) : std::nullopt;
    const std::optional<double> c3 =
        run.report.periods.empty() ? std::nullopt : std::optional(c3_sum / static_cast<double>(run.report.periods.size()));
    for (const auto& f : run.report.flows)
      os << preset.name << ',' << run.point << ',' << csv_params(preset.grid[run.point]) << ',' << run.seed << ','
         << f.flow << ',' << f.created << ',' << f.arrived() << ',' << opt_num(f.mean_delay()) << ','
         << opt_num(f.drop_ratio()) << ',' << opt_num(gap) << ',' << opt_num(c3) << '\n';
  }
  return os.str();
}

std::string summary_csv(const ExperimentPreset& preset, const std::vector<RunRecord>& runs) {
  std::ostringstream os;
  os << "preset,point,params,flow,replications,mean_delay_slots,drop_ratio\n";
  for (std::size_t p = 0; p < preset.grid.size(); ++p)
    for (const auto& a : aggregate(runs, p))
      os << preset.name << ',' << p << ',' << csv_params(preset.grid[p]) << ',' << a.flow << ',' << a.replications
         << ',' << opt_num(a.mean_delay) << ',' << opt_num(a.drop_ratio) << '\n';
  return os.str();
}

std::string summary_json(const ExperimentPreset& preset, const std::vector<RunRecord>& runs, Slot horizon,
                         const std::vector<std::uint64_t>& seeds, const std::string& config_source) {
  nlohmann::json j;
  j["preset"] = preset.name;
  j["config"] = config_source;
  j["seeds"] = seeds;
  j["horizon_slots"] = horizon;
  j["points"] = nlohmann::json::array();
  for (std::size_t p = 0; p < preset.grid.size(); ++p) {
    nlohmann::json point{{"label", preset.grid[p].label}, {"params", preset.grid[p].params}};
    point["flows"] = nlohmann::json::array();
    for (const auto& a : aggregate(runs, p)) {
      nlohmann::json row{{"flow", a.flow}, {"replications", a.replications}};
      row["mean_delay_slots"] = a.mean_delay ? nlohmann::json(*a.mean_delay) : nlohmann::json(nullptr);
      row["drop_ratio"] = a.drop_ratio ? nlohmann::json(*a.drop_ratio) : nlohmann::json(nullptr);
      point["flows"].push_back(std::move(row));
    }
    j["points"].push_back(std::move(point));
  }
  return j.dump(1) + "\n";
}

int run_experiment(const ExperimentPreset& preset, const SimConfig& base, const ExperimentOptions& options) {
  const Slot horizon = options.horizon.value_or(base.run.horizon);
  const auto seeds = options.seeds.value_or(base.run.seeds);
  const auto runs = run_grid(preset, base, horizon, seeds, options.workers);

  std::string header = "# preset=" + preset.name + "\n# config=" + options.config_source + "\n# seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) header += (i ? " " : "") + std::to_string(seeds[i]);
  header += "\n# horizon_slots=" + std::to_string(horizon) + "\n";
  try {
    std::filesystem::create_directories(options.out_dir);
    write_text_file(options.out_dir / "runs.csv", header + runs_csv(preset, runs));
    write_text_file(options.out_dir / "summary.csv", header + summary_csv(preset, runs));
    write_text_file(options.out_dir / "summary.json", summary_json(preset, runs, horizon, seeds, options.config_source));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace qflo
