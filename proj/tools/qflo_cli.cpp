// qflo: run a single configuration, a named experiment preset, or the
// optimizer-vs-oracle check.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "qflo/config.hpp"
#include "qflo/experiment.hpp"
#include "qflo/oracle_check.hpp"
#include "qflo/sim_engine.hpp"

namespace {

void write_trace_line(std::ostream& os, const qflo::Simulator& sim) {
  const auto& slot = sim.last_slot();
  os << slot.slot << ',' << (slot.reviewed ? 1 : 0) << ',' << slot.objective << ',';
  for (std::size_t i = 0; i < slot.scheduled.size(); ++i) os << (i ? " " : "") << slot.scheduled[i];
  os << ',';
  for (std::size_t i = 0; i < slot.queue_lengths.size(); ++i) os << (i ? " " : "") << slot.queue_lengths[i];
  os << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-review QoS scheduling simulator for multihop wireless networks"};
  app.require_subcommand(1);

  std::string config_path = std::string(QFLO_PRESET_DIR) + "/sample_network.yaml";
  std::string out_path;
  std::string format = "csv";
  std::string trace_path;
  std::vector<std::uint64_t> seeds;
  std::optional<std::int64_t> horizon;
  unsigned workers = 1;

  auto* run = app.add_subcommand("run", "simulate one configuration and export its metrics");
  run->add_option("--config", config_path, "YAML configuration file")->required();
  run->add_option("--seed", seeds, "seed (first value used; default: first seed in config)");
  run->add_option("--horizon", horizon, "number of slots");
  run->add_option("--out", out_path, "output file (default: stdout)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--trace", trace_path, "write a per-slot trace (CSV) to this file");

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "run a named experiment grid");
  preset->add_option("name", preset_name, "fig3b-sweep, table1, table2 or custom")
      ->required()
      ->check(CLI::IsMember(qflo::preset_names()));
  preset->add_option("--config", config_path, "base configuration (default: bundled sample network)");
  preset->add_option("--seed", seeds, "replication seeds (default: config run.seeds)");
  preset->add_option("--horizon", horizon, "number of slots per run");
  preset->add_option("--out", out_path, "output directory")->required();
  preset->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);

  std::uint64_t check_seed = 1;
  std::size_t instances = 200;
  int cycles = 50;
  auto* check = app.add_subcommand("oracle-check", "compare the incremental solver with the exact LP oracle");
  check->add_option("--seed", check_seed, "instance generator seed");
  check->add_option("--instances", instances, "number of random instances");
  check->add_option("--cycles", cycles, "solver passes over K")->check(CLI::PositiveNumber);
  check->add_option("--out", out_path, "per-instance CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = qflo::load_config(config_path);
      const std::uint64_t seed = seeds.empty() ? cfg.run.seeds.front() : seeds.front();
      const auto slots = horizon.value_or(cfg.run.horizon);
      std::ofstream trace;
      std::function<void(const qflo::Simulator&)> hook;
      if (!trace_path.empty()) {
        cfg.run.trace = true;
        trace.open(trace_path);
        if (!trace) throw std::runtime_error("cannot write " + trace_path);
        trace << "slot,reviewed,objective,scheduled_coordinates,queue_lengths\n";
        hook = [&](const qflo::Simulator& sim) { write_trace_line(trace, sim); };
      }
      const auto report = qflo::run_simulation(cfg, seed, slots, hook);
      const auto fmt = format == "json" ? qflo::ExportFormat::kJson : qflo::ExportFormat::kCsv;
      const std::map<std::string, std::string> provenance{
          {"config", config_path}, {"seed", std::to_string(seed)}, {"horizon_slots", std::to_string(slots)}};
      if (out_path.empty()) {
        if (fmt == qflo::ExportFormat::kJson) {
          std::cout << qflo::metrics_to_json(report, provenance);
        } else {
          for (const auto& [k, v] : provenance) std::cout << "# " << k << '=' << v << '\n';
          std::cout << qflo::metrics_to_csv(report);
        }
      } else {
        qflo::export_metrics(report, fmt, out_path, provenance);
      }
      return 0;
    }

    if (*preset) {
      const auto cfg = qflo::load_config(config_path);
      qflo::ExperimentOptions options;
      options.out_dir = out_path;
      options.workers = workers;
      options.horizon = horizon;
      if (!seeds.empty()) options.seeds = seeds;
      options.config_source = config_path;
      return qflo::run_experiment(qflo::make_preset(preset_name), cfg, options);
    }

    if (*check) {
      const auto results = qflo::oracle_check(check_seed, instances, cycles);
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot write " + out_path);
      }
      std::ostream& os = out_path.empty() ? std::cout : file;
      os << "instance,dimension,oracle,solver,gap,c3,allowance,within_allowance,dominated\n";
      std::size_t failures = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const bool ok = r.within_allowance() && r.dominated();
        failures += ok ? 0 : 1;
        os << i << ',' << r.dimension << ',' << r.oracle << ',' << r.solver << ',' << r.gap() << ',' << r.c3 << ','
           << r.allowance() << ',' << r.within_allowance() << ',' << r.dominated() << '\n';
      }
      std::cerr << results.size() - failures << "/" << results.size() << " instances within allowance\n";
      return failures == 0 ? 0 : 2;
    }
  } catch (const qflo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
