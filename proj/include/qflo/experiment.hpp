#ifndef QFLO_EXPERIMENT_HPP
#define QFLO_EXPERIMENT_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qflo/sim_config.hpp"
#include "qflo/sim_engine.hpp"

namespace qflo {

struct GridPoint {
  std::string label;
  std::map<std::string, std::string> params;
  std::function<void(SimConfig&)> apply;
};

struct ExperimentPreset {
  std::string name;
  std::vector<GridPoint> grid;
};

/// Named experiments: fig3b-sweep (optimizer cycles 1..20, no QoS), table1
/// (two mean-delay flows, theta_hat 6/7 x four target pairs), table2 (hard
/// deadline on flow 7, mean delay on flow 8), custom (the config as given).
ExperimentPreset make_preset(std::string_view name);
const std::vector<std::string>& preset_names();

struct ExperimentOptions {
  std::filesystem::path out_dir;
  unsigned workers = 1;
  std::optional<Slot> horizon;                       // default: config run.horizon_slots
  std::optional<std::vector<std::uint64_t>> seeds;   // default: config run.seeds
  std::string config_source;                         // recorded in output headers
};

struct RunRecord {
  std::size_t point = 0;
  std::uint64_t seed = 0;
  MetricsReport report;
};

/// Every grid point x seed, ordered by (point, seed). Runs are independent and
/// spread over `workers` threads.
std::vector<RunRecord> run_grid(const ExperimentPreset& preset, const SimConfig& base, Slot horizon,
                                const std::vector<std::uint64_t>& seeds, unsigned workers);

struct FlowAggregate {
  FlowId flow = 0;
  std::size_t replications = 0;              // runs with at least one arrival
  std::optional<double> mean_delay;          // mean of per-run means
  std::optional<double> drop_ratio;
};

std::vector<FlowAggregate> aggregate(const std::vector<RunRecord>& runs, std::size_t point);

std::string runs_csv(const ExperimentPreset& preset, const std::vector<RunRecord>& runs);
std::string summary_csv(const ExperimentPreset& preset, const std::vector<RunRecord>& runs);
std::string summary_json(const ExperimentPreset& preset, const std::vector<RunRecord>& runs, Slot horizon,
                         const std::vector<std::uint64_t>& seeds, const std::string& config_source);

/// Runs the preset and writes runs.csv, summary.csv and summary.json into
/// options.out_dir. Returns 0 on success, 2 when output cannot be written.
int run_experiment(const ExperimentPreset& preset, const SimConfig& base, const ExperimentOptions& options);

}  // namespace qflo

#endif  // QFLO_EXPERIMENT_HPP
