#ifndef QFLO_CONFIG_HPP
#define QFLO_CONFIG_HPP

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "qflo/sim_config.hpp"
#include "qflo/sim_engine.hpp"

namespace qflo {

/// Parses a YAML configuration document, applies defaults, derives node
/// interference sets and validates. Unknown keys and malformed values raise
/// ConfigError naming the key path.
SimConfig parse_config(std::string_view text);
SimConfig load_config(const std::filesystem::path& path);

enum class ExportFormat { kCsv, kJson };

/// Per-flow table, one row per flow in ascending id order.
std::string metrics_to_csv(const MetricsReport& report);
std::string metrics_to_json(const MetricsReport& report, const std::map<std::string, std::string>& provenance = {});
MetricsReport metrics_from_json(std::string_view text);

/// Writes the report; CSV gets provenance as leading "# key=value" lines.
/// Throws std::runtime_error when the path cannot be written.
void export_metrics(const MetricsReport& report, ExportFormat format, const std::filesystem::path& out,
                    const std::map<std::string, std::string>& provenance = {});

void write_text_file(const std::filesystem::path& out, const std::string& text);

}  // namespace qflo

#endif  // QFLO_CONFIG_HPP
