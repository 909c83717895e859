#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "redunquant/redundancy.hpp"
#include "redunquant/reliable_gains.hpp"

namespace redunquant {

inline constexpr const char* kToolName = "redunquant";
inline constexpr const char* kToolVersion = "0.1.0";

enum class ReportFormat { Structured, Tabular };

using ReportPayload = std::variant<RedundancyReport, SweepTable, ReliabilityReport>;

nlohmann::json to_json(const Bits& b);
nlohmann::json to_json(const RedundancyReport& r);
nlohmann::json to_json(const SweepTable& t);
nlohmann::json to_json(const ReliabilityReport& r);
nlohmann::json to_json(const CellGrid& g);

Bits bits_from_json(const nlohmann::json& j);
RedundancyReport redundancy_report_from_json(const nlohmann::json& j);
SweepTable sweep_table_from_json(const nlohmann::json& j);
ReliabilityReport reliability_report_from_json(const nlohmann::json& j);

/// Pretty JSON with sorted keys and every float rendered with 17
/// significant digits, so identical values always give identical bytes.
std::string render_structured(const nlohmann::json& j);

/// One header row plus one comma-separated row per entry.
std::string render_tabular(const ReportPayload& payload);

/// Writes `contents` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

void emit_report(const ReportPayload& payload, ReportFormat format,
                 const std::filesystem::path& path);

/// Full report envelope written by the CLI.
nlohmann::json report_envelope(const std::string& command,
                               const nlohmann::json& config,
                               nlohmann::json outputs);

/// "sha256:<hex>" of the rendered canonical config.
std::string inputs_digest(const nlohmann::json& config);

/// 17-significant-digit rendering used by both output formats.
std::string format_double(double v);

}  // namespace redunquant
