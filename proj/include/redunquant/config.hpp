#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redunquant/densities.hpp"
#include "redunquant/liouville_flow.hpp"
#include "redunquant/redundancy.hpp"
#include "redunquant/reliable_gains.hpp"
#include "redunquant/system_model.hpp"

namespace redunquant {

inline constexpr const char* kSchemaVersion = "1";

/// Everything one CLI invocation needs, validated up front.
struct ProblemSpec {
  explicit ProblemSpec(MultiChannelSystem sys) : system(std::move(sys)) {}

  MultiChannelSystem system;
  std::optional<GainSet> gains;
  std::vector<double> epsilon;  // empty when absent
  bool epsilon_is_list = false;
  std::optional<GaussianDensity> rho0;
  std::vector<double> times;
  std::uint64_t seed = 42;
  Method method = Method::ClosedForm;
  std::optional<CellGrid> grid;
  std::size_t mode = 0;
  MonteCarloOptions monte_carlo;
  SynthesisOptions synthesis;
  AvgNormalization normalization = AvgNormalization::Paper;
  JacobianConvention jacobian = JacobianConvention::MassConserving;

  /// Names of fields that were filled from defaults.
  std::vector<std::string> defaults_applied;

  /// Normalized echo of the configuration (defaults included).
  nlohmann::json canonical() const;
};

/// Parses and validates a JSON configuration. Throws ConfigSyntaxError (with
/// line/column) on malformed JSON and ConfigValidationError naming the
/// offending field otherwise.
ProblemSpec parse_config_text(const std::string& text);
ProblemSpec parse_config(const std::filesystem::path& path);

/// Row-major nested arrays <-> matrices.
nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& field);

}  // namespace redunquant
