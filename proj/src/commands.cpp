#include "redunquant/commands.hpp"

#include <chrono>
#include <ostream>
#include <sstream>

#include "redunquant/errors.hpp"
#include "redunquant/info_measures.hpp"
#include "redunquant/report.hpp"
#include "redunquant/stochastic_engine.hpp"

namespace redunquant {

using nlohmann::json;

Command parse_command(const std::string& name) {
  if (name == "verify") return Command::Verify;
  if (name == "synth") return Command::Synth;
  if (name == "redundancy") return Command::Redundancy;
  if (name == "sweep-eps") return Command::SweepEps;
  if (name == "sweep-time") return Command::SweepTime;
  if (name == "simulate") return Command::Simulate;
  if (name == "fp-grid") return Command::FpGrid;
  throw ConfigValidationError("command", "unknown command '" + name + "'");
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Verify: return "verify";
    case Command::Synth: return "synth";
    case Command::Redundancy: return "redundancy";
    case Command::SweepEps: return "sweep-eps";
    case Command::SweepTime: return "sweep-time";
    case Command::Simulate: return "simulate";
    case Command::FpGrid: return "fp-grid";
  }
  return "unknown";
}

void apply_overrides(ProblemSpec& spec, const CliOverrides& o) {
  if (o.method) spec.method = *o.method;
  if (o.seed) {
    spec.seed = *o.seed;
    spec.monte_carlo.seed = *o.seed;
  }
  if (o.paper_literal_jacobian) spec.jacobian = JacobianConvention::PaperLiteral;
  if (o.normalization) spec.normalization = *o.normalization;
  if (o.threads) spec.monte_carlo.threads = *o.threads;
}

namespace {

json gains_to_json(const GainSet& g) {
  json out = json::array();
  for (const auto& k : g.K) out.push_back(matrix_to_json(k));
  return out;
}

double single_epsilon(const ProblemSpec& spec) {
  if (spec.epsilon.empty()) throw ConfigValidationError("epsilon", "required by this command");
  if (spec.epsilon.size() != 1) {
    throw ConfigValidationError("epsilon", "this command needs a single value");
  }
  return spec.epsilon.front();
}

RedundancyOptions redundancy_options(const ProblemSpec& spec) {
  RedundancyOptions o;
  o.normalization = spec.normalization;
  o.mc = spec.monte_carlo;
  o.mc.seed = spec.seed;
  if (spec.grid) {
    o.grid.cells_1d = o.grid.cells_2d = spec.grid->cells.front();
  }
  return o;
}

// Gains from the config, or synthesized when absent.
GainSet resolve_gains(const ProblemSpec& spec, json& outputs) {
  if (spec.gains) {
    outputs["gains_source"] = "config";
    return *spec.gains;
  }
  auto res = synthesize_gains(spec.system, spec.synthesis);
  outputs["gains_source"] = "synthesized";
  outputs["gains"] = gains_to_json(res.gains);
  outputs["synthesis_theta"] = res.theta;
  return res.gains;
}

void write_report(const std::filesystem::path& out_dir, Command cmd,
                  const ProblemSpec& spec, json outputs) {
  const json env = report_envelope(to_string(cmd), spec.canonical(), std::move(outputs));
  write_atomic(out_dir / "report.json", render_structured(env));
}

int run_verify(const ProblemSpec& spec, const std::filesystem::path& out,
               std::ostream& err) {
  if (!spec.gains) throw ConfigValidationError("gains", "required by verify");
  const auto rep = verify_reliable(spec.system, *spec.gains);
  json outputs;
  outputs["reliability"] = to_json(rep);
  write_report(out, Command::Verify, spec, std::move(outputs));
  if (!rep.reliable) {
    err << "gains are not reliable (margin " << format_double(rep.margin) << ")\n";
    return kExitNotReliable;
  }
  return kExitOk;
}

int run_synth(const ProblemSpec& spec, const std::filesystem::path& out) {
  const auto res = synthesize_gains(spec.system, spec.synthesis);
  json outputs;
  outputs["gains"] = gains_to_json(res.gains);
  outputs["theta"] = res.theta;
  outputs["reliability"] = to_json(res.report);
  write_report(out, Command::Synth, spec, std::move(outputs));
  return kExitOk;
}

int run_redundancy(const ProblemSpec& spec, const std::filesystem::path& out) {
  json outputs;
  const GainSet gains = resolve_gains(spec, outputs);
  const auto rep = systemic_redundancy(spec.system, gains, single_epsilon(spec),
                                       spec.method, redundancy_options(spec));
  outputs["redundancy"] = to_json(rep);
  write_report(out, Command::Redundancy, spec, std::move(outputs));
  write_atomic(out / "redundancy.csv", render_tabular(rep));
  return kExitOk;
}

int run_sweep_eps(const ProblemSpec& spec, const std::filesystem::path& out) {
  if (spec.epsilon.empty()) throw ConfigValidationError("epsilon", "required by sweep-eps");
  json outputs;
  const GainSet gains = resolve_gains(spec, outputs);
  const auto table = epsilon_sweep(spec.system, gains, spec.epsilon, spec.method,
                                   redundancy_options(spec));
  outputs["sweep"] = to_json(table);
  write_report(out, Command::SweepEps, spec, std::move(outputs));
  write_atomic(out / "sweep.csv", render_tabular(table));
  return kExitOk;
}

int run_sweep_time(const ProblemSpec& spec, const std::filesystem::path& out) {
  if (spec.times.empty()) throw ConfigValidationError("times", "required by sweep-time");
  json outputs;
  const GainSet gains = resolve_gains(spec, outputs);
  const GaussianDensity rho0 =
      spec.rho0.value_or(GaussianDensity::standard(spec.system.state_dim()));
  LiouvilleOptions lo;
  lo.normalization = spec.normalization;
  lo.convention = spec.jacobian;
  std::optional<double> ref;
  if (spec.epsilon.size() == 1) ref = spec.epsilon.front();
  const Method ref_method =
      spec.system.sigma().is_constant() ? spec.method : Method::Grid;
  const auto table = time_sweep(spec.system, gains, GeneralDensity(rho0), spec.times,
                                ref, lo, ref_method, redundancy_options(spec));
  outputs["sweep"] = to_json(table);
  write_report(out, Command::SweepTime, spec, std::move(outputs));
  write_atomic(out / "sweep.csv", render_tabular(table));
  return kExitOk;
}

int run_simulate(const ProblemSpec& spec, const std::filesystem::path& out) {
  const double eps = single_epsilon(spec);
  const FailureMode mode{spec.mode};
  const Matrix Aj = closed_loop_matrix(spec.system, spec.gains.value_or(GainSet{}), mode);
  SdeRun run;
  run.dt = spec.monte_carlo.dt.value_or(default_sde_step(Aj));
  run.horizon = spec.monte_carlo.horizon.value_or(default_sde_horizon(Aj));
  run.n_paths = spec.monte_carlo.n_paths;
  run.seed = spec.seed;
  run.threads = spec.monte_carlo.threads;
  const auto set = simulate_sde(spec.system, *spec.gains, mode, eps, run);

  const Vector mean = set.samples.colwise().mean().transpose();
  const Matrix centered = set.samples.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered /
                     std::max<double>(1.0, static_cast<double>(set.size() - 1));
  json outputs;
  outputs["method"] = to_string(Method::MonteCarlo);
  outputs["mode"] = spec.mode;
  outputs["epsilon"] = eps;
  outputs["seed"] = set.seed;
  outputs["n_paths"] = static_cast<std::size_t>(set.size());
  outputs["dt"] = set.dt;
  outputs["t_final"] = set.t_final;
  outputs["sample_mean"] = json(std::vector<double>(mean.data(), mean.data() + mean.size()));
  outputs["sample_cov"] = matrix_to_json(cov);
  if (spec.system.sigma().is_constant()) {
    const auto g = stationary_gaussian(spec.system, *spec.gains, mode, eps);
    outputs["stationary_cov"] = {{"method", to_string(Method::ClosedForm)},
                                 {"cov", matrix_to_json(g.cov())}};
  }
  write_report(out, Command::Simulate, spec, std::move(outputs));

  std::ostringstream csv;
  for (Eigen::Index k = 0; k < set.dim(); ++k) csv << (k ? "," : "") << "x" << (k + 1);
  csv << '\n';
  for (Eigen::Index r = 0; r < set.size(); ++r) {
    for (Eigen::Index k = 0; k < set.dim(); ++k) {
      csv << (k ? "," : "") << format_double(set.samples(r, k));
    }
    csv << '\n';
  }
  write_atomic(out / "samples.csv", csv.str());
  return kExitOk;
}

int run_fp_grid(const ProblemSpec& spec, const std::filesystem::path& out) {
  const double eps = single_epsilon(spec);
  const FailureMode mode{spec.mode};
  const Eigen::Index d = spec.system.state_dim();
  const CellGrid grid =
      spec.grid ? *spec.grid
                : default_fp_grid(spec.system, *spec.gains, mode, eps, d == 1 ? 801 : 121);
  const auto rho = solve_stationary_fp_grid(spec.system, *spec.gains, mode, eps, grid);
  json outputs;
  outputs["method"] = to_string(Method::Grid);
  outputs["mode"] = spec.mode;
  outputs["epsilon"] = eps;
  outputs["grid"] = to_json(grid);
  outputs["fp_residual"] = fp_residual(rho, spec.system, *spec.gains, mode, eps);
  outputs["entropy_bits"] = grid_entropy(rho).value();
  if (spec.system.sigma().is_constant()) {
    const auto exact = discretize(stationary_gaussian(spec.system, *spec.gains, mode, eps), grid);
    double l1 = 0.0;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      l1 += std::abs(rho.value(c) - exact.value(c));
    }
    outputs["l1_to_stationary_gaussian"] = {{"method", to_string(Method::Grid)},
                                            {"value", l1 * grid.cell_volume()}};
  }
  write_report(out, Command::FpGrid, spec, std::move(outputs));

  std::ostringstream csv;
  for (Eigen::Index k = 0; k < d; ++k) csv << "x" << (k + 1) << ",";
  csv << "density\n";
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const Vector x = grid.center(c);
    for (Eigen::Index k = 0; k < d; ++k) csv << format_double(x(k)) << ",";
    csv << format_double(rho.value(c)) << '\n';
  }
  write_atomic(out / "density.csv", csv.str());
  return kExitOk;
}

}  // namespace

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigSyntaxError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NotReliableError& e) {
    err << "not reliable: " << e.what() << '\n';
    return kExitNotReliable;
  } catch (const SynthesisFailedError& e) {
    err << "synthesis failed: " << e.what() << '\n';
    return kExitNotReliable;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedDiffusionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_command(Command cmd, ProblemSpec spec, const std::filesystem::path& out_dir,
                std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    const bool needs_gains = cmd == Command::Verify || cmd == Command::Simulate ||
                             cmd == Command::FpGrid;
    if (needs_gains && !spec.gains) {
      throw ConfigValidationError("gains", "required by " + to_string(cmd));
    }
    int code = kExitOk;
    switch (cmd) {
      case Command::Verify: code = run_verify(spec, out_dir, err); break;
      case Command::Synth: code = run_synth(spec, out_dir); break;
      case Command::Redundancy: code = run_redundancy(spec, out_dir); break;
      case Command::SweepEps: code = run_sweep_eps(spec, out_dir); break;
      case Command::SweepTime: code = run_sweep_time(spec, out_dir); break;
      case Command::Simulate: code = run_simulate(spec, out_dir); break;
      case Command::FpGrid: code = run_fp_grid(spec, out_dir); break;
    }
    // Timing lives outside report.json so reports stay byte-reproducible.
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json info = {{"command", to_string(cmd)},
                       {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
                       {"wall_clock_seconds", secs},
                       {"exit_code", code}};
    write_atomic(out_dir / "run_info.json", render_structured(info));
    return code;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace redunquant
