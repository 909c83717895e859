#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "redunquant/commands.hpp"
#include "redunquant/config.hpp"
#include "redunquant/errors.hpp"

using namespace redunquant;

int main(int argc, char** argv) {
  CLI::App app{"Systemic redundancy of reliably stabilized multi-channel systems"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  bool paper_literal = false;
  std::optional<std::string> normalization;
  std::optional<unsigned> threads;

  const char* names[] = {"verify", "synth", "redundancy", "sweep-eps",
                         "sweep-time", "simulate", "fp-grid"};
  for (const char* name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "problem description (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--method", method, "closed_form | monte_carlo | grid");
    sub->add_option("--seed", seed, "base RNG seed");
    sub->add_flag("--paper-literal-jacobian", paper_literal,
                  "use tr(A) in the transported density");
    sub->add_option("--avg-normalization", normalization, "paper | mean");
    sub->add_option("--threads", threads, "worker threads for simulation");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const Command cmd = parse_command(app.get_subcommands().front()->get_name());
    // An unreadable config is a usage problem, not a numerical one.
    std::optional<ProblemSpec> loaded;
    try {
      loaded.emplace(parse_config(config_path));
    } catch (const IoError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
    ProblemSpec spec = std::move(*loaded);
    CliOverrides o;
    if (method) o.method = parse_method(*method);
    o.seed = seed;
    o.paper_literal_jacobian = paper_literal;
    if (normalization) o.normalization = parse_normalization(*normalization);
    o.threads = threads;
    apply_overrides(spec, o);
    return run_command(cmd, std::move(spec), out_dir, std::cerr);
  } catch (...) {
    return exit_code_for_current_exception(std::cerr);
  }
}
