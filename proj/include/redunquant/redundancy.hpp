#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "redunquant/densities.hpp"
#include "redunquant/info_measures.hpp"
#include "redunquant/liouville_flow.hpp"
#include "redunquant/system_model.hpp"

namespace redunquant {

enum class Method { ClosedForm, MonteCarlo, Grid };

/// Paper: 1/(2N) prefactor on the summed divergences. Mean: 1/N.
enum class AvgNormalization { Paper, Mean };

std::string to_string(Method m);
std::string to_string(AvgNormalization n);
std::string to_string(JacobianConvention c);
Method parse_method(const std::string& s);
AvgNormalization parse_normalization(const std::string& s);

struct MonteCarloOptions {
  std::size_t n_paths = 200000;
  std::uint64_t seed = 42;
  /// dt = dt_scale * min(1, 1/||A_j||) unless `dt` is set.
  double dt_scale = 1e-2;
  std::optional<double> dt;
  /// horizon = horizon_time_constants / |abscissa(A_j)| unless `horizon` is set.
  double horizon_time_constants = 20.0;
  std::optional<double> horizon;
  std::size_t cells_1d = 100;
  std::size_t cells_2d = 64;
  /// Added to every histogram cell (Jeffreys prior). Keeps the nominal
  /// histogram positive where only failure-mode samples landed.
  double pseudo_count = 0.5;
  unsigned threads = 0;
};

struct GridOptions {
  std::size_t cells_1d = 801;
  std::size_t cells_2d = 121;
  double k = 6.0;
};

struct RedundancyOptions {
  AvgNormalization normalization = AvgNormalization::Paper;
  MonteCarloOptions mc;
  GridOptions grid;
};

struct LiouvilleOptions {
  AvgNormalization normalization = AvgNormalization::Paper;
  JacobianConvention convention = JacobianConvention::MassConserving;
  std::size_t cells_1d = 2001;
  std::size_t cells_2d = 241;
  double k = 8.0;
};

/// Where the numbers in a report came from.
struct Provenance {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_paths;
  std::vector<double> dt;       // per mode, Monte Carlo only
  std::vector<double> horizon;  // per mode, Monte Carlo only
  std::vector<double> leakage;  // per mode, Monte Carlo only
  std::vector<double> mass;     // per mode, Liouville grid path only
  std::optional<CellGrid> grid;
  std::optional<std::string> jacobian;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct RedundancyReport {
  std::optional<double> epsilon;
  std::optional<double> time;
  std::vector<Bits> kl_per_channel;  // D(mu_i || mu_0), i = 1..N
  Bits avg_term;
  Bits entropy_term;  // H(mu_0)
  Bits r;             // avg_term - entropy_term
  Method method = Method::ClosedForm;
  AvgNormalization normalization = AvgNormalization::Paper;
  Provenance provenance;

  friend bool operator==(const RedundancyReport&, const RedundancyReport&) = default;
};

/// Derives an independent stream seed from (base, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// r = (1/(2N)) sum_i D(mu_i || mu_0) - H(mu_0) over the stationary laws of
/// the perturbed nominal and single-outage loops. Throws NotReliableError
/// unless every mode is Hurwitz.
RedundancyReport systemic_redundancy(const MultiChannelSystem& sys,
                                     const GainSet& gains, double eps,
                                     Method method,
                                     const RedundancyOptions& opts = {});

/// Same functional applied to the Liouville-transported densities at time t.
/// Gaussian rho0 under the mass-conserving Jacobian is exact; everything
/// else goes through a shared grid (d <= 2).
RedundancyReport liouville_redundancy(const MultiChannelSystem& sys,
                                      const GainSet& gains,
                                      const GeneralDensity& rho0, double t,
                                      const LiouvilleOptions& opts = {});

enum class SweepKind { Epsilon, Time };

struct SweepTable {
  SweepKind kind = SweepKind::Epsilon;
  /// Sorted by strictly increasing parameter (epsilon or t).
  std::vector<RedundancyReport> rows;
  /// nondecreasing[k]: r(rows[k+1]) >= r(rows[k]).
  std::vector<bool> nondecreasing;

  // Epsilon sweeps with constant noise: r(eps) = r(1) - d log2(eps).
  std::optional<double> r_at_unit_eps;
  std::vector<double> scaling_law_prediction;

  // Time sweeps: stationary r at a reference epsilon versus r_t.
  std::optional<RedundancyReport> reference;
  std::vector<bool> reference_exceeds;

  std::string claim;
  std::string finding;

  friend bool operator==(const SweepTable&, const SweepTable&) = default;
};

SweepTable epsilon_sweep(const MultiChannelSystem& sys, const GainSet& gains,
                         std::vector<double> eps_list, Method method,
                         const RedundancyOptions& opts = {});

SweepTable time_sweep(const MultiChannelSystem& sys, const GainSet& gains,
                      const GeneralDensity& rho0, std::vector<double> t_list,
                      std::optional<double> reference_eps = std::nullopt,
                      const LiouvilleOptions& opts = {},
                      Method reference_method = Method::ClosedForm,
                      const RedundancyOptions& reference_opts = {});

}  // namespace redunquant
