#pragma once

#include <cstdint>
#include <optional>

#include "redunquant/densities.hpp"
#include "redunquant/system_model.hpp"

namespace redunquant {

/// Stationary law N(0, P) of dx = A_j x dt + eps S dW, with
/// A_j P + P A_j^T + eps^2 S S^T = 0. Constant diffusion only.
GaussianDensity stationary_gaussian(const MultiChannelSystem& sys,
                                    const GainSet& gains, FailureMode mode,
                                    double eps);

/// Endpoints of Euler-Maruyama paths.
struct SampleSet {
  Matrix samples;  // n x d, one row per path
  std::uint64_t seed = 0;
  double t_final = 0.0;
  double dt = 0.0;
  FailureMode mode;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
};

/// 1e-3 * min(1, 1 / ||A_j||_2).
double default_sde_step(const Matrix& Aj);
/// About 20 time constants: 20 / |spectral_abscissa(A_j)|.
double default_sde_horizon(const Matrix& Aj);

struct SdeRun {
  double horizon = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 42;
  std::optional<Vector> x0;  // zero (the equilibrium) when empty
  /// Worker threads; 0 picks hardware concurrency. Output does not depend
  /// on this value.
  unsigned threads = 0;
};

/// Euler-Maruyama for dx = A_j x dt + eps sigma(x) dW. Path p draws from its
/// own generator seeded by (seed, p). Throws DivergenceError (lowest failing
/// path index) once any |x_k| exceeds 1e12.
SampleSet simulate_sde(const MultiChannelSystem& sys, const GainSet& gains,
                       FailureMode mode, double eps, const SdeRun& run);

struct EmpiricalDensity {
  GridDensity density;
  double leakage = 0.0;  // fraction of samples outside the box
};

/// Normalized histogram of the in-box samples. `pseudo_count` is added to
/// every cell before normalizing (0 gives the plain histogram). Throws
/// OutOfBoxError when more than 10% of the samples fall outside the box.
EmpiricalDensity empirical_density(const SampleSet& samples,
                                   const CellGrid& grid,
                                   double pseudo_count = 0.0);

/// Max |L rho| over interior cells, where
///   L rho = -div(b rho) + (eps^2/2) sum_kl d_k d_l (D_kl rho),
/// b = A_j x and D = sigma sigma^T, using central differences. Only d <= 2.
double fp_residual(const GridDensity& density, const MultiChannelSystem& sys,
                   const GainSet& gains, FailureMode mode, double eps);
double fp_residual(const GaussianDensity& density, const MultiChannelSystem& sys,
                   const GainSet& gains, FailureMode mode, double eps,
                   const CellGrid& grid);

/// Conservative finite-volume discretization of the stationary
/// Fokker-Planck operator with zero-flux walls (d = 1 or 2). Returns the
/// normalized null vector.
GridDensity solve_stationary_fp_grid(const MultiChannelSystem& sys,
                                     const GainSet& gains, FailureMode mode,
                                     double eps, const CellGrid& grid);

/// Box of +/- k stationary standard deviations, split into `cells` cells per
/// axis. For state-dependent noise the standard deviation is estimated by a
/// short fixed-point iteration on sigma evaluated at k/2 standard deviations.
CellGrid default_fp_grid(const MultiChannelSystem& sys, const GainSet& gains,
                         FailureMode mode, double eps, std::size_t cells,
                         double k = 6.0);

}  // namespace redunquant
