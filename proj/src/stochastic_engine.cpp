#include "redunquant/stochastic_engine.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "redunquant/errors.hpp"

namespace redunquant {

namespace {

constexpr double kDivergenceBound = 1e12;
constexpr double kMaxLeakage = 0.10;
constexpr double kNegativeTol = 1e-10;

void require_eps(double eps, bool allow_zero) {
  const bool ok = allow_zero ? eps >= 0.0 : eps > 0.0;
  if (!ok || !std::isfinite(eps)) {
    throw DomainError(allow_zero ? "epsilon must be finite and nonnegative"
                                 : "epsilon must be finite and positive");
  }
}

Matrix hurwitz_closed_loop(const MultiChannelSystem& sys, const GainSet& gains,
                           FailureMode mode) {
  Matrix Aj = closed_loop_matrix(sys, gains, mode);
  const double alpha = spectral_abscissa(Aj);
  if (!(alpha < 0.0)) {
    throw NotHurwitzError("failure mode " + std::to_string(mode.index()) +
                          " is not Hurwitz (spectral abscissa " +
                          std::to_string(alpha) +
                          "); no stationary density exists");
  }
  return Aj;
}

std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path),
                    static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

// Returns false on divergence.
bool run_path(const Matrix& Aj, const DiffusionSpec& sigma, double eps,
              double dt, long long steps, const Vector& x0, std::uint64_t seed,
              std::uint64_t path, double* out) {
  const Eigen::Index d = Aj.rows();
  auto gen = path_engine(seed, path);
  boost::random::normal_distribution<double> normal;
  const double sq = eps * std::sqrt(dt);

  if (d == 1 && sigma.is_constant() && sigma.noise_dim() == 1) {
    const double a = Aj(0, 0);
    const double s = sq * sigma.as_constant().S(0, 0);
    double x = x0(0);
    for (long long k = 0; k < steps; ++k) {
      x += a * x * dt + s * normal(gen);
      if (!(std::abs(x) <= kDivergenceBound)) return false;
    }
    out[0] = x;
    return true;
  }

  const Eigen::Index m = sigma.noise_dim();
  std::vector<double> x(x0.data(), x0.data() + d);
  std::vector<double> next(static_cast<std::size_t>(d));
  std::vector<double> z(static_cast<std::size_t>(m));
  const bool constant = sigma.is_constant();
  const Matrix* S = constant ? &sigma.as_constant().S : nullptr;
  const DiffusionSpec::DiagAffine* aff =
      constant ? nullptr : &sigma.as_diag_affine();
  for (long long k = 0; k < steps; ++k) {
    for (auto& zi : z) zi = normal(gen);
    for (Eigen::Index i = 0; i < d; ++i) {
      double drift = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) drift += Aj(i, l) * x[l];
      double noise = 0.0;
      if (constant) {
        for (Eigen::Index l = 0; l < m; ++l) noise += (*S)(i, l) * z[l];
      } else {
        noise = (aff->c(i) + aff->s(i) * std::abs(x[i])) * z[i];
      }
      next[i] = x[i] + drift * dt + sq * noise;
    }
    x.swap(next);
    for (double xi : x) {
      if (!(std::abs(xi) <= kDivergenceBound)) return false;
    }
  }
  std::copy(x.begin(), x.end(), out);
  return true;
}

// Entries of one discretized flux: sum_m coef_m * rho_m.
using Stencil = std::vector<std::pair<std::size_t, double>>;

}  // namespace

GaussianDensity stationary_gaussian(const MultiChannelSystem& sys,
                                    const GainSet& gains, FailureMode mode,
                                    double eps) {
  require_eps(eps, false);
  const auto& S = sys.sigma().as_constant().S;
  const Matrix Aj = closed_loop_matrix(sys, gains, mode);
  const Matrix Q = eps * eps * (S * S.transpose());
  Matrix P = solve_lyapunov(Aj, 0.5 * (Q + Q.transpose()));
  return GaussianDensity(Vector::Zero(sys.state_dim()), std::move(P));
}

double default_sde_step(const Matrix& Aj) {
  const double norm = Aj.operatorNorm();
  return 1e-3 * std::min(1.0, norm > 0.0 ? 1.0 / norm : 1.0);
}

double default_sde_horizon(const Matrix& Aj) {
  const double alpha = spectral_abscissa(Aj);
  if (!(alpha < 0.0)) {
    throw NotHurwitzError("default horizon needs a Hurwitz mode");
  }
  return 20.0 / std::abs(alpha);
}

SampleSet simulate_sde(const MultiChannelSystem& sys, const GainSet& gains,
                       FailureMode mode, double eps, const SdeRun& run) {
  require_eps(eps, true);
  if (!(run.dt > 0.0) || !std::isfinite(run.dt)) {
    throw DomainError("dt must be positive");
  }
  if (!(run.horizon >= run.dt) || !std::isfinite(run.horizon)) {
    throw DomainError("horizon must be at least dt");
  }
  if (run.n_paths == 0) throw DomainError("n_paths must be at least 1");
  const Eigen::Index d = sys.state_dim();
  const Vector x0 = run.x0.value_or(Vector::Zero(d));
  if (x0.size() != d) throw DimensionError("x0 dimension mismatch");

  const Matrix Aj = closed_loop_matrix(sys, gains, mode);
  const auto steps =
      std::max<long long>(1, std::llround(run.horizon / run.dt));

  // Row-major buffer so each path writes a contiguous slice.
  std::vector<double> buf(run.n_paths * static_cast<std::size_t>(d));
  const std::size_t n = run.n_paths;
  unsigned workers = run.threads ? run.threads : std::thread::hardware_concurrency();
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::size_t>(n, 1024))));
  std::vector<std::size_t> first_failure(workers, n);
  auto work = [&](unsigned w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    for (std::size_t p = begin; p < end; ++p) {
      if (!run_path(Aj, sys.sigma(), eps, run.dt, steps, x0, run.seed, p,
                    buf.data() + p * static_cast<std::size_t>(d))) {
        first_failure[w] = p;
        return;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  const std::size_t failed =
      *std::min_element(first_failure.begin(), first_failure.end());
  if (failed < n) {
    throw DivergenceError("path " + std::to_string(failed) +
                              " diverged (|x| > 1e12); mode not Hurwitz or dt "
                              "too large",
                          failed);
  }

  SampleSet out;
  out.samples = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(
      buf.data(), static_cast<Eigen::Index>(n), d);
  out.seed = run.seed;
  out.dt = run.dt;
  out.t_final = static_cast<double>(steps) * run.dt;
  out.mode = mode;
  return out;
}

EmpiricalDensity empirical_density(const SampleSet& samples,
                                   const CellGrid& grid, double pseudo_count) {
  if (grid.dim() != samples.dim()) {
    throw DimensionError("grid dimension differs from sample dimension");
  }
  if (samples.size() == 0) throw DomainError("empty sample set");
  if (!(pseudo_count >= 0.0)) throw DomainError("pseudo_count must be nonnegative");
  std::vector<double> counts(grid.size(), 0.0);
  std::size_t outside = 0;
  for (Eigen::Index r = 0; r < samples.size(); ++r) {
    const std::size_t c = grid.locate(samples.samples.row(r).transpose());
    if (c == grid.size()) {
      ++outside;
    } else {
      counts[c] += 1.0;
    }
  }
  const double leakage =
      static_cast<double>(outside) / static_cast<double>(samples.size());
  if (leakage > kMaxLeakage) {
    throw OutOfBoxError("histogram box too small: " +
                            std::to_string(100.0 * leakage) +
                            "% of samples fall outside",
                        leakage);
  }
  if (pseudo_count > 0.0) {
    for (double& c : counts) c += pseudo_count;
  }
  return EmpiricalDensity{GridDensity::normalized(grid, std::move(counts)),
                          leakage};
}

namespace {

double residual_on_grid(const CellGrid& grid, const std::vector<double>& f,
                        const MultiChannelSystem& sys, const Matrix& Aj,
                        double eps) {
  const Eigen::Index d = grid.dim();
  if (d > 2) throw DimensionError("Fokker-Planck residual supports d <= 2");
  const std::size_t n = grid.size();
  // b_k f and D_kl f at every center.
  std::vector<Vector> bf(n);
  std::vector<Matrix> Df(n);
  for (std::size_t c = 0; c < n; ++c) {
    const Vector x = grid.center(c);
    bf[c] = (Aj * x) * f[c];
    Df[c] = sys.sigma().diffusion_at(x) * f[c];
  }
  const double half_eps2 = 0.5 * eps * eps;
  double worst = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const auto idx = grid.unflatten(c);
    bool interior = true;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (idx[a] == 0 || idx[a] + 1 >= grid.cells[a]) interior = false;
    }
    if (!interior) continue;
    auto shifted = [&](std::size_t a, int da, std::size_t b, int db) {
      auto j = idx;
      j[a] = static_cast<std::size_t>(static_cast<long>(j[a]) + da);
      j[b] = static_cast<std::size_t>(static_cast<long>(j[b]) + db);
      return grid.flatten(j);
    };
    double value = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const double h = grid.spacing(k);
      const std::size_t up = shifted(ku, 1, ku, 0);
      const std::size_t dn = shifted(ku, -1, ku, 0);
      value -= (bf[up](k) - bf[dn](k)) / (2.0 * h);
      value += half_eps2 * (Df[up](k, k) - 2.0 * Df[c](k, k) + Df[dn](k, k)) /
               (h * h);
      for (Eigen::Index l = k + 1; l < d; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const double hl = grid.spacing(l);
        const double mixed = (Df[shifted(ku, 1, lu, 1)](k, l) -
                              Df[shifted(ku, 1, lu, -1)](k, l) -
                              Df[shifted(ku, -1, lu, 1)](k, l) +
                              Df[shifted(ku, -1, lu, -1)](k, l)) /
                             (4.0 * h * hl);
        value += half_eps2 * 2.0 * mixed;
      }
    }
    worst = std::max(worst, std::abs(value));
  }
  return worst;
}

}  // namespace

double fp_residual(const GridDensity& density, const MultiChannelSystem& sys,
                   const GainSet& gains, FailureMode mode, double eps) {
  require_eps(eps, false);
  if (density.grid().dim() != sys.state_dim()) {
    throw DimensionError("density dimension mismatch");
  }
  const Matrix Aj = closed_loop_matrix(sys, gains, mode);
  return residual_on_grid(density.grid(), density.values(), sys, Aj, eps);
}

double fp_residual(const GaussianDensity& density, const MultiChannelSystem& sys,
                   const GainSet& gains, FailureMode mode, double eps,
                   const CellGrid& grid) {
  require_eps(eps, false);
  if (density.dim() != sys.state_dim() || grid.dim() != sys.state_dim()) {
    throw DimensionError("density dimension mismatch");
  }
  const Matrix Aj = closed_loop_matrix(sys, gains, mode);
  std::vector<double> f(grid.size());
  for (std::size_t c = 0; c < f.size(); ++c) f[c] = density.pdf(grid.center(c));
  return residual_on_grid(grid, f, sys, Aj, eps);
}

GridDensity solve_stationary_fp_grid(const MultiChannelSystem& sys,
                                     const GainSet& gains, FailureMode mode,
                                     double eps, const CellGrid& grid) {
  require_eps(eps, false);
  const Eigen::Index d = sys.state_dim();
  if (d > 2) throw DimensionError("grid Fokker-Planck solver supports d <= 2");
  if (grid.dim() != d) throw DimensionError("grid dimension mismatch");
  for (auto c : grid.cells) {
    if (c < 3) throw DomainError("grid solver needs at least 3 cells per axis");
  }
  const Matrix Aj = hurwitz_closed_loop(sys, gains, mode);
  const std::size_t n = grid.size();
  const double half_eps2 = 0.5 * eps * eps;

  std::vector<Vector> centers(n);
  std::vector<Matrix> D(n);
  for (std::size_t c = 0; c < n; ++c) {
    centers[c] = grid.center(c);
    D[c] = sys.sigma().diffusion_at(centers[c]);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 16 + 2 * n);

  // d_l (D_kl rho) at cell c, central where possible, one-sided at walls.
  auto add_cross_derivative = [&](Stencil& st, std::size_t c, std::size_t k,
                                  std::size_t l, double weight) {
    auto idx = grid.unflatten(c);
    const double h = grid.spacing(static_cast<Eigen::Index>(l));
    const std::size_t i = idx[l];
    std::size_t lo = i > 0 ? i - 1 : i;
    std::size_t hi = i + 1 < grid.cells[l] ? i + 1 : i;
    const double span = static_cast<double>(hi - lo) * h;
    idx[l] = hi;
    const std::size_t chi = grid.flatten(idx);
    idx[l] = lo;
    const std::size_t clo = grid.flatten(idx);
    const auto ki = static_cast<Eigen::Index>(k);
    const auto li = static_cast<Eigen::Index>(l);
    st.emplace_back(chi, weight * D[chi](ki, li) / span);
    st.emplace_back(clo, -weight * D[clo](ki, li) / span);
  };

  for (std::size_t c = 0; c < n; ++c) {
    const auto idx = grid.unflatten(c);
    for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) {
      if (idx[k] + 1 >= grid.cells[k]) continue;  // wall: zero flux
      auto up_idx = idx;
      up_idx[k] += 1;
      const std::size_t up = grid.flatten(up_idx);
      const auto ki = static_cast<Eigen::Index>(k);
      const double h = grid.spacing(ki);

      Vector face = centers[c];
      face(ki) += 0.5 * h;
      const double b = (Aj.row(ki) * face)(0);

      // Flux across the face: b * avg(rho) - (eps^2/2) sum_l d_l(D_kl rho).
      Stencil flux;
      flux.emplace_back(c, 0.5 * b);
      flux.emplace_back(up, 0.5 * b);
      flux.emplace_back(up, -half_eps2 * D[up](ki, ki) / h);
      flux.emplace_back(c, half_eps2 * D[c](ki, ki) / h);
      for (std::size_t l = 0; l < static_cast<std::size_t>(d); ++l) {
        if (l == k) continue;
        add_cross_derivative(flux, c, k, l, -half_eps2 * 0.5);
        add_cross_derivative(flux, up, k, l, -half_eps2 * 0.5);
      }
      for (const auto& [m, w] : flux) {
        trip.emplace_back(static_cast<int>(c), static_cast<int>(m), -w / h);
        trip.emplace_back(static_cast<int>(up), static_cast<int>(m), w / h);
      }
    }
  }

  // Bordered system [M 1; v^T 0][rho; lambda] = [0; 1]. Nonsingular exactly
  // when the null space of M is one-dimensional (columns of M sum to zero,
  // so the ones vector is outside its range).
  const double vol = grid.cell_volume();
  const auto ni = static_cast<int>(n);
  for (int c = 0; c < ni; ++c) {
    trip.emplace_back(c, ni, 1.0);
    trip.emplace_back(ni, c, vol);
  }
  Eigen::SparseMatrix<double> Mb(ni + 1, ni + 1);
  Mb.setFromTriplets(trip.begin(), trip.end());
  Mb.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(Mb);
  if (lu.info() != Eigen::Success) {
    throw NonUniqueError("stationary operator has a null space of dimension != 1 (" +
                         lu.lastErrorMessage() + ")");
  }
  Vector rhs = Vector::Zero(ni + 1);
  rhs(ni) = 1.0;
  const Vector sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) {
    throw NonUniqueError("stationary solve failed; null space not one-dimensional");
  }
  const Vector rho = sol.head(ni);
  const double scale = Mb.norm() * std::max(1.0, rho.cwiseAbs().maxCoeff());
  const double res = (Mb * sol - rhs).norm();
  if (res > 1e-8 * scale || std::abs(sol(ni)) > 1e-8 * scale) {
    throw NonUniqueError("stationary solve residual " + std::to_string(res) +
                         " too large; null space not one-dimensional");
  }

  std::vector<double> values(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double v = rho(static_cast<Eigen::Index>(c));
    if (v < -kNegativeTol) {
      throw NumericalError("stationary density has negative entry " +
                           std::to_string(v) + "; refine the grid");
    }
    values[c] = std::max(0.0, v);
  }
  return GridDensity::normalized(grid, std::move(values));
}

CellGrid default_fp_grid(const MultiChannelSystem& sys, const GainSet& gains,
                         FailureMode mode, double eps, std::size_t cells,
                         double k) {
  require_eps(eps, false);
  const Eigen::Index d = sys.state_dim();
  const Matrix Aj = hurwitz_closed_loop(sys, gains, mode);
  Vector std_dev;
  if (sys.sigma().is_constant()) {
    std_dev = stationary_gaussian(sys, gains, mode, eps).stddev();
  } else {
    const auto& aff = sys.sigma().as_diag_affine();
    Vector noise = aff.c;
    for (int it = 0; it < 8; ++it) {
      const Matrix Q = eps * eps * noise.array().square().matrix().asDiagonal();
      std_dev = solve_lyapunov(Aj, Matrix(Q)).diagonal().array().sqrt();
      noise = aff.c.array() + aff.s.array() * (0.5 * k) * std_dev.array();
    }
  }
  const double half = k * std_dev.maxCoeff();
  return CellGrid(Box{Vector::Constant(d, -half), Vector::Constant(d, half)},
                  std::vector<std::size_t>(static_cast<std::size_t>(d), cells));
}

}  // namespace redunquant
