#include "redunquant/redundancy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "redunquant/errors.hpp"
#include "redunquant/reliable_gains.hpp"
#include "redunquant/stochastic_engine.hpp"

namespace redunquant {

std::string to_string(Method m) {
  switch (m) {
    case Method::ClosedForm: return "closed_form";
    case Method::MonteCarlo: return "monte_carlo";
    case Method::Grid: return "grid";
  }
  return "unknown";
}

std::string to_string(AvgNormalization n) {
  return n == AvgNormalization::Paper ? "paper" : "mean";
}

std::string to_string(JacobianConvention c) {
  return c == JacobianConvention::MassConserving ? "mass_conserving"
                                                 : "paper_literal";
}

Method parse_method(const std::string& s) {
  if (s == "closed_form") return Method::ClosedForm;
  if (s == "monte_carlo") return Method::MonteCarlo;
  if (s == "grid") return Method::Grid;
  throw DomainError("unknown method '" + s + "'");
}

AvgNormalization parse_normalization(const std::string& s) {
  if (s == "paper") return AvgNormalization::Paper;
  if (s == "mean") return AvgNormalization::Mean;
  throw DomainError("unknown normalization '" + s + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base),
                    static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x5eedU};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

void require_reliable(const MultiChannelSystem& sys, const GainSet& gains) {
  const auto rep = verify_reliable(sys, gains);
  if (!rep.reliable) {
    std::ostringstream os;
    os << "gains are not reliable; spectral abscissae:";
    for (double a : rep.abscissae) os << ' ' << a;
    throw NotReliableError(os.str());
  }
}

// Fills avg_term, entropy_term and r from the divergences and nominal entropy.
void assemble(RedundancyReport& rep, std::vector<Bits> kl, Bits entropy,
              AvgNormalization norm) {
  const double N = static_cast<double>(kl.size());
  const double prefactor = norm == AvgNormalization::Paper ? 1.0 / (2.0 * N) : 1.0 / N;
  bool infinite = false;
  double sum = 0.0;
  for (const auto& b : kl) {
    if (b.is_infinite()) infinite = true;
    sum += b.value();
  }
  rep.kl_per_channel = std::move(kl);
  rep.entropy_term = entropy;
  rep.normalization = norm;
  if (infinite) {
    rep.avg_term = Bits::infinite();
    rep.r = Bits::infinite();
  } else {
    rep.avg_term = Bits(prefactor * sum);
    rep.r = Bits(rep.avg_term.value() - entropy.value());
  }
}

std::size_t cells_for(Eigen::Index d, std::size_t one, std::size_t two) {
  return d == 1 ? one : two;
}

RedundancyReport from_grids(const std::vector<GridDensity>& modes,
                            AvgNormalization norm) {
  std::vector<Bits> kl;
  for (std::size_t j = 1; j < modes.size(); ++j) {
    kl.push_back(grid_kl(modes[j], modes[0]));
  }
  RedundancyReport rep;
  assemble(rep, std::move(kl), grid_entropy(modes[0]), norm);
  return rep;
}

RedundancyReport closed_form_redundancy(const MultiChannelSystem& sys,
                                        const GainSet& gains, double eps,
                                        AvgNormalization norm) {
  const auto nominal = stationary_gaussian(sys, gains, FailureMode::nominal(), eps);
  std::vector<Bits> kl;
  for (std::size_t j = 1; j <= sys.channels(); ++j) {
    kl.push_back(gaussian_kl(stationary_gaussian(sys, gains, FailureMode{j}, eps),
                             nominal));
  }
  RedundancyReport rep;
  assemble(rep, std::move(kl), gaussian_entropy(nominal), norm);
  return rep;
}

RedundancyReport monte_carlo_redundancy(const MultiChannelSystem& sys,
                                        const GainSet& gains, double eps,
                                        const RedundancyOptions& opts) {
  const Eigen::Index d = sys.state_dim();
  if (d > 2) {
    throw DimensionError("Monte Carlo redundancy estimates need d <= 2");
  }
  const auto& mc = opts.mc;
  Provenance prov;
  prov.seed = mc.seed;
  prov.n_paths = mc.n_paths;
  std::vector<SampleSet> sets;
  for (std::size_t j = 0; j <= sys.channels(); ++j) {
    const Matrix Aj = closed_loop_matrix(sys, gains, FailureMode{j});
    const double norm = Aj.operatorNorm();
    SdeRun run;
    run.dt = mc.dt.value_or(mc.dt_scale *
                            std::min(1.0, norm > 0.0 ? 1.0 / norm : 1.0));
    run.horizon = mc.horizon.value_or(mc.horizon_time_constants /
                                      std::abs(spectral_abscissa(Aj)));
    run.n_paths = mc.n_paths;
    run.seed = derive_seed(mc.seed, j);
    run.threads = mc.threads;
    sets.push_back(simulate_sde(sys, gains, FailureMode{j}, eps, run));
    prov.dt.push_back(run.dt);
    prov.horizon.push_back(sets.back().t_final);
  }
  // Shared grid over the union of all sample ranges.
  Vector lo = sets[0].samples.colwise().minCoeff().transpose();
  Vector hi = sets[0].samples.colwise().maxCoeff().transpose();
  for (const auto& s : sets) {
    lo = lo.cwiseMin(s.samples.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(s.samples.colwise().maxCoeff().transpose());
  }
  const std::size_t cells = cells_for(d, mc.cells_1d, mc.cells_2d);
  CellGrid grid(Box{lo, hi}, std::vector<std::size_t>(static_cast<std::size_t>(d), cells));
  std::vector<GridDensity> dens;
  for (const auto& s : sets) {
    auto e = empirical_density(s, grid, mc.pseudo_count);
    prov.leakage.push_back(e.leakage);
    dens.push_back(std::move(e.density));
  }
  RedundancyReport rep = from_grids(dens, opts.normalization);
  prov.grid = grid;
  rep.provenance = std::move(prov);
  return rep;
}

RedundancyReport grid_redundancy(const MultiChannelSystem& sys,
                                 const GainSet& gains, double eps,
                                 const RedundancyOptions& opts) {
  const Eigen::Index d = sys.state_dim();
  if (d > 2) throw DimensionError("grid redundancy estimates need d <= 2");
  const std::size_t cells = cells_for(d, opts.grid.cells_1d, opts.grid.cells_2d);
  double half = 0.0;
  for (std::size_t j = 0; j <= sys.channels(); ++j) {
    const auto g = default_fp_grid(sys, gains, FailureMode{j}, eps, cells, opts.grid.k);
    half = std::max(half, g.box.hi.maxCoeff());
  }
  CellGrid grid(Box{Vector::Constant(d, -half), Vector::Constant(d, half)},
                std::vector<std::size_t>(static_cast<std::size_t>(d), cells));
  std::vector<GridDensity> dens;
  for (std::size_t j = 0; j <= sys.channels(); ++j) {
    dens.push_back(solve_stationary_fp_grid(sys, gains, FailureMode{j}, eps, grid));
  }
  RedundancyReport rep = from_grids(dens, opts.normalization);
  rep.provenance.grid = grid;
  return rep;
}

}  // namespace

RedundancyReport systemic_redundancy(const MultiChannelSystem& sys,
                                     const GainSet& gains, double eps,
                                     Method method,
                                     const RedundancyOptions& opts) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw DomainError("epsilon must be finite and positive");
  }
  require_reliable(sys, gains);
  RedundancyReport rep;
  switch (method) {
    case Method::ClosedForm:
      rep = closed_form_redundancy(sys, gains, eps, opts.normalization);
      break;
    case Method::MonteCarlo:
      rep = monte_carlo_redundancy(sys, gains, eps, opts);
      break;
    case Method::Grid:
      rep = grid_redundancy(sys, gains, eps, opts);
      break;
  }
  rep.epsilon = eps;
  rep.method = method;
  return rep;
}

RedundancyReport liouville_redundancy(const MultiChannelSystem& sys,
                                      const GainSet& gains,
                                      const GeneralDensity& rho0, double t,
                                      const LiouvilleOptions& opts) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("time must be finite and nonnegative");
  }
  require_reliable(sys, gains);
  if (rho0.dim() != sys.state_dim()) {
    throw DimensionError("initial density dimension mismatch");
  }
  const std::size_t N = sys.channels();
  RedundancyReport rep;
  rep.time = t;
  rep.provenance.jacobian = to_string(opts.convention);

  const auto* g0 = rho0.as_gaussian();
  if (g0 && opts.convention == JacobianConvention::MassConserving) {
    const auto nominal = pushforward_gaussian(sys, gains, FailureMode::nominal(), *g0, t);
    std::vector<Bits> kl;
    for (std::size_t j = 1; j <= N; ++j) {
      kl.push_back(gaussian_kl(pushforward_gaussian(sys, gains, FailureMode{j}, *g0, t),
                               nominal));
    }
    assemble(rep, std::move(kl), gaussian_entropy(nominal), opts.normalization);
    rep.method = Method::ClosedForm;
    return rep;
  }

  const Eigen::Index d = sys.state_dim();
  if (d > 2) throw DimensionError("grid Liouville path needs d <= 2");
  Box box = transported_box(sys, gains, FailureMode::nominal(), rho0, t, opts.k);
  for (std::size_t j = 1; j <= N; ++j) {
    const Box b = transported_box(sys, gains, FailureMode{j}, rho0, t, opts.k);
    box.lo = box.lo.cwiseMin(b.lo);
    box.hi = box.hi.cwiseMax(b.hi);
  }
  const std::size_t cells = cells_for(d, opts.cells_1d, opts.cells_2d);
  CellGrid grid(box, std::vector<std::size_t>(static_cast<std::size_t>(d), cells));
  std::vector<GridDensity> dens;
  for (std::size_t j = 0; j <= N; ++j) {
    const Matrix Aj = closed_loop_matrix(sys, gains, FailureMode{j});
    const Matrix back = matrix_exponential(Aj, -t);
    const double trace = opts.convention == JacobianConvention::MassConserving
                             ? Aj.trace()
                             : sys.A().trace();
    const double jac = std::exp(-trace * t);
    std::vector<double> v(grid.size());
    double raw = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) {
      v[c] = rho0.evaluate(back * grid.center(c)) * jac;
      raw += v[c];
    }
    rep.provenance.mass.push_back(raw * grid.cell_volume());
    dens.push_back(GridDensity::normalized(grid, std::move(v)));
  }
  RedundancyReport g = from_grids(dens, opts.normalization);
  rep.kl_per_channel = std::move(g.kl_per_channel);
  rep.avg_term = g.avg_term;
  rep.entropy_term = g.entropy_term;
  rep.r = g.r;
  rep.normalization = opts.normalization;
  rep.method = Method::Grid;
  rep.provenance.grid = grid;
  return rep;
}

namespace {

std::vector<bool> nondecreasing_flags(const std::vector<RedundancyReport>& rows) {
  std::vector<bool> out;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    out.push_back(rows[k + 1].r.value() >= rows[k].r.value());
  }
  return out;
}

void require_strictly_increasing(const std::vector<double>& v,
                                 const std::string& what) {
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    if (!(v[k] < v[k + 1])) {
      throw DomainError(what + " values must be distinct");
    }
  }
}

}  // namespace

SweepTable epsilon_sweep(const MultiChannelSystem& sys, const GainSet& gains,
                         std::vector<double> eps_list, Method method,
                         const RedundancyOptions& opts) {
  if (eps_list.empty()) throw DomainError("epsilon list is empty");
  for (double e : eps_list) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw DomainError("epsilon values must be finite and positive");
    }
  }
  std::sort(eps_list.begin(), eps_list.end());
  require_strictly_increasing(eps_list, "epsilon");

  SweepTable table;
  table.kind = SweepKind::Epsilon;
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    RedundancyOptions row_opts = opts;
    row_opts.mc.seed = derive_seed(opts.mc.seed, k);
    table.rows.push_back(systemic_redundancy(sys, gains, eps_list[k], method, row_opts));
  }
  table.nondecreasing = nondecreasing_flags(table.rows);

  const double d = static_cast<double>(sys.state_dim());
  if (sys.sigma().is_constant()) {
    const double r1 =
        closed_form_redundancy(sys, gains, 1.0, opts.normalization).r.value();
    table.r_at_unit_eps = r1;
    for (double e : eps_list) {
      table.scaling_law_prediction.push_back(r1 - d * std::log2(e));
    }
  }

  table.claim = "r(eps1) <= r(eps2) whenever eps1 <= eps2";
  const auto holds = static_cast<std::size_t>(
      std::count(table.nondecreasing.begin(), table.nondecreasing.end(), true));
  const std::size_t pairs = table.nondecreasing.size();
  std::ostringstream os;
  if (pairs == 0) {
    os << "single row; monotonicity not testable";
  } else if (holds == pairs) {
    os << "claim holds on all " << pairs << " adjacent pairs";
  } else {
    os << "claim violated on " << (pairs - holds) << " of " << pairs
       << " adjacent pairs: r decreases as eps increases";
  }
  if (table.r_at_unit_eps) {
    os << "; constant noise implies r(eps) = r(1) - " << sys.state_dim()
       << " * log2(eps), strictly decreasing in eps";
  }
  table.finding = os.str();
  return table;
}

SweepTable time_sweep(const MultiChannelSystem& sys, const GainSet& gains,
                      const GeneralDensity& rho0, std::vector<double> t_list,
                      std::optional<double> reference_eps,
                      const LiouvilleOptions& opts, Method reference_method,
                      const RedundancyOptions& reference_opts) {
  if (t_list.empty()) throw DomainError("time list is empty");
  for (double t : t_list) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw DomainError("times must be finite and nonnegative");
    }
  }
  std::sort(t_list.begin(), t_list.end());
  require_strictly_increasing(t_list, "time");

  SweepTable table;
  table.kind = SweepKind::Time;
  for (double t : t_list) {
    table.rows.push_back(liouville_redundancy(sys, gains, rho0, t, opts));
  }
  table.nondecreasing = nondecreasing_flags(table.rows);
  table.claim = "r(sigma, eps) > r_t for every t >= 0";
  std::ostringstream os;
  if (reference_eps) {
    table.reference = systemic_redundancy(sys, gains, *reference_eps,
                                          reference_method, reference_opts);
    std::size_t holds = 0;
    for (const auto& row : table.rows) {
      const bool exceeds = table.reference->r.value() > row.r.value();
      table.reference_exceeds.push_back(exceeds);
      holds += exceeds ? 1 : 0;
    }
    if (holds == table.rows.size()) {
      os << "claim holds at all " << holds << " sampled times";
    } else {
      os << "claim violated at " << (table.rows.size() - holds) << " of "
         << table.rows.size() << " sampled times";
    }
  } else {
    os << "no reference epsilon supplied; claim not evaluated";
  }
  table.finding = os.str();
  return table;
}

}  // namespace redunquant
