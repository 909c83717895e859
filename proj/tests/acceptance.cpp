// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "redunquant/errors.hpp"
#include "redunquant/liouville_flow.hpp"
#include "redunquant/redundancy.hpp"
#include "redunquant/reliable_gains.hpp"
#include "redunquant/stochastic_engine.hpp"

using namespace redunquant;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr int kReliabilityInstances = 1000;
constexpr int kLyapunovInstances = 200;
constexpr double kLyapunovRel = 1e-10;
constexpr double kOuVarianceRel = 0.03;
constexpr double kOuGridL1 = 1e-3;
constexpr double kResidualRatioLo = 2.5, kResidualRatioHi = 6.0;
constexpr double kInfoTol = 1e-3;
constexpr int kKlPairs = 500;
constexpr double kKlZero = 1e-12;
constexpr double kTwinScalar = 2.8924;
constexpr double kTwinClosedTol = 1e-3, kTwinMcTol = 0.05;
constexpr int kScalingInstances = 20;
constexpr double kScalingTol = 1e-9;
constexpr double kLiouvilleStartTol = 1e-6;
constexpr double kTwinTrajectory = 1.7000, kTwinTrajectoryTol = 1e-3;
constexpr double kMassTol = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(REDUNQUANT_BIN) + " " + args + " 2>/dev/null";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("redunquant_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kTwinConfig = R"({"schema_version":"1",
  "system":{"A":[[1]],"B":[[[1]],[[1]]],"sigma":{"type":"constant","S":[[1]]}},
  "gains":[[[-2]],[[-2]]],"epsilon":0.1})";

Outcome reliability_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dd(1, 4), nn(1, 3);
  int disagree = 0, reliable = 0;
  for (int k = 0; k < kReliabilityInstances; ++k) {
    auto inst = fixture::random_instance(rng, dd(rng), nn(rng));
    bool all = true;
    for (std::size_t j = 0; j <= inst.sys.channels(); ++j) {
      const Matrix M = closed_loop_matrix(inst.sys, inst.gains, FailureMode(j));
      all = all && oracle::routh_hurwitz_stable(oracle::charpoly(M));
    }
    const bool got = verify_reliable(inst.sys, inst.gains).reliable;
    disagree += got != all;
    reliable += all;
  }
  return {disagree == 0, std::to_string(disagree) + " disagreements on " +
                             std::to_string(kReliabilityInstances) + " instances (" +
                             std::to_string(reliable) + " reliable)"};
}

Outcome lyapunov_residual_check() {
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> dd(1, 8);
  std::uniform_real_distribution<double> gap(0.05, 1.0);
  double worst = 0.0;
  for (int k = 0; k < kLyapunovInstances; ++k) {
    const int d = dd(rng);
    Matrix A = fixture::uniform_matrix(rng, d, d, -2, 2);
    A -= (oracle::abscissa(A) + gap(rng)) * Matrix::Identity(d, d);
    const Matrix G = fixture::uniform_matrix(rng, d, d, -1, 1);
    const Matrix Q = G * G.transpose() + 0.1 * Matrix::Identity(d, d);
    const Matrix P = solve_lyapunov(A, Q);
    const double res = (A * P + P * A.transpose() + Q).norm();
    const double bound = kLyapunovRel * (1.0 + Q.norm() + A.norm() * P.norm());
    worst = std::max(worst, res / bound);
  }
  return {worst <= 1.0, "worst residual / bound = " + fmt("%.3g", worst)};
}

Outcome ou_triple() {
  const auto sys = fixture::ou_system();
  const auto K = fixture::ou_gains();
  const auto mode = FailureMode::nominal();
  const double v_exact = stationary_gaussian(sys, K, mode, 1.0).cov()(0, 0);

  SdeRun run;
  run.horizon = 20.0;
  run.dt = 1e-3;
  run.n_paths = 200000;
  run.seed = 3003;
  const auto s = simulate_sde(sys, K, mode, 1.0, run);
  const double mean = s.samples.mean();
  const double v_mc = (s.samples.array() - mean).square().sum() / (s.size() - 1);

  const CellGrid grid = default_fp_grid(sys, K, mode, 1.0, 801);
  const auto rho = solve_stationary_fp_grid(sys, K, mode, 1.0, grid);
  const auto ref = discretize(GaussianDensity(Vector::Zero(1), Matrix::Constant(1, 1, 0.5)), grid);
  double l1 = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) l1 += std::abs(rho.value(c) - ref.value(c));
  l1 *= grid.cell_volume();

  const double rel = std::abs(v_mc - 0.5) / 0.5;
  const bool ok = std::abs(v_exact - 0.5) < 1e-12 && rel <= kOuVarianceRel && l1 <= kOuGridL1;
  return {ok, "closed form " + fmt("%.12g", v_exact) + ", Monte Carlo " + fmt("%.5f", v_mc) +
                  " (rel err " + fmt("%.4f", rel) + "), grid L1 " + fmt("%.2e", l1)};
}

Outcome fp_residual_convergence() {
  std::ostringstream os;
  bool ok = true;
  auto ladder = [&](const char* label, const MultiChannelSystem& sys, const GainSet& K,
                    double half_width) {
    const auto g = stationary_gaussian(sys, K, FailureMode::nominal(), 1.0);
    const Eigen::Index d = sys.state_dim();
    std::vector<double> res;
    for (double h : {0.04, 0.02, 0.01}) {
      const auto n = static_cast<std::size_t>(std::llround(2 * half_width / h));
      const CellGrid grid(Box{Vector::Constant(d, -half_width), Vector::Constant(d, half_width)},
                          std::vector<std::size_t>(d, n));
      res.push_back(fp_residual(g, sys, K, FailureMode::nominal(), 1.0, grid));
    }
    if (os.tellp() > 0) os << "; ";
    os << label << " ratios";
    for (std::size_t k = 0; k + 1 < res.size(); ++k) {
      const double ratio = res[k] / res[k + 1];
      ok = ok && ratio >= kResidualRatioLo && ratio <= kResidualRatioHi;
      os << " " << fmt("%.3f", ratio);
    }
  };
  ladder("1d", fixture::ou_system(), fixture::ou_gains(), 4.0);
  Matrix A(2, 2);
  A << -1.0, 0.5, -0.3, -0.8;
  Matrix S(2, 2);
  S << 1.0, 0.0, 0.4, 0.7;
  ladder("2d", MultiChannelSystem(A, {Matrix::Identity(2, 2)}, DiffusionSpec::constant(S)),
         GainSet{{Matrix::Zero(2, 2)}}, 3.0);
  return {ok, os.str()};
}

Outcome information_consistency() {
  double worst = 0.0;
  // 1D: entropy and KL on a shared grid.
  const GaussianDensity p1(Vector::Constant(1, 0.0), Matrix::Constant(1, 1, 0.7));
  const GaussianDensity q1(Vector::Constant(1, 0.4), Matrix::Constant(1, 1, 0.3));
  const CellGrid g1(Box{Vector::Constant(1, -8.0), Vector::Constant(1, 8.0)}, {4001});
  worst = std::max(worst, std::abs(grid_entropy(discretize(p1, g1)).value() -
                                   gaussian_entropy(p1).value()));
  worst = std::max(worst, std::abs(grid_kl(discretize(q1, g1), discretize(p1, g1)).value() -
                                   gaussian_kl(q1, p1).value()));
  // 2D: correlated pair.
  Matrix C2(2, 2), D2(2, 2);
  C2 << 1.0, 0.4, 0.4, 0.6;
  D2 << 0.5, -0.1, -0.1, 0.8;
  const GaussianDensity p2(Vector::Zero(2), C2);
  const GaussianDensity q2(Vector::Constant(2, 0.3), D2);
  const CellGrid g2(Box{Vector::Constant(2, -7.0), Vector::Constant(2, 7.0)}, {401, 401});
  worst = std::max(worst, std::abs(grid_entropy(discretize(p2, g2)).value() -
                                   gaussian_entropy(p2).value()));
  worst = std::max(worst, std::abs(grid_kl(discretize(q2, g2), discretize(p2, g2)).value() -
                                   gaussian_kl(q2, p2).value()));

  std::mt19937_64 rng(5005);
  int bad = 0;
  for (int k = 0; k < kKlPairs; ++k) {
    const int d = 1 + k % 4;
    const Matrix G = fixture::uniform_matrix(rng, d, d, -1, 1);
    const Matrix H = fixture::uniform_matrix(rng, d, d, -1, 1);
    const GaussianDensity q(fixture::uniform_matrix(rng, d, 1, -1, 1),
                            G * G.transpose() + 0.1 * Matrix::Identity(d, d));
    const GaussianDensity p(fixture::uniform_matrix(rng, d, 1, -1, 1),
                            H * H.transpose() + 0.1 * Matrix::Identity(d, d));
    const double kl = gaussian_kl(q, p).value();
    const double self = gaussian_kl(q, q).value();
    bad += !(kl > kKlZero) || !(std::abs(self) <= kKlZero) || !(gaussian_kl(p, p).value() >= 0.0);
  }
  return {worst <= kInfoTol && bad == 0,
          "max |closed form - grid| = " + fmt("%.2e", worst) + " bits; " + std::to_string(bad) +
              " of " + std::to_string(kKlPairs) + " pairs violate positivity or zero-iff-equal"};
}

Outcome twin_scalar_end_to_end() {
  const auto dir = scratch("twin");
  std::ofstream(dir / "config.json") << kTwinConfig;
  const std::string base = "redundancy --config " + (dir / "config.json").string();
  const int rc1 = run_cli(base + " --out " + (dir / "closed").string());
  const int rc2 = run_cli(base + " --method monte_carlo --out " + (dir / "mc").string());
  if (rc1 != 0 || rc2 != 0) {
    return {false, "exit codes " + std::to_string(rc1) + ", " + std::to_string(rc2)};
  }
  auto r_of = [&](const char* sub) {
    return nlohmann::json::parse(slurp(dir / sub / "report.json"))["outputs"]["redundancy"]["r"]
        .get<double>();
  };
  const double rc = r_of("closed"), rm = r_of("mc");
  return {std::abs(rc - kTwinScalar) <= kTwinClosedTol && std::abs(rm - kTwinScalar) <= kTwinMcTol,
          "closed form " + fmt("%.6f", rc) + ", Monte Carlo " + fmt("%.4f", rm) + " bits"};
}

Outcome scaling_law() {
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> ue(0.05, 2.0);
  double worst = 0.0;
  int flagged = 0;
  for (int k = 0; k < kScalingInstances; ++k) {
    const int d = 1 + k % 3;
    auto inst = fixture::random_reliable_instance(rng, d);
    const double eps = ue(rng);
    const auto t = epsilon_sweep(inst.sys, inst.gains, {eps / 2, eps}, Method::ClosedForm);
    const double diff = t.rows[0].r.value() - t.rows[1].r.value();
    worst = std::max(worst, std::abs(diff - d));
    const bool records = !t.nondecreasing.front() &&
                         t.finding.find("violated") != std::string::npos &&
                         t.finding.find("decreas") != std::string::npos;
    flagged += records;
  }
  return {worst <= kScalingTol && flagged == kScalingInstances,
          "max |r(eps/2) - r(eps) - d| = " + fmt("%.2e", worst) + "; " +
              std::to_string(flagged) + " of " + std::to_string(kScalingInstances) +
              " sweeps flag the decrease"};
}

Outcome liouville_trajectory() {
  std::mt19937_64 rng(8008);
  double worst_start = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int d = 1 + k % 3;
    auto inst = fixture::random_reliable_instance(rng, d);
    const Matrix G = fixture::uniform_matrix(rng, d, d, -1, 1);
    const GaussianDensity g0(fixture::uniform_matrix(rng, d, 1, -1, 1),
                             G * G.transpose() + 0.2 * Matrix::Identity(d, d));
    const double r0 = liouville_redundancy(inst.sys, inst.gains, g0, 0.0).r.value();
    worst_start = std::max(worst_start, std::abs(r0 + gaussian_entropy(g0).value()));
  }

  const auto sys = fixture::twin_scalar_system();
  const auto K = fixture::twin_scalar_gains();
  const auto rho0 = GaussianDensity::standard(1);
  const double rt = liouville_redundancy(sys, K, rho0, 0.5).r.value();

  double worst_mass = 0.0;
  for (double t : {0.0, 0.5, 1.0, 2.0}) {
    for (std::size_t j = 0; j <= sys.channels(); ++j) {
      const Box box = transported_box(sys, K, FailureMode(j), rho0, t);
      const auto q = integrate_density(sys, K, FailureMode(j), rho0, t, box, 2001);
      worst_mass = std::max(worst_mass, std::abs(q.value - 1.0));
    }
  }
  const bool ok = worst_start <= kLiouvilleStartTol &&
                  std::abs(rt - kTwinTrajectory) <= kTwinTrajectoryTol && worst_mass <= kMassTol;
  return {ok, "max |r_0 + H(rho0)| = " + fmt("%.2e", worst_start) + "; two-channel scalar r_0.5 = " +
                  fmt("%.6f", rt) + "; max |mass - 1| = " + fmt("%.2e", worst_mass)};
}

Outcome determinism() {
  const auto dir = scratch("determinism");
  std::ofstream(dir / "config.json") << R"({"schema_version":"1",
    "system":{"A":[[1]],"B":[[[1]],[[1]]]},"gains":[[[-2]],[[-2]]],
    "epsilon":[0.05,0.1,0.2],"method":"monte_carlo","seed":123,
    "monte_carlo":{"n_paths":20000}})";
  const std::string base = "sweep-eps --config " + (dir / "config.json").string();
  const int a = run_cli(base + " --threads 1 --out " + (dir / "a").string());
  const int b = run_cli(base + " --threads 4 --out " + (dir / "b").string());
  if (a != 0 || b != 0) return {false, "exit codes " + std::to_string(a) + ", " + std::to_string(b)};
  bool same = true;
  for (const char* f : {"report.json", "sweep.csv"}) {
    same = same && slurp(dir / "a" / f) == slurp(dir / "b" / f) && !slurp(dir / "a" / f).empty();
  }
  return {same, same ? "report.json and sweep.csv byte-identical at 1 and 4 threads"
                     : "outputs differ between runs"};
}

Outcome synthesis_soundness() {
  std::mt19937_64 rng(10010);
  std::uniform_int_distribution<int> dd(1, 3), nn(2, 3);
  int successes = 0, unsound = 0, failures = 0;
  for (int k = 0; k < 40; ++k) {
    const int d = dd(rng), n = nn(rng);
    std::vector<Matrix> B;
    for (int i = 0; i < n; ++i) B.push_back(fixture::uniform_matrix(rng, d, d, -2, 2));
    MultiChannelSystem sys(fixture::uniform_matrix(rng, d, d, -2, 2), B,
                           DiffusionSpec::constant(Matrix::Identity(d, d)));
    try {
      const auto res = synthesize_gains(sys);
      ++successes;
      unsound += !verify_reliable(sys, res.gains).reliable;
    } catch (const SynthesisFailedError&) {
      ++failures;
    }
  }
  bool impossible_fails = false;
  MultiChannelSystem bad(Matrix::Constant(1, 1, 1.0),
                         {Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1)},
                         DiffusionSpec::constant(Matrix::Identity(1, 1)));
  try {
    synthesize_gains(bad);
  } catch (const SynthesisFailedError&) {
    impossible_fails = true;
  }
  const auto dir = scratch("synth");
  std::ofstream(dir / "config.json")
      << R"({"schema_version":"1","system":{"A":[[1]],"B":[[[1]],[[0]]]}})";
  const int rc = run_cli("synth --config " + (dir / "config.json").string() + " --out " +
                         dir.string());
  const bool ok = successes > 0 && unsound == 0 && impossible_fails && rc == 2;
  return {ok, std::to_string(successes) + " successes, " + std::to_string(unsound) +
                  " unsound, " + std::to_string(failures) +
                  " declined; impossible instance " +
                  (impossible_fails ? "fails" : "did not fail") + " (exit " +
                  std::to_string(rc) + ")"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "reliability oracle equivalence", 30, reliability_oracle},
      {2, "lyapunov residual", 10, lyapunov_residual_check},
      {3, "OU stationarity triple agreement", 120, ou_triple},
      {4, "FP residual convergence", 10, fp_residual_convergence},
      {5, "information-measure consistency", 30, information_consistency},
      {6, "end-to-end redundancy, two-channel scalar plant", 60, twin_scalar_end_to_end},
      {7, "constant-noise epsilon scaling", 30, scaling_law},
      {8, "Liouville trajectory", 60, liouville_trajectory},
      {9, "determinism", 60, determinism},
      {10, "synthesis soundness", 30, synthesis_soundness},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail
              << " [" << fmt("%.1f", secs) << " s, limit " << fmt("%.0f", c.limit_s) << " s"
              << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
