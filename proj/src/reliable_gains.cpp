#include "redunquant/reliable_gains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace redunquant {

namespace {

constexpr double kCareTol = 1e-9;
constexpr int kMaxNewtonSteps = 60;

void require_spd(const Matrix& M, const std::string& name) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw DimensionError(name + " must be square");
  }
  if ((M - M.transpose()).norm() > 1e-12 * (1.0 + M.norm())) {
    throw DomainError(name + " must be symmetric");
  }
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw DomainError(name + " must be positive definite");
  }
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Matrix out = Matrix::Zero(n, n);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

double care_scale(const Matrix& A, const Matrix& G, const Matrix& Q,
                  const Matrix& P) {
  return 1.0 + Q.norm() + 2.0 * A.norm() * P.norm() + (P * G * P).norm();
}

// Stabilizing ARE solution from the stable invariant subspace of
// [[A, -G], [-Q, -A^T]].
Matrix hamiltonian_initial(const Matrix& A, const Matrix& G, const Matrix& Q) {
  const Eigen::Index d = A.rows();
  Matrix H(2 * d, 2 * d);
  H << A, -G, -Q, -A.transpose();
  Eigen::EigenSolver<Matrix> es(H, true);
  if (es.info() != Eigen::Success) {
    throw NumericalError("Hamiltonian eigen-decomposition did not converge");
  }
  const double tol = 1e-12 * (1.0 + H.norm());
  Eigen::MatrixXcd stable(2 * d, d);
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < 2 * d; ++k) {
    const double re = es.eigenvalues()(k).real();
    if (std::abs(re) <= tol) {
      throw NumericalError(
          "Hamiltonian has eigenvalues on the imaginary axis; (A, B) is not "
          "stabilizable or (A, Q) not detectable");
    }
    if (re < 0.0) {
      if (count == d) break;
      stable.col(count++) = es.eigenvectors().col(k);
    }
  }
  if (count != d) {
    throw NumericalError("Hamiltonian stable subspace has wrong dimension");
  }
  const Eigen::MatrixXcd X = stable.topRows(d);
  const Eigen::MatrixXcd Y = stable.bottomRows(d);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(X);
  if (!(std::abs(lu.determinant()) > 0.0) || lu.rcond() < 1e-14) {
    throw NumericalError("Hamiltonian stable subspace is not a graph");
  }
  // P X = Y  =>  X^T P^T = Y^T.
  const Eigen::MatrixXcd PT = X.transpose().partialPivLu().solve(Y.transpose());
  Matrix P = PT.transpose().real();
  return 0.5 * (P + P.transpose());
}

}  // namespace

ReliabilityReport verify_reliable(const MultiChannelSystem& sys,
                                  const GainSet& gains) {
  check_compatible(sys, gains);
  ReliabilityReport rep;
  rep.abscissae.reserve(sys.channels() + 1);
  for (std::size_t j = 0; j <= sys.channels(); ++j) {
    rep.abscissae.push_back(
        spectral_abscissa(closed_loop_matrix(sys, gains, FailureMode{j})));
  }
  const double worst =
      *std::max_element(rep.abscissae.begin(), rep.abscissae.end());
  rep.margin = -worst;
  rep.reliable = worst < 0.0;
  return rep;
}

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P) {
  const Matrix G = B * R.llt().solve(B.transpose());
  return (A.transpose() * P + P * A - P * G * P + Q).norm();
}

Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d || B.rows() != d || Q.rows() != d || Q.cols() != d ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DimensionError("inconsistent Riccati data");
  }
  Eigen::LLT<Matrix> Rllt(R);
  if (Rllt.info() != Eigen::Success) {
    throw DomainError("R must be positive definite");
  }
  const Matrix RinvBt = Rllt.solve(B.transpose());
  Matrix G = B * RinvBt;
  G = (0.5 * (G + G.transpose())).eval();

  Matrix P = hamiltonian_initial(A, G, Q);
  double res = (A.transpose() * P + P * A - P * G * P + Q).norm();
  for (int step = 0; step < kMaxNewtonSteps; ++step) {
    if (res <= kCareTol * care_scale(A, G, Q, P)) return P;
    // Newton-Kleinman: (A - B K)^T P+ + P+ (A - B K) + Q + K^T R K = 0.
    const Matrix K = RinvBt * P;
    const Matrix Ak = A - B * K;
    Matrix rhs = Q + K.transpose() * R * K;
    rhs = (0.5 * (rhs + rhs.transpose())).eval();
    Matrix next;
    try {
      next = solve_lyapunov(Ak.transpose(), rhs);
    } catch (const NotHurwitzError&) {
      throw NumericalError("Newton-Kleinman iterate lost stability");
    }
    const double next_res =
        (A.transpose() * next + next * A - next * G * next + Q).norm();
    P = std::move(next);
    res = next_res;
  }
  if (res <= kCareTol * care_scale(A, G, Q, P)) return P;
  throw NumericalError("Riccati iteration did not converge (residual " +
                       std::to_string(res) + ")");
}

SynthesisResult synthesize_gains(const MultiChannelSystem& sys,
                                 const SynthesisOptions& opts) {
  const Eigen::Index d = sys.state_dim();
  const std::size_t N = sys.channels();
  if (!(opts.theta_max >= 1.0) || !std::isfinite(opts.theta_max)) {
    throw DomainError("theta_max must be a finite value >= 1");
  }
  if (!(opts.margin_floor >= 0.0)) {
    throw DomainError("margin_floor must be nonnegative");
  }
  const Matrix Q = opts.Q_weight.value_or(Matrix::Identity(d, d));
  if (Q.rows() != d) throw DimensionError("Q_weight must be d x d");
  require_spd(Q, "Q_weight");

  std::vector<Matrix> R;
  if (opts.R_weights) {
    R = *opts.R_weights;
    if (R.size() != N) throw DimensionError("R_weights needs one block per channel");
  } else {
    for (std::size_t i = 0; i < N; ++i) {
      R.push_back(Matrix::Identity(sys.B(i).cols(), sys.B(i).cols()));
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (R[i].rows() != sys.B(i).cols()) {
      throw DimensionError("R_weights[" + std::to_string(i) + "] must be r_i x r_i");
    }
    require_spd(R[i], "R_weights[" + std::to_string(i) + "]");
  }

  const Matrix B = sys.stacked_inputs();
  const Matrix Rblk = block_diag(R);

  ReliabilityReport best;
  best.margin = -std::numeric_limits<double>::infinity();
  double best_theta = 0.0;
  for (double theta = 1.0; theta <= opts.theta_max; theta *= 2.0) {
    const Matrix P = solve_care(sys.A(), B, Q, Rblk / theta);
    GainSet gains;
    gains.K.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
      gains.K.push_back(-theta * R[i].llt().solve(sys.B(i).transpose() * P));
    }
    ReliabilityReport rep = verify_reliable(sys, gains);
    if (rep.reliable && rep.margin >= opts.margin_floor) {
      return SynthesisResult{std::move(gains), theta, std::move(rep)};
    }
    if (rep.margin > best.margin) {
      best = rep;
      best_theta = theta;
    }
  }
  throw SynthesisFailedError(
      "no theta <= " + std::to_string(opts.theta_max) +
          " produced a reliable gain set (best margin " +
          std::to_string(best.margin) +
          "); no certificate of impossibility",
      std::move(best), best_theta);
}

}  // namespace redunquant
