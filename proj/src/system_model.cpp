#include "redunquant/system_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

#include "redunquant/errors.hpp"

namespace redunquant {

namespace {

constexpr double kMinKappa = 1e-12;
constexpr double kEigenResidualTol = 1e-10;

bool all_finite(const Matrix& M) { return M.allFinite(); }

std::string shape_of(const Matrix& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

}  // namespace

DiffusionSpec DiffusionSpec::constant(Matrix S) {
  if (S.rows() == 0 || S.cols() == 0) {
    throw DimensionError("constant diffusion matrix must be non-empty");
  }
  if (!all_finite(S)) {
    throw DomainError("constant diffusion matrix has non-finite entries");
  }
  const Matrix SSt = S * S.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(SSt, Eigen::EigenvaluesOnly);
  const double kappa = eig.eigenvalues().minCoeff();
  if (!(kappa > kMinKappa)) {
    throw DomainError("diffusion S S^T is not uniformly elliptic (least eigenvalue " +
                      std::to_string(kappa) + ")");
  }
  return DiffusionSpec(Constant{std::move(S)}, kappa);
}

DiffusionSpec DiffusionSpec::diag_affine(Vector c, Vector s) {
  if (c.size() == 0 || c.size() != s.size()) {
    throw DimensionError("diag-affine diffusion needs c and s of equal, positive length");
  }
  if (!c.allFinite() || !s.allFinite()) {
    throw DomainError("diag-affine diffusion has non-finite entries");
  }
  if ((s.array() < 0.0).any()) {
    throw DomainError("diag-affine diffusion slopes s must be nonnegative");
  }
  const double cmin = c.minCoeff();
  if (!(cmin > 0.0) || !(cmin * cmin > kMinKappa)) {
    throw DomainError("diag-affine diffusion offsets c must be positive");
  }
  return DiffusionSpec(DiagAffine{std::move(c), std::move(s)}, cmin * cmin);
}

const DiffusionSpec::Constant& DiffusionSpec::as_constant() const {
  if (const auto* p = std::get_if<Constant>(&shape_)) return *p;
  throw UnsupportedDiffusionError("diffusion is not constant");
}

const DiffusionSpec::DiagAffine& DiffusionSpec::as_diag_affine() const {
  if (const auto* p = std::get_if<DiagAffine>(&shape_)) return *p;
  throw UnsupportedDiffusionError("diffusion is not diag-affine");
}

Eigen::Index DiffusionSpec::dim() const {
  return std::visit(
      [](const auto& v) -> Eigen::Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return v.S.rows();
        } else {
          return v.c.size();
        }
      },
      shape_);
}

Eigen::Index DiffusionSpec::noise_dim() const {
  return std::visit(
      [](const auto& v) -> Eigen::Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return v.S.cols();
        } else {
          return v.c.size();
        }
      },
      shape_);
}

Matrix DiffusionSpec::sigma_at(const Vector& x) const {
  return std::visit(
      [&x](const auto& v) -> Matrix {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return v.S;
        } else {
          return (v.c.array() + v.s.array() * x.array().abs())
              .matrix()
              .asDiagonal();
        }
      },
      shape_);
}

Matrix DiffusionSpec::diffusion_at(const Vector& x) const {
  const Matrix s = sigma_at(x);
  return s * s.transpose();
}

MultiChannelSystem::MultiChannelSystem(Matrix A, std::vector<Matrix> B,
                                       DiffusionSpec sigma)
    : A_(std::move(A)), B_(std::move(B)), sigma_(std::move(sigma)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) {
    throw DimensionError("A must be square and non-empty, got " + shape_of(A_));
  }
  if (!all_finite(A_)) throw DomainError("A has non-finite entries");
  if (B_.empty()) throw DimensionError("at least one input channel is required");
  for (std::size_t i = 0; i < B_.size(); ++i) {
    if (B_[i].rows() != A_.rows() || B_[i].cols() == 0) {
      throw DimensionError("B[" + std::to_string(i) + "] has shape " +
                           shape_of(B_[i]) + ", expected " +
                           std::to_string(A_.rows()) + " rows");
    }
    if (!all_finite(B_[i])) {
      throw DomainError("B[" + std::to_string(i) + "] has non-finite entries");
    }
  }
  if (sigma_.dim() != A_.rows()) {
    throw DimensionError("diffusion has " + std::to_string(sigma_.dim()) +
                         " rows, expected " + std::to_string(A_.rows()));
  }
}

Matrix MultiChannelSystem::stacked_inputs() const {
  Eigen::Index cols = 0;
  for (const auto& b : B_) cols += b.cols();
  Matrix out(A_.rows(), cols);
  Eigen::Index at = 0;
  for (const auto& b : B_) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

void check_compatible(const MultiChannelSystem& sys, const GainSet& gains) {
  if (gains.size() != sys.channels()) {
    throw DimensionError("expected " + std::to_string(sys.channels()) +
                         " gains, got " + std::to_string(gains.size()));
  }
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const Matrix& K = gains.K[i];
    if (K.rows() != sys.B(i).cols() || K.cols() != sys.state_dim()) {
      throw DimensionError("K[" + std::to_string(i) + "] has shape " +
                           shape_of(K) + ", expected " +
                           std::to_string(sys.B(i).cols()) + "x" +
                           std::to_string(sys.state_dim()));
    }
  }
}

Matrix closed_loop_matrix(const MultiChannelSystem& sys, const GainSet& gains,
                          FailureMode mode) {
  check_compatible(sys, gains);
  if (mode.index() > sys.channels()) {
    throw DimensionError("failure mode " + std::to_string(mode.index()) +
                         " exceeds channel count " +
                         std::to_string(sys.channels()));
  }
  Matrix Acl = sys.A();
  for (std::size_t i = 0; i < sys.channels(); ++i) {
    if (i + 1 == mode.index()) continue;
    Acl.noalias() += sys.B(i) * gains.K[i];
  }
  return Acl;
}

double spectral_abscissa(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw DimensionError("spectral abscissa needs a square matrix, got " +
                         shape_of(M));
  }
  if (!all_finite(M)) throw NumericalError("matrix has non-finite entries");
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration did not converge");
  }
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::MatrixXcd Mc = M.cast<std::complex<double>>();
  const double scale = 1.0 + M.norm();
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    const double res = (Mc * V.col(k) - lambda(k) * V.col(k)).norm() /
                       std::max(V.col(k).norm(), 1e-300);
    if (res > kEigenResidualTol * scale) {
      throw NumericalError("eigenpair residual " + std::to_string(res) +
                           " exceeds tolerance");
    }
  }
  return lambda.real().maxCoeff();
}

Matrix matrix_exponential(const Matrix& M, double t) {
  if (M.rows() != M.cols()) {
    throw DimensionError("matrix exponential needs a square matrix, got " +
                         shape_of(M));
  }
  if (!all_finite(M) || !std::isfinite(t)) {
    throw NumericalError("matrix exponential of non-finite input");
  }
  const Matrix Mt = M * t;
  Matrix E = Mt.exp();
  if (!all_finite(E)) {
    throw NumericalError("matrix exponential overflowed (|Mt|_F = " +
                         std::to_string(Mt.norm()) + ")");
  }
  return E;
}

Matrix solve_lyapunov(const Matrix& Acl, const Matrix& Q) {
  const Eigen::Index d = Acl.rows();
  if (Acl.cols() != d || Q.rows() != d || Q.cols() != d || d == 0) {
    throw DimensionError("Lyapunov solve needs square Acl and Q of equal size, got " +
                         shape_of(Acl) + " and " + shape_of(Q));
  }
  if (!all_finite(Q)) throw DomainError("Q has non-finite entries");
  if ((Q - Q.transpose()).norm() > 1e-10 * (1.0 + Q.norm())) {
    throw DomainError("Q must be symmetric");
  }
  const double alpha = spectral_abscissa(Acl);
  if (!(alpha < 0.0)) {
    throw NotHurwitzError("Lyapunov solve needs a Hurwitz matrix (spectral abscissa " +
                          std::to_string(alpha) + ")");
  }

  // vec(Acl P + P Acl^T) = (I (x) Acl + Acl (x) I) vec(P), column-major vec.
  const Eigen::Index n = d * d;
  Matrix L = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Index row = i + j * d;
      for (Eigen::Index k = 0; k < d; ++k) {
        L(row, k + j * d) += Acl(i, k);
        L(row, i + k * d) += Acl(j, k);
      }
    }
  }
  Eigen::PartialPivLU<Matrix> lu(L);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) {
    throw NumericalError("Lyapunov operator is numerically singular (rcond " +
                         std::to_string(rcond) + ")");
  }
  const Vector rhs = -Eigen::Map<const Vector>(Matrix(Q).data(), n);
  const Vector p = lu.solve(rhs);
  Matrix P = Eigen::Map<const Matrix>(p.data(), d, d);
  P = (0.5 * (P + P.transpose())).eval();
  if (!all_finite(P)) throw NumericalError("Lyapunov solution is not finite");
  return P;
}

double lyapunov_residual(const Matrix& Acl, const Matrix& P, const Matrix& Q) {
  return (Acl * P + P * Acl.transpose() + Q).norm();
}

}  // namespace redunquant
