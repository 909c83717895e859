#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <variant>
#include <vector>

namespace redunquant {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Noise matrix sigma(x) multiplying the Wiener increment.
///
/// Two shapes are supported: a constant d x m matrix S, and the diagonal
/// affine field sigma(x) = diag(c_i + s_i |x_i|). Both are Lipschitz and
/// uniformly elliptic (sigma sigma^T >= kappa I) by construction.
class DiffusionSpec {
 public:
  struct Constant {
    Matrix S;
  };
  struct DiagAffine {
    Vector c;
    Vector s;
  };

  static DiffusionSpec constant(Matrix S);
  static DiffusionSpec diag_affine(Vector c, Vector s);

  bool is_constant() const { return std::holds_alternative<Constant>(shape_); }
  const Constant& as_constant() const;
  const DiagAffine& as_diag_affine() const;

  Eigen::Index dim() const;
  Eigen::Index noise_dim() const;
  double kappa() const { return kappa_; }

  /// sigma(x), d x m.
  Matrix sigma_at(const Vector& x) const;
  /// sigma(x) sigma(x)^T, d x d.
  Matrix diffusion_at(const Vector& x) const;

 private:
  DiffusionSpec(std::variant<Constant, DiagAffine> shape, double kappa)
      : shape_(std::move(shape)), kappa_(kappa) {}

  std::variant<Constant, DiagAffine> shape_;
  double kappa_;
};

/// x' = A x + sum_i B_i u_i, with the noise model used for the perturbed
/// closed loops.
class MultiChannelSystem {
 public:
  MultiChannelSystem(Matrix A, std::vector<Matrix> B, DiffusionSpec sigma);

  Eigen::Index state_dim() const { return A_.rows(); }
  std::size_t channels() const { return B_.size(); }
  const Matrix& A() const { return A_; }
  const std::vector<Matrix>& B() const { return B_; }
  const Matrix& B(std::size_t i) const { return B_.at(i); }
  const DiffusionSpec& sigma() const { return sigma_; }

  /// [B_1 ... B_N]
  Matrix stacked_inputs() const;

 private:
  Matrix A_;
  std::vector<Matrix> B_;
  DiffusionSpec sigma_;
};

/// State-feedback gains u_i = K_i x, one per channel.
struct GainSet {
  std::vector<Matrix> K;

  std::size_t size() const { return K.size(); }
};

/// j = 0 is the nominal configuration; j >= 1 removes channel j.
class FailureMode {
 public:
  constexpr FailureMode() = default;
  constexpr explicit FailureMode(std::size_t j) : j_(j) {}

  static constexpr FailureMode nominal() { return FailureMode{}; }
  static constexpr FailureMode outage(std::size_t channel) {
    return FailureMode{channel};
  }

  constexpr std::size_t index() const { return j_; }
  constexpr bool is_nominal() const { return j_ == 0; }

  friend constexpr bool operator==(FailureMode, FailureMode) = default;

 private:
  std::size_t j_ = 0;
};

/// Throws DimensionError unless the gains fit the plant.
void check_compatible(const MultiChannelSystem& sys, const GainSet& gains);

/// A + sum_{i != j} B_i K_i (all channels for the nominal mode).
Matrix closed_loop_matrix(const MultiChannelSystem& sys, const GainSet& gains,
                          FailureMode mode);

/// max Re(lambda) over the spectrum of M.
double spectral_abscissa(const Matrix& M);

/// exp(M t).
Matrix matrix_exponential(const Matrix& M, double t);

/// Solves Acl P + P Acl^T + Q = 0 for a Hurwitz Acl by Kronecker
/// vectorization. The result is symmetrized.
Matrix solve_lyapunov(const Matrix& Acl, const Matrix& Q);

/// Frobenius residual of the Lyapunov equation, for diagnostics.
double lyapunov_residual(const Matrix& Acl, const Matrix& P, const Matrix& Q);

}  // namespace redunquant
