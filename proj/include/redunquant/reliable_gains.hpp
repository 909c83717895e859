#pragma once

#include <optional>
#include <vector>

#include "redunquant/errors.hpp"
#include "redunquant/system_model.hpp"

namespace redunquant {

/// Spectral abscissa of every failure mode; index 0 is the nominal loop.
struct ReliabilityReport {
  std::vector<double> abscissae;
  double margin = 0.0;  // -max(abscissae)
  bool reliable = false;

  friend bool operator==(const ReliabilityReport&, const ReliabilityReport&) = default;
};

/// Decides whether the nominal loop and every single-channel outage loop are
/// Hurwitz. Strict inequality, no slack.
ReliabilityReport verify_reliable(const MultiChannelSystem& sys,
                                  const GainSet& gains);

struct SynthesisOptions {
  std::optional<Matrix> Q_weight;         // identity when empty
  std::optional<std::vector<Matrix>> R_weights;  // identities when empty
  double theta_max = 1024.0;
  double margin_floor = 1e-6;
};

class SynthesisFailedError : public Error {
 public:
  SynthesisFailedError(const std::string& what, ReliabilityReport best,
                       double best_theta)
      : Error(what), best_(std::move(best)), best_theta_(best_theta) {}
  const ReliabilityReport& best_report() const noexcept { return best_; }
  double best_theta() const noexcept { return best_theta_; }

 private:
  ReliabilityReport best_;
  double best_theta_;
};

struct SynthesisResult {
  GainSet gains;
  double theta = 0.0;
  ReliabilityReport report;
};

/// Riccati gain-scaling search. For theta = 1, 2, 4, ... up to theta_max the
/// LQR problem with input weight blockdiag(R_i)/theta is solved and the
/// resulting per-channel gains are checked with verify_reliable; the first
/// theta whose margin clears margin_floor wins.
///
/// Failure is not a certificate that no reliable gain set exists.
SynthesisResult synthesize_gains(const MultiChannelSystem& sys,
                                 const SynthesisOptions& opts = {});

/// Stabilizing solution of A^T P + P A - P B R^{-1} B^T P + Q = 0.
///
/// Initialized from the stable invariant subspace of the Hamiltonian matrix
/// and refined by Newton-Kleinman until the relative residual drops below
/// 1e-9. Throws NumericalError when (A, B) is not stabilizable or the
/// iteration stalls.
Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R);

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P);

}  // namespace redunquant
