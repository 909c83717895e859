#pragma once

#include <variant>

#include "redunquant/densities.hpp"
#include "redunquant/system_model.hpp"

namespace redunquant {

/// Initial density for the Liouville transport. Uniform boxes are admitted
/// alongside smooth densities; they make closed-form checks easy.
class GeneralDensity {
 public:
  struct Uniform {
    Box box;
  };
  using Shape = std::variant<GaussianDensity, GridDensity, Uniform>;

  GeneralDensity(GaussianDensity g) : shape_(std::move(g)) {}  // NOLINT
  GeneralDensity(GridDensity g) : shape_(std::move(g)) {}      // NOLINT
  static GeneralDensity uniform(Box box);

  Eigen::Index dim() const;
  double evaluate(const Vector& x) const;
  const Shape& shape() const { return shape_; }
  const GaussianDensity* as_gaussian() const {
    return std::get_if<GaussianDensity>(&shape_);
  }

 private:
  explicit GeneralDensity(Uniform u) : shape_(std::move(u)) {}
  Shape shape_;
};

/// Which volume factor the transported density carries.
///
/// MassConserving divides by det(exp(A_j t)) = exp(trace(A_j) t) of the
/// closed loop actually flowing the state. PaperLiteral uses trace of the
/// open-loop plant matrix A instead; it does not conserve mass whenever the
/// feedback changes the trace, and exists for side-by-side comparison.
enum class JacobianConvention { MassConserving, PaperLiteral };

/// Exact transport of a Gaussian: N(Phi m, Phi P Phi^T), Phi = exp(A_j t).
GaussianDensity pushforward_gaussian(const MultiChannelSystem& sys,
                                     const GainSet& gains, FailureMode mode,
                                     const GaussianDensity& g0, double t);

/// rho_j(t, x) = rho0(exp(-A_j t) x) * exp(-trace(A_j) t).
double density_at(const MultiChannelSystem& sys, const GainSet& gains,
                  FailureMode mode, const GeneralDensity& rho0, double t,
                  const Vector& x,
                  JacobianConvention conv = JacobianConvention::MassConserving);

struct QuadratureResult {
  double value = 0.0;
  /// |I_h - I_2h| / 3: Richardson estimate of the trapezoid error.
  double tolerance = 0.0;
};

/// Tensor trapezoid rule of density_at over `box` with `points_per_axis`
/// nodes per axis (endpoints included).
QuadratureResult integrate_density(
    const MultiChannelSystem& sys, const GainSet& gains, FailureMode mode,
    const GeneralDensity& rho0, double t, const Box& box,
    std::size_t points_per_axis,
    JacobianConvention conv = JacobianConvention::MassConserving);

/// A box holding the transported density: k standard deviations of the
/// pushforward for Gaussians, the bounding box of the image of the support
/// otherwise.
Box transported_box(const MultiChannelSystem& sys, const GainSet& gains,
                    FailureMode mode, const GeneralDensity& rho0, double t,
                    double k = 8.0);

}  // namespace redunquant
