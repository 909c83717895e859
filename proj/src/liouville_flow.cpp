#include "redunquant/liouville_flow.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "redunquant/errors.hpp"

namespace redunquant {

namespace {

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("time must be finite and nonnegative");
  }
}

// Image of a box under x -> Phi x, as a bounding box.
Box image_box(const Matrix& Phi, const Box& box) {
  const Eigen::Index d = box.dim();
  Vector lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  const std::size_t corners = std::size_t{1} << static_cast<std::size_t>(d);
  for (std::size_t c = 0; c < corners; ++c) {
    Vector x(d);
    for (Eigen::Index a = 0; a < d; ++a) {
      x(a) = ((c >> static_cast<std::size_t>(a)) & 1U) ? box.hi(a) : box.lo(a);
    }
    const Vector y = Phi * x;
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  return Box{lo, hi};
}

}  // namespace

GeneralDensity GeneralDensity::uniform(Box box) {
  box.validate();
  return GeneralDensity(Uniform{std::move(box)});
}

Eigen::Index GeneralDensity::dim() const {
  return std::visit(
      [](const auto& s) -> Eigen::Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridDensity>) {
          return s.grid().dim();
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return s.box.dim();
        } else {
          return s.dim();
        }
      },
      shape_);
}

double GeneralDensity::evaluate(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("point dimension mismatch");
  return std::visit(
      [&x](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          if (!s.box.contains(x)) return 0.0;
          return 1.0 / (s.box.hi - s.box.lo).prod();
        } else if constexpr (std::is_same_v<T, GridDensity>) {
          return s.evaluate(x);
        } else {
          return s.pdf(x);
        }
      },
      shape_);
}

GaussianDensity pushforward_gaussian(const MultiChannelSystem& sys,
                                     const GainSet& gains, FailureMode mode,
                                     const GaussianDensity& g0, double t) {
  require_time(t);
  if (g0.dim() != sys.state_dim()) {
    throw DimensionError("initial density dimension mismatch");
  }
  const Matrix Phi = matrix_exponential(closed_loop_matrix(sys, gains, mode), t);
  Matrix cov = Phi * g0.cov() * Phi.transpose();
  cov = (0.5 * (cov + cov.transpose())).eval();
  return GaussianDensity(Phi * g0.mean(), std::move(cov));
}

double density_at(const MultiChannelSystem& sys, const GainSet& gains,
                  FailureMode mode, const GeneralDensity& rho0, double t,
                  const Vector& x, JacobianConvention conv) {
  require_time(t);
  if (rho0.dim() != sys.state_dim() || x.size() != sys.state_dim()) {
    throw DimensionError("density/point dimension mismatch");
  }
  const Matrix Aj = closed_loop_matrix(sys, gains, mode);
  const Vector x0 = matrix_exponential(Aj, -t) * x;
  const double trace = conv == JacobianConvention::MassConserving
                           ? Aj.trace()
                           : sys.A().trace();
  return rho0.evaluate(x0) * std::exp(-trace * t);
}

QuadratureResult integrate_density(const MultiChannelSystem& sys,
                                   const GainSet& gains, FailureMode mode,
                                   const GeneralDensity& rho0, double t,
                                   const Box& box, std::size_t points_per_axis,
                                   JacobianConvention conv) {
  require_time(t);
  box.validate();
  const Eigen::Index d = sys.state_dim();
  if (box.dim() != d || rho0.dim() != d) {
    throw DimensionError("box dimension mismatch");
  }
  if (points_per_axis < 3) {
    throw DomainError("trapezoid rule needs at least 3 points per axis");
  }
  // Pull-back map and Jacobian evaluated once; density_at per node would
  // recompute the matrix exponential.
  const Matrix Aj = closed_loop_matrix(sys, gains, mode);
  const Matrix back = matrix_exponential(Aj, -t);
  const double trace = conv == JacobianConvention::MassConserving
                           ? Aj.trace()
                           : sys.A().trace();
  const double jac = std::exp(-trace * t);

  const std::size_t n = points_per_axis;
  const Vector h = (box.hi - box.lo) / static_cast<double>(n - 1);
  std::size_t total = 1;
  for (Eigen::Index a = 0; a < d; ++a) total *= n;

  // Coarse rule reuses every other node; exact when n - 1 is even.
  const bool coarse_ok = (n - 1) % 2 == 0;
  double fine = 0.0;
  double coarse = 0.0;
  Vector x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w_fine = 1.0;
    double w_coarse = 1.0;
    bool on_coarse = coarse_ok;
    for (Eigen::Index a = 0; a < d; ++a) {
      const std::size_t i = rem % n;
      rem /= n;
      x(a) = box.lo(a) + static_cast<double>(i) * h(a);
      const bool edge = (i == 0 || i == n - 1);
      w_fine *= (edge ? 0.5 : 1.0) * h(a);
      if (i % 2 != 0) on_coarse = false;
      w_coarse *= (edge ? 0.5 : 1.0) * 2.0 * h(a);
    }
    const double f = rho0.evaluate(back * x) * jac;
    fine += w_fine * f;
    if (on_coarse) coarse += w_coarse * f;
  }
  QuadratureResult out;
  out.value = fine;
  out.tolerance = coarse_ok ? std::abs(fine - coarse) / 3.0
                            : std::numeric_limits<double>::quiet_NaN();
  return out;
}

Box transported_box(const MultiChannelSystem& sys, const GainSet& gains,
                    FailureMode mode, const GeneralDensity& rho0, double t,
                    double k) {
  require_time(t);
  if (const auto* g = rho0.as_gaussian()) {
    return gaussian_box(pushforward_gaussian(sys, gains, mode, *g, t), k);
  }
  const Matrix Phi = matrix_exponential(closed_loop_matrix(sys, gains, mode), t);
  return std::visit(
      [&Phi](const auto& s) -> Box {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GeneralDensity::Uniform>) {
          return image_box(Phi, s.box);
        } else if constexpr (std::is_same_v<T, GridDensity>) {
          return image_box(Phi, s.grid().box);
        } else {
          throw Error("unreachable");
        }
      },
      rho0.shape());
}

}  // namespace redunquant
