#pragma once

#include <limits>

#include "redunquant/densities.hpp"

namespace redunquant {

/// Information in bits. An infinite divergence (absolute continuity fails on
/// the grid) is carried as an explicit tag rather than a large float.
class Bits {
 public:
  constexpr Bits() = default;
  constexpr explicit Bits(double v) : value_(v) {}

  static constexpr Bits infinite() {
    Bits b(std::numeric_limits<double>::infinity());
    b.infinite_ = true;
    return b;
  }

  constexpr double value() const { return value_; }
  constexpr bool is_infinite() const { return infinite_; }

  friend constexpr bool operator==(const Bits&, const Bits&) = default;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Density floor below which a cell counts as empty.
inline constexpr double kDensityFloor = 1e-300;

/// 0.5 * log2((2 pi e)^d det(cov)). May be negative.
Bits gaussian_entropy(const GaussianDensity& g);

/// D(q || p) for Gaussians; q plays the role of the measure being compared.
Bits gaussian_kl(const GaussianDensity& q, const GaussianDensity& p);

/// -sum rho log2 rho * cell volume, with 0 log 0 = 0.
Bits grid_entropy(const GridDensity& rho);

/// sum q log2(q / p) * cell volume on a shared grid. Cells with q above the
/// floor and p at or below it make the result infinite.
Bits grid_kl(const GridDensity& q, const GridDensity& p);

}  // namespace redunquant
