#include "redunquant/info_measures.hpp"

#include <cmath>
#include <numbers>

#include "redunquant/errors.hpp"

namespace redunquant {

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

Eigen::LLT<Matrix> spd_factor(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success ||
      !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw DomainError("covariance is not positive definite");
  }
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Rounding leaves tiny negative values when the arguments coincide; anything
// larger is returned as is so that a genuine violation stays visible.
double clamp_rounding(double v) { return (v < 0.0 && v > -1e-12) ? 0.0 : v; }

}  // namespace

Bits gaussian_entropy(const GaussianDensity& g) {
  const auto llt = spd_factor(g.cov());
  const double d = static_cast<double>(g.dim());
  const double nats =
      0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det(llt));
  return Bits(nats * kInvLn2);
}

Bits gaussian_kl(const GaussianDensity& q, const GaussianDensity& p) {
  if (q.dim() != p.dim()) throw DimensionError("KL arguments differ in dimension");
  const auto lq = spd_factor(q.cov());
  const auto lp = spd_factor(p.cov());
  const double d = static_cast<double>(q.dim());
  const double trace = lp.solve(q.cov()).trace();
  const Vector dm = q.mean() - p.mean();
  const double maha = dm.dot(lp.solve(dm));
  const double nats = 0.5 * (trace - d + maha + log_det(lp) - log_det(lq));
  return Bits(clamp_rounding(nats) * kInvLn2);
}

Bits grid_entropy(const GridDensity& rho) {
  double acc = 0.0;
  for (double v : rho.values()) {
    if (v <= 0.0) continue;
    acc -= v * std::log2(std::max(v, kDensityFloor));
  }
  return Bits(acc * rho.grid().cell_volume());
}

Bits grid_kl(const GridDensity& q, const GridDensity& p) {
  if (!(q.grid() == p.grid())) {
    throw GridMismatchError("grid_kl needs both densities on the same grid");
  }
  double acc = 0.0;
  const auto& qv = q.values();
  const auto& pv = p.values();
  for (std::size_t c = 0; c < qv.size(); ++c) {
    if (qv[c] <= kDensityFloor) continue;
    if (pv[c] <= kDensityFloor) return Bits::infinite();
    acc += qv[c] * std::log2(qv[c] / pv[c]);
  }
  return Bits(clamp_rounding(acc * q.grid().cell_volume()));
}

}  // namespace redunquant
