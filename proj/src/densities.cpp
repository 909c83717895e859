#include "redunquant/densities.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "redunquant/errors.hpp"

namespace redunquant {

GaussianDensity::GaussianDensity(Vector mean, Matrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Eigen::Index d = mean_.size();
  if (d == 0 || cov_.rows() != d || cov_.cols() != d) {
    throw DimensionError("Gaussian mean/covariance shapes disagree");
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw DomainError("Gaussian parameters must be finite");
  }
  if ((cov_ - cov_.transpose()).norm() > 1e-12 * (1.0 + cov_.norm())) {
    throw DomainError("covariance must be symmetric");
  }
  cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
  chol_.compute(cov_);
  if (chol_.info() != Eigen::Success ||
      !(chol_.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw DomainError("covariance must be positive definite");
  }
  const double log_det =
      2.0 * chol_.matrixLLT().diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) +
                      log_det);
}

GaussianDensity GaussianDensity::standard(Eigen::Index d) {
  return GaussianDensity(Vector::Zero(d), Matrix::Identity(d, d));
}

double GaussianDensity::log_pdf(const Vector& x) const {
  const Vector z = chol_.matrixL().solve(x - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

double GaussianDensity::pdf(const Vector& x) const { return std::exp(log_pdf(x)); }

Vector GaussianDensity::stddev() const { return cov_.diagonal().array().sqrt(); }

bool Box::contains(const Vector& x) const {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

void Box::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size()) {
    throw DimensionError("box bounds must be non-empty and of equal length");
  }
  if (!lo.allFinite() || !hi.allFinite() || !(hi.array() > lo.array()).all()) {
    throw DomainError("box bounds must be finite with hi > lo on every axis");
  }
}

CellGrid::CellGrid(Box b, std::vector<std::size_t> n)
    : box(std::move(b)), cells(std::move(n)) {
  box.validate();
  if (cells.size() != static_cast<std::size_t>(box.dim())) {
    throw DimensionError("cell counts must match box dimension");
  }
  for (auto c : cells) {
    if (c == 0) throw DomainError("every axis needs at least one cell");
  }
}

std::size_t CellGrid::size() const {
  return std::accumulate(cells.begin(), cells.end(), std::size_t{1},
                         std::multiplies<>());
}

double CellGrid::spacing(Eigen::Index axis) const {
  return (box.hi(axis) - box.lo(axis)) /
         static_cast<double>(cells[static_cast<std::size_t>(axis)]);
}

double CellGrid::cell_volume() const {
  double v = 1.0;
  for (Eigen::Index a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

std::vector<std::size_t> CellGrid::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(cells.size());
  for (std::size_t a = 0; a < cells.size(); ++a) {
    idx[a] = flat % cells[a];
    flat /= cells[a];
  }
  return idx;
}

std::size_t CellGrid::flatten(const std::vector<std::size_t>& idx) const {
  std::size_t flat = 0;
  for (std::size_t a = cells.size(); a-- > 0;) flat = flat * cells[a] + idx[a];
  return flat;
}

Vector CellGrid::center(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vector x(dim());
  for (Eigen::Index a = 0; a < dim(); ++a) {
    x(a) = box.lo(a) +
           (static_cast<double>(idx[static_cast<std::size_t>(a)]) + 0.5) *
               spacing(a);
  }
  return x;
}

std::size_t CellGrid::locate(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("point dimension mismatch");
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (Eigen::Index a = 0; a < dim(); ++a) {
    const auto n = cells[static_cast<std::size_t>(a)];
    if (!(x(a) >= box.lo(a) && x(a) <= box.hi(a))) return size();
    auto i = static_cast<std::size_t>((x(a) - box.lo(a)) / spacing(a));
    if (i >= n) i = n - 1;  // x == hi
    flat += i * stride;
    stride *= n;
  }
  return flat;
}

bool operator==(const CellGrid& a, const CellGrid& b) {
  return a.cells == b.cells && a.box.lo == b.box.lo && a.box.hi == b.box.hi;
}

GridDensity GridDensity::normalized(CellGrid grid, std::vector<double> values) {
  if (values.size() != grid.size()) {
    throw DimensionError("grid has " + std::to_string(grid.size()) +
                         " cells but " + std::to_string(values.size()) +
                         " values were supplied");
  }
  double total = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError("grid density values must be finite and nonnegative");
    }
    total += v;
  }
  const double mass = total * grid.cell_volume();
  if (!(mass > 0.0)) throw DomainError("grid density has zero mass");
  for (double& v : values) v /= mass;
  return GridDensity(std::move(grid), std::move(values));
}

double GridDensity::evaluate(const Vector& x) const {
  const std::size_t c = grid_.locate(x);
  return c == grid_.size() ? 0.0 : values_[c];
}

double GridDensity::mass() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) *
         grid_.cell_volume();
}

GridDensity discretize(const GaussianDensity& g, const CellGrid& grid) {
  if (grid.dim() != g.dim()) throw DimensionError("grid/density dimension mismatch");
  std::vector<double> v(grid.size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = g.pdf(grid.center(c));
  return GridDensity::normalized(grid, std::move(v));
}

Box gaussian_box(const GaussianDensity& g, double k) {
  if (!(k > 0.0)) throw DomainError("box half-width multiplier must be positive");
  const Vector s = g.stddev();
  return Box{g.mean() - k * s, g.mean() + k * s};
}

}  // namespace redunquant
