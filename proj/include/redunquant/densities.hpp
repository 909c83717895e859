#pragma once

#include <cstddef>
#include <vector>

#include "redunquant/system_model.hpp"

namespace redunquant {

/// N(mean, cov) with a symmetric positive definite covariance.
class GaussianDensity {
 public:
  GaussianDensity(Vector mean, Matrix cov);

  static GaussianDensity standard(Eigen::Index d);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  double log_pdf(const Vector& x) const;
  double pdf(const Vector& x) const;
  /// sqrt of the covariance diagonal.
  Vector stddev() const;

 private:
  Vector mean_;
  Matrix cov_;
  Eigen::LLT<Matrix> chol_;
  double log_norm_ = 0.0;
};

/// Axis-aligned box [lo, hi].
struct Box {
  Vector lo;
  Vector hi;

  Eigen::Index dim() const { return lo.size(); }
  bool contains(const Vector& x) const;
  void validate() const;
};

/// Uniform cell partition of a box; values live at cell centers.
struct CellGrid {
  Box box;
  std::vector<std::size_t> cells;

  CellGrid() = default;
  CellGrid(Box b, std::vector<std::size_t> n);

  Eigen::Index dim() const { return box.dim(); }
  std::size_t size() const;
  double spacing(Eigen::Index axis) const;
  double cell_volume() const;
  /// Flat index -> center. Axis 0 varies fastest.
  Vector center(std::size_t flat) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<std::size_t>& idx) const;
  /// Cell containing x, or size() when x lies outside the box.
  std::size_t locate(const Vector& x) const;

  friend bool operator==(const CellGrid& a, const CellGrid& b);
};

/// Nonnegative density sampled at cell centers and normalized so that
/// sum(values) * cell_volume == 1.
class GridDensity {
 public:
  /// Normalizes `values`; throws DomainError on negative or non-finite
  /// entries or zero total mass.
  static GridDensity normalized(CellGrid grid, std::vector<double> values);

  const CellGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t flat) const { return values_[flat]; }
  /// Piecewise-constant evaluation; zero outside the box.
  double evaluate(const Vector& x) const;
  double mass() const;

 private:
  GridDensity(CellGrid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {}

  CellGrid grid_;
  std::vector<double> values_;
};

/// Gaussian evaluated at cell centers, renormalized onto the grid.
GridDensity discretize(const GaussianDensity& g, const CellGrid& grid);

/// Box mean +/- k standard deviations per axis.
Box gaussian_box(const GaussianDensity& g, double k);

}  // namespace redunquant
