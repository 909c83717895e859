#pragma once

#include <random>

#include "redunquant/reliable_gains.hpp"
#include "redunquant/system_model.hpp"

namespace fixture {

using redunquant::DiffusionSpec;
using redunquant::GainSet;
using redunquant::Matrix;
using redunquant::MultiChannelSystem;

// Scalar unstable plant, two unit channels, K = -2 each.
inline MultiChannelSystem twin_scalar_system() {
  return MultiChannelSystem(Matrix::Constant(1, 1, 1.0),
                            {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)},
                            DiffusionSpec::constant(Matrix::Identity(1, 1)));
}

inline GainSet twin_scalar_gains() {
  return GainSet{{Matrix::Constant(1, 1, -2.0), Matrix::Constant(1, 1, -2.0)}};
}

// Scalar OU process dx = -x dt + dW: one channel with zero gain.
inline MultiChannelSystem ou_system() {
  return MultiChannelSystem(Matrix::Constant(1, 1, -1.0), {Matrix::Constant(1, 1, 1.0)},
                            DiffusionSpec::constant(Matrix::Identity(1, 1)));
}

inline GainSet ou_gains() { return GainSet{{Matrix::Zero(1, 1)}}; }

inline Matrix uniform_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                             double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = u(rng);
  return M;
}

struct Instance {
  MultiChannelSystem sys;
  GainSet gains;
};

// Random plant with N single-input channels and random gains.
inline Instance random_instance(std::mt19937_64& rng, int d, int n_channels) {
  std::vector<Matrix> B;
  GainSet K;
  for (int i = 0; i < n_channels; ++i) {
    B.push_back(uniform_matrix(rng, d, 1, -2, 2));
    K.K.push_back(uniform_matrix(rng, 1, d, -3, 3));
  }
  return {MultiChannelSystem(uniform_matrix(rng, d, d, -2, 2), std::move(B),
                             DiffusionSpec::constant(Matrix::Identity(d, d))),
          std::move(K)};
}

// Random instance whose gains make every mode Hurwitz: the plant is shifted
// so that each channel alone (and both together) stabilize it.
inline Instance random_reliable_instance(std::mt19937_64& rng, int d) {
  for (;;) {
    Matrix A = uniform_matrix(rng, d, d, -1, 1);
    std::vector<Matrix> B = {Matrix::Identity(d, d), Matrix::Identity(d, d)};
    const double shift = 1.0 + A.norm();
    GainSet K{{-shift * Matrix::Identity(d, d), -(shift + 0.5) * Matrix::Identity(d, d)}};
    const Matrix S = uniform_matrix(rng, d, d, -1, 1) + 2.0 * Matrix::Identity(d, d);
    if (std::abs(S.determinant()) < 0.5) continue;
    MultiChannelSystem sys(std::move(A), std::move(B),
                           DiffusionSpec::constant(S));
    if (redunquant::verify_reliable(sys, K).reliable) return {std::move(sys), std::move(K)};
  }
}

}  // namespace fixture
