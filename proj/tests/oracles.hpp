#pragma once

// Reference computations used only by the tests. None of them call into the
// library; they take a different route to the same quantities.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;

// Coefficients c[0..d] of det(sI - M) = s^d + c[1] s^(d-1) + ... + c[d],
// by Faddeev-LeVerrier.
inline std::vector<double> charpoly(const Matrix& M) {
  const Eigen::Index d = M.rows();
  std::vector<double> c(d + 1, 0.0);
  c[0] = 1.0;
  Matrix Mk = Matrix::Zero(d, d);
  const Matrix I = Matrix::Identity(d, d);
  for (Eigen::Index k = 1; k <= d; ++k) {
    Mk = M * Mk + c[k - 1] * I;
    c[k] = -(M * Mk).trace() / static_cast<double>(k);
  }
  return c;
}

// Routh-Hurwitz test on a monic polynomial: every leading principal minor
// of the Hurwitz matrix must be positive.
inline bool routh_hurwitz_stable(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size()) - 1;
  if (n == 0) return true;
  Matrix H = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int k = 2 * (j + 1) - (i + 1);
      if (k >= 0 && k <= n) H(i, j) = c[k];
    }
  }
  for (int m = 1; m <= n; ++m) {
    if (!(H.topLeftCorner(m, m).determinant() > 0.0)) return false;
  }
  return true;
}

// All roots of a monic polynomial by Durand-Kerner iteration.
inline std::vector<std::complex<double>> poly_roots(const std::vector<double>& c) {
  using C = std::complex<double>;
  const int n = static_cast<int>(c.size()) - 1;
  double bound = 1.0;
  for (int k = 1; k <= n; ++k) bound = std::max(bound, 1.0 + std::abs(c[k]));
  std::vector<C> z(n);
  for (int k = 0; k < n; ++k) z[k] = std::pow(C(0.4, 0.9), k) * (0.5 * bound);
  auto p = [&](C x) {
    C acc = 1.0;
    for (int k = 1; k <= n; ++k) acc = acc * x + c[k];
    return acc;
  };
  for (int it = 0; it < 2000; ++it) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      C den = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      const C step = p(z[i]) / den;
      z[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * bound) break;
  }
  return z;
}

inline double abscissa(const Matrix& M) {
  double best = -INFINITY;
  for (auto r : poly_roots(charpoly(M))) best = std::max(best, r.real());
  return best;
}

// A P + P A^T + Q = 0 for A = V diag(lambda) V^{-1} with real lambda.
inline Matrix lyapunov_eig(const Matrix& V, const Eigen::VectorXd& lambda,
                           const Matrix& Q) {
  const Matrix Vi = V.inverse();
  const Matrix Qt = Vi * Q * Vi.transpose();
  Matrix X(Q.rows(), Q.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      X(i, j) = -Qt(i, j) / (lambda(i) + lambda(j));
  return V * X * V.transpose();
}

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double simpson2(const std::function<double(double, double)>& f, double ax,
                       double bx, double ay, double by, int n) {
  return simpson(
      [&](double x) { return simpson([&](double y) { return f(x, y); }, ay, by, n); },
      ax, bx, n);
}

inline double normal_pdf(double x, double m, double v) {
  return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * M_PI * v);
}

inline double normal_pdf2(double x, double y, const Eigen::Vector2d& m,
                          const Eigen::Matrix2d& S) {
  const Eigen::Vector2d z(x - m(0), y - m(1));
  const double q = z.dot(S.inverse() * z);
  return std::exp(-0.5 * q) / (2.0 * M_PI * std::sqrt(S.determinant()));
}

// Differential entropy and relative entropy in bits by quadrature.
inline double entropy_1d(double m, double v, double half_width, int n) {
  return simpson(
      [&](double x) {
        const double p = normal_pdf(x, m, v);
        return p > 0 ? -p * std::log2(p) : 0.0;
      },
      m - half_width, m + half_width, n);
}

inline double kl_1d(double mq, double vq, double mp, double vp, double lo,
                    double hi, int n) {
  return simpson(
      [&](double x) {
        const double q = normal_pdf(x, mq, vq);
        if (q <= 0) return 0.0;
        return q * (std::log2(q) - std::log2(normal_pdf(x, mp, vp)));
      },
      lo, hi, n);
}

}  // namespace oracle
