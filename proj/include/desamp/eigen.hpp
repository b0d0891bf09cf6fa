#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "desamp/matrix.hpp"

namespace desamp {

// Full spectrum of a symmetric matrix, eigenvalues sorted descending with the
// matching orthonormal eigenvectors stored as columns.
struct SpectralDecomposition {
  Vector eigenvalues;
  DenseMatrix eigenvectors;
};

namespace detail {

inline double offdiag_frobenius(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace detail

// Cyclic Jacobi rotations. Converges unconditionally for symmetric input;
// stops when the off-diagonal Frobenius norm drops below 1e-12 * ||A||_F
// (max 100 sweeps).
inline SpectralDecomposition sym_eigen(const DenseMatrix& input) {
  if (!input.is_square()) throw ValidationError("sym_eigen: matrix must be square");
  if (!input.is_symmetric()) throw ValidationError("sym_eigen: matrix must be symmetric");

  const std::size_t n = input.rows();
  DenseMatrix a = input;
  DenseMatrix q = DenseMatrix::identity(n);
  const double norm = std::max(a.frobenius_norm(), 1e-300);
  const double tol = 1e-12 * norm;

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (detail::offdiag_frobenius(a) <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apq = a(p, r);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p);
        const double aqq = a(r, r);
        const double theta = (aqq - app) / (2.0 * apq);
        // Smaller-magnitude root for numerical stability.
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, r);
          a(k, p) = c * akp - s * akq;
          a(k, r) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(r, k);
          a(p, k) = c * apk - s * aqk;
          a(r, k) = s * apk + c * aqk;
        }
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkq = q(k, r);
          q(k, p) = c * qkp - s * qkq;
          q(k, r) = s * qkp + c * qkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = q(i, order[j]);
  }
  return out;
}

// Symmetric square root of a PSD matrix. Eigenvalues slightly below zero
// (covariance estimates from finite replicas) are clamped at -1e-10 relative.
inline DenseMatrix spd_sqrt(const DenseMatrix& a) {
  const SpectralDecomposition eig = sym_eigen(a);
  const std::size_t n = a.rows();
  double lambda_max = 0.0;
  for (double v : eig.eigenvalues) lambda_max = std::max(lambda_max, std::abs(v));
  const double clamp_tol = 1e-10 * std::max(1.0, lambda_max);

  Vector roots(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lam = eig.eigenvalues[i];
    if (lam < -clamp_tol)
      throw NumericError("spd_sqrt: matrix is not positive semidefinite");
    roots[i] = std::sqrt(std::max(lam, 0.0));
  }

  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        v += eig.eigenvectors(i, k) * roots[k] * eig.eigenvectors(j, k);
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

}  // namespace desamp
