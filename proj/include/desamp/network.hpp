#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "desamp/eigen.hpp"
#include "desamp/matrix.hpp"

namespace desamp {

enum class TopologyKind { complete, circular, disconnected, custom };

// Undirected communication graph. Self-loops are implicit: every node is a
// neighbor of itself, so degrees count the node itself.
struct Topology {
  std::size_t n = 0;
  std::set<std::pair<std::size_t, std::size_t>> edges;  // stored with i < j
  TopologyKind kind = TopologyKind::custom;

  bool has_edge(std::size_t i, std::size_t j) const {
    if (i == j) return true;
    if (i > j) std::swap(i, j);
    return edges.count({i, j}) > 0;
  }

  // Neighbor count including self.
  std::size_t degree(std::size_t i) const {
    std::size_t d = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && has_edge(i, j)) ++d;
    return d;
  }
};

inline Topology make_topology(TopologyKind kind, std::size_t n,
                              const std::vector<std::pair<std::size_t, std::size_t>>& custom_edges = {}) {
  if (n < 1) throw ValidationError("make_topology: N must be >= 1");
  Topology t;
  t.n = n;
  t.kind = kind;
  switch (kind) {
    case TopologyKind::complete:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) t.edges.insert({i, j});
      break;
    case TopologyKind::circular:
      if (n > 1)
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t a = i, b = (i + 1) % n;
          if (a > b) std::swap(a, b);
          if (a != b) t.edges.insert({a, b});
        }
      break;
    case TopologyKind::disconnected:
      break;
    case TopologyKind::custom:
      for (auto [i, j] : custom_edges) {
        if (i >= n || j >= n)
          throw ValidationError("make_topology: edge references invalid node id");
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        t.edges.insert({i, j});
      }
      break;
  }
  return t;
}

// Symmetric doubly-stochastic mixing matrix with its cached spectrum.
struct MixingMatrix {
  DenseMatrix w;
  double lambda2 = 1.0;
  double lambdaN = 1.0;
  double gamma_bar = 0.0;  // max(|lambda2|, |lambdaN|)
  bool connected = true;

  std::size_t n() const { return w.rows(); }
};

namespace detail {

inline MixingMatrix finalize_mixing(DenseMatrix w) {
  const std::size_t n = w.rows();
  const double tol = 1e-12 * std::max(1.0, w.max_abs());
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += w(i, j);
      col += w(j, i);
    }
    if (std::abs(row - 1.0) > tol || std::abs(col - 1.0) > tol)
      throw ValidationError("mixing matrix is not doubly stochastic");
  }
  if (!w.is_symmetric()) throw ValidationError("mixing matrix is not symmetric");

  const SpectralDecomposition eig = sym_eigen(w);
  MixingMatrix m;
  m.w = std::move(w);
  m.lambda2 = n > 1 ? eig.eigenvalues[1] : 1.0;
  m.lambdaN = eig.eigenvalues[n - 1];
  if (m.lambdaN <= -1.0 + 1e-12)
    throw ValidationError("mixing matrix spectrum touches -1");
  m.gamma_bar = n > 1 ? std::max(std::abs(m.lambda2), std::abs(m.lambdaN)) : 0.0;
  m.connected = m.lambda2 < 1.0 - 1e-10;
  return m;
}

}  // namespace detail

// Metropolis weights: W_ij = 1/max(d_i, d_j) on edges, diagonal fills the
// remaining mass. Degrees include the self-loop (the circular graph then has
// d_i = 3 for every node).
inline MixingMatrix metropolis_weights(const Topology& t) {
  const std::size_t n = t.n;
  DenseMatrix w(n, n);
  std::vector<std::size_t> deg(n);
  for (std::size_t i = 0; i < n; ++i) deg[i] = t.degree(i);
  for (auto [i, j] : t.edges) {
    const double v = 1.0 / static_cast<double>(std::max(deg[i], deg[j]));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return detail::finalize_mixing(std::move(w));
}

// User-supplied W, validated for symmetry, double stochasticity and spectrum.
inline MixingMatrix custom_mixing(DenseMatrix w) {
  if (!w.is_square()) throw ValidationError("custom mixing matrix must be square");
  return detail::finalize_mixing(std::move(w));
}

// (W (x) I_d) x on a stacked N*d vector, computed blockwise.
inline Vector apply_mixing(const MixingMatrix& m, const Vector& x) {
  const std::size_t n = m.n();
  if (n == 0 || x.size() % n != 0)
    throw ValidationError("apply_mixing: vector length is not a multiple of N");
  const std::size_t d = x.size() / n;
  Vector y(x.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = m.w(i, j);
      if (wij == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) y[i * d + c] += wij * x[j * d + c];
    }
  return y;
}

}  // namespace desamp
