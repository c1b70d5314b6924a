#pragma once

// Shared generators and independent oracles for the unit tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "weyl/expr.hpp"
#include "weyl/tensor.hpp"
#include "weyl/weyl.hpp"

namespace weyl::testing {

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = N(rng);
  }
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

inline KFormValue random_form(std::mt19937_64& rng, int dim, int degree) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  KFormValue w(dim, degree);
  std::vector<int> idx(static_cast<std::size_t>(degree));
  // Visit increasing index tuples only.
  std::vector<bool> mask(static_cast<std::size_t>(dim), false);
  std::fill(mask.begin(), mask.begin() + degree, true);
  do {
    std::size_t k = 0;
    for (int i = 0; i < dim; ++i) {
      if (mask[static_cast<std::size_t>(i)]) idx[k++] = i;
    }
    w.set(idx, U(rng));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return w;
}

inline double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

/// Wedge through full antisymmetrization: (k+l)!/(k! l!) Alt(a (x) b), with
/// Alt summing over all (k+l)! permutations. Independent of the shuffle loop.
inline KFormValue wedge_by_alternation(const KFormValue& a, const KFormValue& b) {
  const int n = a.dim();
  const int k = a.degree();
  const int l = b.degree();
  const int m = k + l;
  std::vector<double> out(dense_size(n, m), 0.0);
  std::vector<int> perm(static_cast<std::size_t>(m));
  for_each_index(n, m, [&](const Index& idx, std::size_t flat) {
    std::iota(perm.begin(), perm.end(), 0);
    double acc = 0.0;
    do {
      Index ia, ib;
      for (int s = 0; s < k; ++s) ia.push_back(idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])]);
      for (int s = k; s < m; ++s) ib.push_back(idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])]);
      acc += permutation_sign(perm) * a.at(ia) * b.at(ib);
    } while (std::next_permutation(perm.begin(), perm.end()));
    out[flat] = acc / (factorial(k) * factorial(l));
  });
  return KFormValue::from_entries(n, m, std::move(out), 1e-9);
}

/// Central finite difference of an expression along coordinate i.
inline double central_difference(const ScalarExpr& e, Point p, int i, double h) {
  Point q = p;
  p[static_cast<std::size_t>(i)] += h;
  q[static_cast<std::size_t>(i)] -= h;
  return (e.eval(p) - e.eval(q)) / (2.0 * h);
}

/// Random polynomial expression of bounded depth in `dim` coordinates.
inline ScalarExpr random_polynomial(std::mt19937_64& rng, int dim, int depth) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_int_distribution<int> var(0, dim - 1);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  if (depth <= 0) {
    return pick(rng) == 0 ? ScalarExpr(std::round(c(rng) * 8.0) / 8.0) : ScalarExpr::coordinate(var(rng));
  }
  const ScalarExpr a = random_polynomial(rng, dim, depth - 1);
  const ScalarExpr b = random_polynomial(rng, dim, depth - 1);
  switch (pick(rng)) {
    case 0:
      return a + b;
    case 1:
      return a - b;
    case 2:
      return a * b;
    default:
      return ScalarExpr(std::round(c(rng) * 8.0) / 8.0) * a + b;
  }
}

/// Random smooth expression (polynomials composed with exp/sin/cos).
inline ScalarExpr random_smooth(std::mt19937_64& rng, int dim, int depth) {
  std::uniform_int_distribution<int> pick(0, 6);
  std::uniform_int_distribution<int> var(0, dim - 1);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  if (depth <= 0) return ScalarExpr::coordinate(var(rng)) + ScalarExpr(c(rng));
  const ScalarExpr a = random_smooth(rng, dim, depth - 1);
  const ScalarExpr b = random_smooth(rng, dim, depth - 1);
  switch (pick(rng)) {
    case 0:
      return a + b;
    case 1:
      return a * b;
    case 2:
      return sin(a);
    case 3:
      return cos(a) - b;
    case 4:
      return exp(ScalarExpr(0.3) * a);
    case 5:
      return pow(a, 2) + b;
    default:
      return a / (ScalarExpr(2.0) + pow(b, 2));
  }
}

/// Random polynomial Weyl chart on [-0.5, 0.5]^dim: g = 2 Id + small
/// symmetric polynomial perturbation, theta with polynomial entries.
inline WeylChart random_weyl_chart(std::mt19937_64& rng, int dim) {
  const Chart box = Chart::cube(dim, -0.5, 0.5);
  for (;;) {
    ExprMatrix g(static_cast<std::size_t>(dim), ExprVector(static_cast<std::size_t>(dim)));
    ExprVector theta(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) {
        const ScalarExpr e = ScalarExpr(0.2) * random_polynomial(rng, dim, 2);
        g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = i == j ? ScalarExpr(2.0) + e : e;
        g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
      theta[static_cast<std::size_t>(i)] = random_polynomial(rng, dim, 2);
    }
    try {
      return WeylChart(box, std::move(g), std::move(theta));
    } catch (const std::exception&) {
      // Not positive definite on the box; draw again.
    }
  }
}

/// Random polynomial of total degree <= max_degree with coefficients in [-1, 1].
inline ScalarExpr random_polynomial_of_degree(std::mt19937_64& rng, int dim, int max_degree, int terms = 5) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::uniform_int_distribution<int> var(0, dim - 1);
  std::uniform_int_distribution<int> deg(1, max_degree);
  ScalarExpr out(std::round(c(rng) * 8.0) / 8.0);
  for (int t = 0; t < terms; ++t) {
    ScalarExpr m(c(rng));
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) m = m * ScalarExpr::coordinate(var(rng));
    out = out + m;
  }
  return out;
}

/// Flat chart metric with entries Id.
inline ExprMatrix flat_metric(int dim) {
  ExprMatrix g(static_cast<std::size_t>(dim), ExprVector(static_cast<std::size_t>(dim)));
  for (int i = 0; i < dim; ++i) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = ScalarExpr(1.0);
  return g;
}

/// Random rotation (Haar-ish via QR of a Gaussian matrix).
inline Eigen::MatrixXd random_rotation(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = N(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace weyl::testing
