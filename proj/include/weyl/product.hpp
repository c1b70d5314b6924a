#pragma once

// Conformal products g = e^{f1} g1 + e^{f2} g2 on M1 x M2 with the adapted
// Weyl structure, i.e. the one preserving both factor distributions H1, H2.
//
// Factor metrics are given in factor coordinates (x1..x_{n_i} of their own
// chart); f1, f2 live on the product chart, whose coordinates list factor 1
// first. In the gauge g the adapted Lee form is
//
//   theta = -1/2 (d_{H1} f2 + d_{H2} f1),
//
// where d_{Hi} keeps the differentials of the factor-i coordinates only.

#include <Eigen/Dense>

#include <cstdint>
#include <span>

#include "weyl/expr.hpp"
#include "weyl/weyl.hpp"

namespace weyl {

class ProductWeylChart {
 public:
  int n1() const noexcept { return chart1_.dim(); }
  int n2() const noexcept { return chart2_.dim(); }
  int dim() const noexcept { return n1() + n2(); }
  /// 1 or 2.
  int factor_of(int index) const noexcept { return index < n1() ? 1 : 2; }

  const Chart& chart1() const noexcept { return chart1_; }
  const Chart& chart2() const noexcept { return chart2_; }
  const ExprMatrix& g1() const noexcept { return g1_; }
  const ExprMatrix& g2() const noexcept { return g2_; }
  const ScalarExpr& f1() const noexcept { return f1_; }
  const ScalarExpr& f2() const noexcept { return f2_; }
  /// The gauge metric and adapted Lee form on the product chart.
  const WeylChart& weyl() const noexcept { return weyl_; }

 private:
  friend ProductWeylChart build_product(Chart, ExprMatrix, Chart, ExprMatrix, ScalarExpr, ScalarExpr);
  ProductWeylChart(Chart c1, ExprMatrix g1, Chart c2, ExprMatrix g2, ScalarExpr f1, ScalarExpr f2, WeylChart w);

  Chart chart1_;
  Chart chart2_;
  ExprMatrix g1_;
  ExprMatrix g2_;
  ScalarExpr f1_;
  ScalarExpr f2_;
  WeylChart weyl_;
};

/// Factor dimensions 1..3 with n1 + n2 <= 6. Throws SingularMetricError if a
/// factor metric is not positive definite on its box.
ProductWeylChart build_product(Chart chart1, ExprMatrix g1, Chart chart2, ExprMatrix g2, ScalarExpr f1,
                               ScalarExpr f2);

/// Flat factors, the usual case.
ProductWeylChart build_flat_product(Chart chart1, Chart chart2, ScalarExpr f1, ScalarExpr f2);

/// Unit-length factor volume form e^{n_i f_i / 2} sqrt(det g_i) dx^{factor i}.
KFormField weightless_volume_form(const ProductWeylChart& P, int which);

/// Max of |F_ij| over pure-type pairs (i, j in the same factor) at quasi-random
/// samples of the product box.
double mixed_faraday_check(const ProductWeylChart& P, int samples, std::uint64_t seed);

/// Ricci tensor of the slice metric e^{eps(i)(f1 - f2)} g_i through p
/// (eps(1) = 1, eps(2) = -1), embedded as an n x n matrix supported on the
/// factor-i block. One-dimensional factors have zero Ricci tensor.
Eigen::MatrixXd slice_ricci(const ProductWeylChart& P, int which, std::span<const double> p);

/// Symmetric extension of F: Fhat(X1, X2) = Fhat(X2, X1) = F(X1, X2), zero on
/// pure-type pairs.
Eigen::MatrixXd fhat(const ProductWeylChart& P, std::span<const double> p);

/// Right-hand side Ric1 + Ric2 + (2-n)/2 F + (n1-n2)/2 Fhat of the Ricci
/// decomposition of the adapted structure.
Eigen::MatrixXd ricci_decomposition_rhs(const ProductWeylChart& P, std::span<const double> p);

/// Max-entry difference between weyl_ricci and ricci_decomposition_rhs.
double ricci_decomposition_defect(const ProductWeylChart& P, std::span<const double> p);

}  // namespace weyl
