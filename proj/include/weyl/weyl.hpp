#pragma once

// Weyl structures on a coordinate chart, described in a gauge by a metric g
// and a Lee form theta:
//
//   D_X Y = nabla^g_X Y + theta(X) Y + theta(Y) X - g(X, Y) theta^#,
//
// so that D g = -2 theta (x) g and the weightless metric is parallel. A gauge
// change g' = e^{2u} g, theta' = theta - du describes the same connection.
//
// Curvature is R_{X,Y} Z = [D_X, D_Y] Z - D_{[X,Y]} Z. Tensor layouts:
//   Christoffels    (k, i, j)    = Gamma^k_ij = (D_{d_i} d_j)^k
//   curvature       (i, j, k, l) = g(R_{d_i, d_j} d_k, d_l)
//   endomorphism    (i, j, k, l) = (R_{d_i, d_j} d_k)^l

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "weyl/expr.hpp"
#include "weyl/tensor.hpp"

namespace weyl {

using ExprVector = std::vector<ScalarExpr>;
using ExprMatrix = std::vector<ExprVector>;

class WeylChart {
 public:
  /// Checks that g is symmetric and positive definite, and that all entries
  /// evaluate, at quasi-random samples of the chart box.
  WeylChart(Chart chart, ExprMatrix g, ExprVector theta);

  const Chart& chart() const noexcept { return data_->chart; }
  int dim() const noexcept { return data_->chart.dim(); }
  const ExprMatrix& g() const noexcept { return data_->g; }
  const ExprVector& theta() const noexcept { return data_->theta; }

  MetricValue metric(std::span<const double> p) const;
  KFormValue lee_form(std::span<const double> p) const;

  /// d_k g_ij, d_k d_l g_ij and d_k theta_i as exact expressions.
  const ScalarExpr& dg(int k, int i, int j) const;
  const ScalarExpr& ddg(int k, int l, int i, int j) const;
  const ScalarExpr& dtheta(int k, int i) const;

 private:
  struct Data {
    Chart chart;
    ExprMatrix g;
    ExprVector theta;
    std::vector<ScalarExpr> dg;
    std::vector<ScalarExpr> ddg;
    std::vector<ScalarExpr> dtheta;
  };
  std::shared_ptr<const Data> data_;
};

/// Expression-valued k-form (dense antisymmetric coefficient array).
class KFormField {
 public:
  KFormField(int dim, int degree);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }

  const ScalarExpr& at(std::span<const int> idx) const;
  /// Sets the coefficient and the rest of its antisymmetric orbit.
  void set(std::span<const int> idx, const ScalarExpr& value);
  void set(std::initializer_list<int> idx, const ScalarExpr& value);

  KFormValue eval(std::span<const double> p) const;
  KFormField partial(int i) const;
  KFormField scaled(const ScalarExpr& s) const;

 private:
  int dim_;
  int degree_;
  std::vector<ScalarExpr> entries_;
};

/// Exterior derivative with (d w)_{i0..ik} = sum_m (-1)^m d_{i_m} w_{..^i_m..}.
KFormField exterior_derivative(const KFormField& w);

TensorValue levi_civita_christoffels(const WeylChart& W, std::span<const double> p);
TensorValue weyl_christoffels(const WeylChart& W, std::span<const double> p);
/// All-covariant curvature R(X, Y, Z, T) = g(R_{X,Y} Z, T) in the gauge g.
TensorValue weyl_curvature(const WeylChart& W, std::span<const double> p);
/// Curvature endomorphisms, layout (i, j, k, l) = (R_{d_i, d_j} d_k)^l.
TensorValue weyl_curvature_endomorphism(const WeylChart& W, std::span<const double> p);
/// F = d theta.
KFormValue faraday(const WeylChart& W, std::span<const double> p);
KFormField faraday_field(const WeylChart& W);

/// Ric(X, Y) = 1/2 sum_k ( g(R_{X,e_k} e_k, Y) - g(R_{X,e_k} Y, e_k) ).
/// With a frame (columns g-orthonormal) the sum runs over it; otherwise the
/// coordinate contraction with g^{-1} is used.
Eigen::MatrixXd weyl_ricci(const WeylChart& W, std::span<const double> p,
                           const std::optional<Eigen::MatrixXd>& frame = std::nullopt);

/// Max over coordinate 4-tuples of the failure of the pair-symmetry identity
/// R(X,Y,Z,T) - R(Z,T,X,Y) = (F(X)^Y - F(Y)^X)(Z,T) + F(X,Y) g(Z,T) - F(Z,T) g(X,Y),
/// where g(F(X), Z) = F(X, Z) and (A^B)(Z,T) = g(A,Z) g(B,T) - g(A,T) g(B,Z).
double pair_symmetry_defect(const WeylChart& W, std::span<const double> p);
/// Max over coordinate 4-tuples of |R(X,Y,Z,T) - R(Z,T,X,Y)|.
double raw_pair_asymmetry(const WeylChart& W, std::span<const double> p);

/// D omega of the weightless form represented by omega in the gauge g:
///   (D_i w)_J = d_i w_J - sum_m Gamma^l_{i j_m} w_{..l..} + k theta_i w_J.
/// Layout (i, j1, .., jk).
TensorValue covderiv_weightless_form(const WeylChart& W, const KFormField& omega,
                                     std::span<const double> p);

struct MinimalLeeForm {
  KFormValue tau;
  double residual;          // gauge norm of nabla^g w + alpha(tau)
  double condition_number;  // of the least-squares matrix
};

/// Lee form of the Weyl structure making omega "as parallel as possible" at p.
/// The Lee form of W is ignored. Throws InvalidArgument when |omega|_g < 1e-12
/// or the system is ill-conditioned (the message carries the condition number).
MinimalLeeForm minimal_lee_form(const WeylChart& W, const KFormField& omega,
                                std::span<const double> p);
/// Gauge norm of nabla^g w + alpha(tau) for a given tau.
double minimal_lee_residual(const WeylChart& W, const KFormField& omega, std::span<const double> p,
                            std::span<const double> tau);

/// Same Weyl structure in the gauge e^{2u} g: (e^{2u} g, theta - du).
WeylChart gauge_transform(const WeylChart& W, const ScalarExpr& u);

}  // namespace weyl
