#pragma once

// Four-dimensional special structures: almost complex fields, the factor
// complex structures of a 2+2 product, hyper-Hermitian J from holomorphic
// data, the Lee form of a Hermitian structure, and the curvature operator on
// bivectors.
//
// Endomorphisms are matrices A(k, j) = (A d_j)^k. Bivectors are
// antisymmetric contravariant 4x4 matrices alpha(a, b) = alpha^{ab}.

#include <Eigen/Dense>

#include <array>
#include <span>

#include "weyl/expr.hpp"
#include "weyl/product.hpp"
#include "weyl/tensor.hpp"
#include "weyl/weyl.hpp"

namespace weyl {

class AlmostComplexField {
 public:
  /// J[k][j] = (J d_j)^k on a 4-dimensional chart. Throws DimensionError on a
  /// shape mismatch and InvalidArgument unless J^2 = -Id (to 1e-10, relative)
  /// at quasi-random samples.
  AlmostComplexField(Chart chart, ExprMatrix J);
  static AlmostComplexField constant(Chart chart, const Eigen::Matrix4d& J);
  /// Skips the J^2 = -Id check; for partial structures such as a factor Ii,
  /// which squares to minus the projection onto its factor, and products.
  static AlmostComplexField unchecked(Chart chart, ExprMatrix J);

  const Chart& chart() const noexcept { return chart_; }
  const ExprMatrix& expr() const noexcept { return J_; }
  Eigen::Matrix4d at(std::span<const double> p) const;
  /// d_i J as a matrix.
  Eigen::Matrix4d partial_at(int i, std::span<const double> p) const;

 private:
  AlmostComplexField(Chart chart, ExprMatrix J, bool check);
  Chart chart_;
  ExprMatrix J_;
  std::vector<ExprMatrix> dJ_;  // dJ_[i][k][j]
};

/// Symbolic composition A B.
AlmostComplexField compose(const AlmostComplexField& A, const AlmostComplexField& B);

/// Max over entries of |J^T g J - g|; zero iff J is g-orthogonal (Hermitian).
double hermitian_defect(const WeylChart& W, const AlmostComplexField& J, std::span<const double> p);

struct FactorComplexStructures {
  AlmostComplexField I1;
  AlmostComplexField I2;
  AlmostComplexField I;
  /// +1 if (Y1, I1 Y1, Y2, I2 Y2) is positive for dx1^dx2^dx3^dx4, else -1.
  int orientation;
};

/// Ii is the endomorphism of signs[i-1] times the unit factor volume form,
/// I(X, .) raised with g, zero on the other factor. Requires n1 = n2 = 2.
FactorComplexStructures factor_complex_structures(const ProductWeylChart& P, std::array<int, 2> signs = {1, 1});

/// N(d_i, d_j)^k = ([JX,JY] - J[JX,Y] - J[X,JY] - [X,Y])^k for coordinate
/// fields. Layout (i, j, k), slots {Cov, Cov, Contra}.
TensorValue nijenhuis(const AlmostComplexField& J, std::span<const double> p);

/// ((D_i A) d_j)^k under the Weyl connection of W. Layout (i, j, k).
TensorValue endomorphism_covariant_derivative(const WeylChart& W, const AlmostComplexField& A,
                                              std::span<const double> p);

/// H = P(z, w), or exp(P(z, w)) when exponential.
struct HolomorphicFunction {
  ComplexPoly2 poly;
  bool exponential = false;
};

/// a + i b = H(z, w) with z = x1 - i s1 x2, w = x3 + i s2 x4 for signs (s1, s2).
std::pair<ScalarExpr, ScalarExpr> holomorphic_coefficients(const HolomorphicFunction& H, std::array<int, 2> signs);

/// J d1 = a d3 + s2 b d4, J d2 = s1 (b d3 - s2 a d4), completed on d3, d4 by
/// J^2 = -Id. No holomorphicity or normalization is checked.
AlmostComplexField structure_from_coefficients(const Chart& chart, const ScalarExpr& a, const ScalarExpr& b,
                                               std::array<int, 2> signs);

/// J of the hyper-Hermitian structure on the flat 2+2 product with
/// (f2 - f1) / 2 = -ln|H|. Throws InvalidArgument if the factors are not
/// flat 2-dimensional, H vanishes somewhere in the box, or f differs from
/// -ln|H| by more than 1e-10 at a sample.
AlmostComplexField hyperhermitian_j_from_H(const ProductWeylChart& P, const HolomorphicFunction& H,
                                           std::array<int, 2> signs = {1, 1});

/// Fundamental form w(X, Y) = g(JX, Y) as an expression field.
KFormField fundamental_form(const WeylChart& W, const AlmostComplexField& J);

/// The unique tau with dw = -2 w ^ tau for the fundamental form of J and the
/// gauge metric of W (its Lee form is ignored). Throws InvalidArgument if w
/// is degenerate at p.
KFormValue lck_lee_form(const WeylChart& W, const AlmostComplexField& J, std::span<const double> p);

/// Max entry of nabla^g_X w - lck_sign * (X^Jtau + JX^tau) over coordinate X,
/// where X stands for its g-dual and (J tau)(Y) = -tau(JY).
double lck_equation_defect(const WeylChart& W, const AlmostComplexField& J, std::span<const double> p,
                           const KFormValue& tau);
inline constexpr double lck_sign = -1.0;

/// sum_{a<b} alpha^{ab} R^D_{d_a, d_b}, an endomorphism.
Eigen::Matrix4d curvature_operator(const WeylChart& W, std::span<const double> p, const Eigen::Matrix4d& alpha);

/// Endomorphism Z -> g(X, Z) Y - g(Y, Z) X of the bivector X ^ Y.
Eigen::Matrix4d wedge_endomorphism(const MetricValue& g, const Eigen::Vector4d& X, const Eigen::Vector4d& Y);

/// Max entry of R^D_{X1,X2} - F(X1,X2) Id - [F#, X1 ^ X2] over coordinate
/// pairs X1 in {d1, d2}, X2 in {d3, d4}, with F# the endomorphism of F.
double asd_identity_defect(const WeylChart& W, std::span<const double> p);

/// Numerical rank of alpha -> curvature_operator(alpha) on the 6 coordinate
/// bivectors, singular values above tol_svd times the largest.
int holonomy_image_rank(const WeylChart& W, std::span<const double> p, double tol_svd = 1e-7);

}  // namespace weyl
