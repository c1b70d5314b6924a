#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "weyl/einstein.hpp"
#include "weyl/errors.hpp"
#include "weyl/hermitian.hpp"
#include "weyl/sampling.hpp"

using namespace weyl;
using weyl::testing::flat_metric;

namespace {

const Chart kCube = Chart::cube(4, -1.0, 1.0);
const Chart kSquare = Chart::cube(2, -1.0, 1.0);
constexpr std::array<int, 2> kSigns{-1, 1};

ProductWeylChart product_for(const ScalarExpr& f) {
  return build_flat_product(kSquare, kSquare, ScalarExpr(0.0), 2.0 * f);
}

// H = exp(-z w), f = x1 x3 - x2 x4.
HolomorphicFunction exp_zw() { return {ComplexPoly2({{1, 1, {-1.0, 0.0}}}), true}; }

ScalarExpr E(const char* text) { return parse_expr(text, kCube); }

Eigen::Matrix4d standard_j() {
  Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
  J(1, 0) = 1;
  J(0, 1) = -1;
  J(3, 2) = 1;
  J(2, 3) = -1;
  return J;
}

// Random polynomial H with |H| bounded away from 0 on the box.
HolomorphicFunction random_h(std::mt19937_64& rng, bool exponential) {
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  std::vector<ComplexMonomial> terms{{0, 0, {exponential ? 0.0 : 2.0, 0.0}}};
  for (int t = 0; t < 3; ++t) {
    terms.push_back({1 + static_cast<int>(rng() % 2), static_cast<int>(rng() % 3), {U(rng), U(rng)}});
  }
  return {ComplexPoly2(terms), exponential};
}

ScalarExpr minus_ln_abs(const HolomorphicFunction& H) {
  const auto [a, b] = holomorphic_coefficients(H, kSigns);
  return -0.5 * ln(a * a + b * b);
}

}  // namespace

TEST_CASE("almost complex field validation") {
  CHECK_NOTHROW(AlmostComplexField::constant(kCube, standard_j()));
  CHECK_THROWS_AS(AlmostComplexField::constant(kCube, Eigen::Matrix4d::Identity()), InvalidArgument);
  CHECK_THROWS_AS(AlmostComplexField(kSquare, ExprMatrix(4, ExprVector(4))), DimensionError);
  CHECK_THROWS_AS(AlmostComplexField(kCube, ExprMatrix(3, ExprVector(4))), DimensionError);
}

TEST_CASE("factor complex structures") {
  SUBCASE("flat product, signs (+,+)") {
    const ProductWeylChart P = product_for(ScalarExpr(0.0));
    const FactorComplexStructures S = factor_complex_structures(P, {1, 1});
    const Point p{0.1, 0.2, 0.3, 0.4};
    CHECK((S.I.at(p) - standard_j()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(S.orientation == 1);
    CHECK(factor_complex_structures(P, {-1, 1}).orientation == -1);
    CHECK(factor_complex_structures(P, {-1, -1}).orientation == 1);
  }
  SUBCASE("squares, D-parallelism and Hermitian property") {
    const ProductWeylChart P = product_for(E("x1*x3"));
    QuasiRandomSampler s(4, 3);
    for (const auto signs : {std::array<int, 2>{1, 1}, std::array<int, 2>{-1, 1}}) {
      const FactorComplexStructures S = factor_complex_structures(P, signs);
      for (int k = 0; k < 30; ++k) {
        const Point p = s.next(kCube);
        const Eigen::Matrix4d I = S.I.at(p);
        CHECK((I * I + Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::Matrix4d I1 = S.I1.at(p);
        Eigen::Matrix4d proj1 = Eigen::Matrix4d::Zero();
        proj1(0, 0) = proj1(1, 1) = 1;
        CHECK((I1 * I1 + proj1).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(I1.block(2, 0, 2, 4).cwiseAbs().maxCoeff() == 0.0);
        CHECK(hermitian_defect(P.weyl(), S.I, p) < 1e-12);
        CHECK(endomorphism_covariant_derivative(P.weyl(), S.I, p).max_abs() < 1e-10);
        CHECK(endomorphism_covariant_derivative(P.weyl(), S.I1, p).max_abs() < 1e-10);
        CHECK(nijenhuis(S.I, p).max_abs() < 1e-12);
      }
    }
  }
  SUBCASE("curved factors") {
    ExprMatrix g1(2, ExprVector(2));
    g1[0][0] = parse_expr("2 + x1^2", kSquare);
    g1[1][1] = parse_expr("1 + x2^2", kSquare);
    g1[0][1] = g1[1][0] = parse_expr("0.3*x1*x2", kSquare);
    ExprMatrix g2(2, ExprVector(2));
    g2[0][0] = ScalarExpr(1.0);
    g2[1][1] = parse_expr("exp(x1)", kSquare);
    const ProductWeylChart P = build_product(kSquare, g1, kSquare, g2, E("0.2*x3"), E("x1*x4 + x2^2"));
    const FactorComplexStructures S = factor_complex_structures(P, {1, 1});
    QuasiRandomSampler s(4, 4);
    for (int k = 0; k < 20; ++k) {
      const Point p = s.next(kCube);
      const Eigen::Matrix4d I = S.I.at(p);
      CHECK((I * I + Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(hermitian_defect(P.weyl(), S.I, p) < 1e-12);
      CHECK(endomorphism_covariant_derivative(P.weyl(), S.I, p).max_abs() < 1e-10);
    }
  }
  const ProductWeylChart bad = build_flat_product(Chart::cube(1, -1, 1), Chart::cube(3, -1, 1), ScalarExpr(0.0),
                                                  ScalarExpr(0.0));
  CHECK_THROWS_AS(factor_complex_structures(bad), DimensionError);
}

TEST_CASE("nijenhuis") {
  const Point p{0.2, -0.1, 0.4, 0.3};
  CHECK(nijenhuis(AlmostComplexField::constant(kCube, standard_j()), p).max_abs() == 0.0);

  // H = 1 gives constant coefficients.
  const HolomorphicFunction one{ComplexPoly2({{0, 0, {1.0, 0.0}}}), false};
  const ProductWeylChart flat = product_for(ScalarExpr(0.0));
  const AlmostComplexField J1 = hyperhermitian_j_from_H(flat, one, {1, 1});
  CHECK(nijenhuis(J1, p).max_abs() == 0.0);
  const Eigen::Matrix4d m = J1.at(p);
  CHECK(m(2, 0) == 1.0);
  CHECK(m(3, 1) == -1.0);

  // Holomorphic versus swapped coefficients.
  const ProductWeylChart P = product_for(E("x1*x3 - x2*x4"));
  const AlmostComplexField J = hyperhermitian_j_from_H(P, exp_zw(), kSigns);
  const auto [a, b] = holomorphic_coefficients(exp_zw(), kSigns);
  const AlmostComplexField swapped = structure_from_coefficients(kCube, b, a, kSigns);
  QuasiRandomSampler s(4, 5);
  double worst_swapped = 0.0;
  for (int k = 0; k < 30; ++k) {
    const Point q = s.next(kCube);
    CHECK(nijenhuis(J, q).max_abs() < 1e-10);
    worst_swapped = std::max(worst_swapped, nijenhuis(swapped, q).max_abs());
  }
  CHECK(worst_swapped > 1e-2);
}

TEST_CASE("nijenhuis against a finite-difference bracket oracle") {
  // Non-integrable J from swapped coefficients; brackets of vector fields by
  // central differences of the component functions.
  const auto [a, b] = holomorphic_coefficients(exp_zw(), kSigns);
  const AlmostComplexField J = structure_from_coefficients(kCube, b, a, kSigns);
  const Point p{0.3, 0.1, -0.2, 0.4};
  const double h = 1e-5;
  auto col = [&](int i, const Point& q) -> Eigen::Vector4d { return J.at(q).col(i); };
  auto apply_j = [&](const Eigen::Vector4d& v, const Point& q) -> Eigen::Vector4d { return J.at(q) * v; };
  // Directional derivative of a vector field V along U at p.
  auto deriv = [&](auto&& V, const Eigen::Vector4d& U) -> Eigen::Vector4d {
    Point qp = p, qm = p;
    for (int a2 = 0; a2 < 4; ++a2) {
      qp[static_cast<std::size_t>(a2)] += h * U(a2);
      qm[static_cast<std::size_t>(a2)] -= h * U(a2);
    }
    return (V(qp) - V(qm)) / (2 * h);
  };
  const TensorValue N = nijenhuis(J, p);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      auto JX = [&](const Point& q) { return col(i, q); };
      auto JY = [&](const Point& q) { return col(j, q); };
      const Eigen::Vector4d ei = Eigen::Vector4d::Unit(i), ej = Eigen::Vector4d::Unit(j);
      const Eigen::Vector4d br1 = deriv(JY, col(i, p)) - deriv(JX, col(j, p));
      const Eigen::Vector4d br2 = -deriv(JX, ej);  // [JX, Y]
      const Eigen::Vector4d br3 = deriv(JY, ei);   // [X, JY]
      const Eigen::Vector4d oracle = br1 - apply_j(br2, p) - apply_j(br3, p);
      for (int k = 0; k < 4; ++k) CHECK(std::abs(N({i, j, k}) - oracle(k)) < 1e-6);
    }
  }
}

TEST_CASE("hyperhermitian_j_from_H examples") {
  const ProductWeylChart P = product_for(E("x1*x3 - x2*x4"));
  const AlmostComplexField J = hyperhermitian_j_from_H(P, exp_zw(), kSigns);
  const FactorComplexStructures S = factor_complex_structures(P, kSigns);
  const AlmostComplexField K = compose(S.I, J);
  QuasiRandomSampler s(4, 6);
  for (int k = 0; k < 50; ++k) {
    const Point p = s.next(kCube);
    const Eigen::Matrix4d j = J.at(p);
    const Eigen::Matrix4d i = S.I.at(p);
    CHECK((j * j + Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(hermitian_defect(P.weyl(), J, p) < 1e-10);
    CHECK((i * j + j * i).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(nijenhuis(J, p).max_abs() < 1e-10);
    CHECK(nijenhuis(K, p).max_abs() < 1e-9);
    CHECK(endomorphism_covariant_derivative(P.weyl(), J, p).max_abs() < 1e-9);
    CHECK(endomorphism_covariant_derivative(P.weyl(), K, p).max_abs() < 1e-9);
  }
  // Errors: f mismatch, H vanishing, non-flat factor.
  CHECK_THROWS_AS(hyperhermitian_j_from_H(product_for(E("x1*x3 + x2*x4")), exp_zw(), kSigns), InvalidArgument);
  CHECK_THROWS_AS(hyperhermitian_j_from_H(P, exp_zw(), {1, 1}), InvalidArgument);
  const HolomorphicFunction z{ComplexPoly2({{1, 0, {1.0, 0.0}}}), false};
  CHECK_THROWS_AS(hyperhermitian_j_from_H(P, z, kSigns), InvalidArgument);
  ExprMatrix g1(2, ExprVector(2));
  g1[0][0] = ScalarExpr(2.0);
  g1[1][1] = ScalarExpr(1.0);
  ExprMatrix g2 = g1;
  g2[0][0] = ScalarExpr(1.0);
  const ProductWeylChart curved = build_product(kSquare, g1, kSquare, g2, ScalarExpr(0.0), E("2*x1*x3 - 2*x2*x4"));
  CHECK_THROWS_AS(hyperhermitian_j_from_H(curved, exp_zw(), kSigns), InvalidArgument);
}

TEST_CASE("hyper-Hermitian products from random holomorphic H") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 6; ++trial) {
    const HolomorphicFunction H = random_h(rng, trial % 2 == 1);
    const ScalarExpr f = minus_ln_abs(H);
    const ProductWeylChart P = product_for(f);
    const AlmostComplexField J = hyperhermitian_j_from_H(P, H, kSigns);
    const FactorComplexStructures S = factor_complex_structures(P, kSigns);
    const AlmostComplexField K = compose(S.I, J);
    QuasiRandomSampler s(4, 60 + static_cast<std::uint64_t>(trial));
    for (int k = 0; k < 10; ++k) {
      const Point p = s.next(kCube);
      const auto [d1, d2] = biharmonic_defect(f, p);
      CHECK(d1 + d2 < 1e-9);
      for (const AlmostComplexField* A : {&S.I, &J, &K}) {
        CHECK(nijenhuis(*A, p).max_abs() < 1e-9);
        CHECK(endomorphism_covariant_derivative(P.weyl(), *A, p).max_abs() < 1e-9);
      }
      const MetricValue g = P.weyl().metric(p);
      const auto [sd, asd] = sd_asd_split(g, S.orientation, faraday(P.weyl(), p));
      CHECK(sd.max_abs() < 1e-10);
      CHECK(asd_identity_defect(P.weyl(), p) < 1e-9);
    }
  }
}

TEST_CASE("lck_lee_form") {
  const Point p{0.2, -0.3, 0.1, 0.4};
  const WeylChart flat(kCube, flat_metric(4), ExprVector(4));
  const AlmostComplexField J0 = AlmostComplexField::constant(kCube, standard_j());
  CHECK(lck_lee_form(flat, J0, p).max_abs() == 0.0);

  const ProductWeylChart P = product_for(E("x1*x3 - x2*x4"));
  const FactorComplexStructures S = factor_complex_structures(P, kSigns);
  const AlmostComplexField J = hyperhermitian_j_from_H(P, exp_zw(), kSigns);
  const ScalarExpr u = E("0.3*x1*x2 - 0.2*x4 + 0.1*x3^2");
  const WeylChart V = gauge_transform(P.weyl(), u);
  QuasiRandomSampler s(4, 8);
  for (int k = 0; k < 30; ++k) {
    const Point q = s.next(kCube);
    const KFormValue theta = P.weyl().lee_form(q);
    for (const AlmostComplexField* A : {&S.I, &J}) {
      const KFormValue tau = lck_lee_form(P.weyl(), *A, q);
      CHECK((tau - theta).max_abs() < 1e-9);
      CHECK(lck_equation_defect(P.weyl(), *A, q, tau) < 1e-9);
      // Agreement with the least-squares Lee form of the same 2-form.
      const MinimalLeeForm m = minimal_lee_form(P.weyl(), fundamental_form(P.weyl(), *A), q);
      CHECK((m.tau - tau).max_abs() < 1e-9);
      // Gauge rule tau -> tau - du.
      const KFormValue tau_v = lck_lee_form(V, *A, q);
      for (int a = 0; a < 4; ++a) CHECK(std::abs(tau_v({a}) - (tau({a}) - partial(u, a).eval(q))) < 1e-10);
      CHECK(lck_equation_defect(V, *A, q, tau_v) < 1e-9);
    }
    // The global sign is pinned: the opposite sign fails wherever tau != 0.
    const KFormValue tau = lck_lee_form(P.weyl(), S.I, q);
    if (tau.max_abs() > 0.1) CHECK(lck_equation_defect(P.weyl(), S.I, q, -1.0 * tau) > 1e-3);
  }

  // Random Hermitian structure for a random conformally flat metric.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const ScalarExpr w = weyl::testing::random_polynomial(rng, 4, 2);
    ExprMatrix g = flat_metric(4);
    for (int a = 0; a < 4; ++a) g[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = exp(0.3 * w);
    const WeylChart W(Chart::cube(4, -0.5, 0.5), g, ExprVector(4));
    const Point q{0.1, 0.2, -0.3, 0.05};
    const KFormValue tau = lck_lee_form(W, J0, q);
    CHECK(lck_equation_defect(W, J0, q, tau) < 1e-9);
    // Kahler up to scale: tau = -d(0.3 w)/2.
    for (int a = 0; a < 4; ++a) CHECK(std::abs(tau({a}) + 0.15 * partial(w, a).eval(q)) < 1e-10);
  }
}

TEST_CASE("curvature operator and holonomy rank") {
  const WeylChart flat(kCube, flat_metric(4), ExprVector(4));
  const Point p{0.3, -0.4, 0.5, 0.2};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::Matrix4d alpha = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      alpha(a, b) = N(rng);
      alpha(b, a) = -alpha(a, b);
    }
  }
  CHECK(curvature_operator(flat, p, alpha).cwiseAbs().maxCoeff() == 0.0);
  CHECK(holonomy_image_rank(flat, p) == 0);

  const ProductWeylChart P = product_for(E("x1*x3 - x2*x4"));
  const WeylChart& W = P.weyl();
  // Linearity and X ^ Y -> R_{X,Y}.
  const TensorValue R = weyl_curvature_endomorphism(W, p);
  const Eigen::Vector4d X(0.3, -1.0, 0.2, 0.5), Y(1.0, 0.4, -0.6, 0.1);
  const Eigen::Matrix4d XY = X * Y.transpose() - Y * X.transpose();
  Eigen::Matrix4d RXY = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) RXY(l, k) += X(a) * Y(b) * R({a, b, k, l});
      }
    }
  }
  CHECK((curvature_operator(W, p, XY) - RXY).cwiseAbs().maxCoeff() < 1e-12);

  QuasiRandomSampler s(4, 9);
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const Point q = s.next(kCube);
    const MetricValue g = W.metric(q);
    const KFormValue F = faraday(W, q);
    for (int which = 1; which <= 2; ++which) {
      const Eigen::Matrix4d Ri = curvature_operator(W, q, raise_two_form(g, weightless_volume_form(P, which).eval(q)));
      CHECK(Ri.cwiseAbs().maxCoeff() < 1e-9);
    }
    const double norm2 = inner(g, F, F);
    if (std::sqrt(norm2) < 1e-8) continue;
    ++checked;
    const Eigen::Matrix4d RF = curvature_operator(W, q, raise_two_form(g, F));
    CHECK((RF - norm2 * Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, norm2));
    CHECK(holonomy_image_rank(W, q) == 2);
    CHECK(asd_identity_defect(W, q) < 1e-9);
  }
  CHECK(checked > 40);

  // Hermitian but not hyper-Hermitian: the rank is reported, not asserted.
  const ProductWeylChart Q = product_for(E("x1*x3"));
  const int rank = holonomy_image_rank(Q.weyl(), p);
  MESSAGE("holonomy image rank for f = x1 x3: " << rank);
  CHECK(rank >= 0);
  CHECK(rank <= 6);
}
