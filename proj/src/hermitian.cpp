#include "weyl/hermitian.hpp"

#include <cmath>

#include "weyl/errors.hpp"
#include "weyl/sampling.hpp"

namespace weyl {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

Eigen::Matrix4d eval_matrix(const ExprMatrix& m, std::span<const double> p) {
  Eigen::Matrix4d out;
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) out(k, j) = m[sz(k)][sz(j)].eval(p);
  }
  return out;
}

ExprMatrix zero_matrix() { return ExprMatrix(4, ExprVector(4)); }

}  // namespace

AlmostComplexField::AlmostComplexField(Chart chart, ExprMatrix J, bool check)
    : chart_(std::move(chart)), J_(std::move(J)) {
  if (chart_.dim() != 4) throw DimensionError("almost complex fields live on 4-dimensional charts");
  if (J_.size() != 4) throw DimensionError("J must be 4x4");
  for (const auto& row : J_) {
    if (row.size() != 4) throw DimensionError("J must be 4x4");
    for (const auto& e : row) {
      if (e.max_coordinate() >= 4) throw DimensionError("J uses a coordinate outside the chart");
    }
  }
  QuasiRandomSampler sampler(4, 0x1c5);
  for (int s = 0; check && s < 64; ++s) {
    const Point p = sampler.next(chart_);
    const Eigen::Matrix4d m = eval_matrix(J_, p);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m * m + Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() > 1e-10 * scale * scale) {
      throw InvalidArgument("J does not square to -Id on the chart box");
    }
  }
  dJ_.assign(4, zero_matrix());
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) {
      for (int j = 0; j < 4; ++j) dJ_[sz(i)][sz(k)][sz(j)] = partial(J_[sz(k)][sz(j)], i);
    }
  }
}

AlmostComplexField::AlmostComplexField(Chart chart, ExprMatrix J)
    : AlmostComplexField(std::move(chart), std::move(J), true) {}

AlmostComplexField AlmostComplexField::unchecked(Chart chart, ExprMatrix J) {
  return AlmostComplexField(std::move(chart), std::move(J), false);
}

AlmostComplexField AlmostComplexField::constant(Chart chart, const Eigen::Matrix4d& J) {
  ExprMatrix m = zero_matrix();
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) m[sz(k)][sz(j)] = ScalarExpr(J(k, j));
  }
  return AlmostComplexField(std::move(chart), std::move(m));
}

Eigen::Matrix4d AlmostComplexField::at(std::span<const double> p) const { return eval_matrix(J_, p); }

Eigen::Matrix4d AlmostComplexField::partial_at(int i, std::span<const double> p) const {
  return eval_matrix(dJ_.at(sz(i)), p);
}

AlmostComplexField compose(const AlmostComplexField& A, const AlmostComplexField& B) {
  ExprMatrix m = zero_matrix();
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      ScalarExpr acc;
      for (int l = 0; l < 4; ++l) acc = acc + A.expr()[sz(k)][sz(l)] * B.expr()[sz(l)][sz(j)];
      m[sz(k)][sz(j)] = acc;
    }
  }
  return AlmostComplexField::unchecked(A.chart(), std::move(m));
}

double hermitian_defect(const WeylChart& W, const AlmostComplexField& J, std::span<const double> p) {
  const Eigen::Matrix4d g = W.metric(p).matrix();
  const Eigen::Matrix4d m = J.at(p);
  return (m.transpose() * g * m - g).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

FactorComplexStructures factor_complex_structures(const ProductWeylChart& P, std::array<int, 2> signs) {
  if (P.n1() != 2 || P.n2() != 2) throw DimensionError("factor complex structures need a 2+2 product");
  for (int s : signs) {
    if (s != 1 && s != -1) throw InvalidArgument("signs must be +1 or -1");
  }
  const WeylChart& W = P.weyl();
  // I(k, j) = g^{kl} w_{jl}; the factor blocks of g are e^{fi} gi, so the
  // inverse is blockwise.
  auto build = [&](int which) {
    const KFormField w = weightless_volume_form(P, which);
    const int off = which == 1 ? 0 : 2;
    const ScalarExpr& f = which == 1 ? P.f1() : P.f2();
    const ExprMatrix& gi = which == 1 ? P.g1() : P.g2();
    // Inverse of the 2x2 factor block in product coordinates.
    std::map<int, ScalarExpr> rename{{0, ScalarExpr::coordinate(off)}, {1, ScalarExpr::coordinate(off + 1)}};
    const ScalarExpr a = substitute(gi[0][0], rename);
    const ScalarExpr b = substitute(gi[0][1], rename);
    const ScalarExpr d = substitute(gi[1][1], rename);
    const ScalarExpr scale = exp(-f) / (a * d - b * b);
    const ScalarExpr inv[2][2] = {{scale * d, -(scale * b)}, {-(scale * b), scale * a}};
    ExprMatrix m = zero_matrix();
    const double s = signs[sz(which - 1)];
    for (int k = 0; k < 2; ++k) {
      for (int j = 0; j < 2; ++j) {
        ScalarExpr acc;
        for (int l = 0; l < 2; ++l) {
          const int jl[2] = {off + j, off + l};
          acc = acc + inv[k][l] * w.at(jl);
        }
        m[sz(off + k)][sz(off + j)] = s * acc;
      }
    }
    return m;
  };
  ExprMatrix m1 = build(1);
  ExprMatrix m2 = build(2);
  ExprMatrix sum = zero_matrix();
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) sum[sz(k)][sz(j)] = k < 2 ? m1[sz(k)][sz(j)] : m2[sz(k)][sz(j)];
  }
  const Chart& chart = W.chart();
  return FactorComplexStructures{AlmostComplexField::unchecked(chart, std::move(m1)),
                                 AlmostComplexField::unchecked(chart, std::move(m2)),
                                 AlmostComplexField(chart, std::move(sum)), signs[0] * signs[1]};
}

TensorValue nijenhuis(const AlmostComplexField& J, std::span<const double> p) {
  const Eigen::Matrix4d m = J.at(p);
  std::array<Eigen::Matrix4d, 4> d;
  for (int i = 0; i < 4; ++i) d[sz(i)] = J.partial_at(i, p);
  TensorValue N(4, {Variance::Covariant, Variance::Covariant, Variance::Contravariant});
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
          acc += m(a, i) * d[sz(a)](k, j) - m(a, j) * d[sz(a)](k, i);
          acc += m(k, a) * d[sz(j)](a, i) - m(k, a) * d[sz(i)](a, j);
        }
        const int idx[3] = {i, j, k};
        N.at(idx) = acc;
      }
    }
  }
  return N;
}

TensorValue endomorphism_covariant_derivative(const WeylChart& W, const AlmostComplexField& A,
                                              std::span<const double> p) {
  if (W.dim() != 4) throw DimensionError("endomorphism fields live in dimension 4");
  const TensorValue G = weyl_christoffels(W, p);
  const Eigen::Matrix4d m = A.at(p);
  TensorValue out(4, {Variance::Covariant, Variance::Covariant, Variance::Contravariant});
  for (int i = 0; i < 4; ++i) {
    const Eigen::Matrix4d d = A.partial_at(i, p);
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        double acc = d(k, j);
        for (int l = 0; l < 4; ++l) acc += G({k, i, l}) * m(l, j) - G({l, i, j}) * m(k, l);
        const int idx[3] = {i, j, k};
        out.at(idx) = acc;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::pair<ScalarExpr, ScalarExpr> holomorphic_coefficients(const HolomorphicFunction& H, std::array<int, 2> signs) {
  auto [re, im] = holomorphic_parts(H.poly, -signs[0], signs[1]);
  if (!H.exponential) return {re, im};
  const ScalarExpr r = exp(re);
  return {r * cos(im), r * sin(im)};
}

AlmostComplexField structure_from_coefficients(const Chart& chart, const ScalarExpr& a, const ScalarExpr& b,
                                               std::array<int, 2> signs) {
  const double s1 = signs[0];
  const double s2 = signs[1];
  // Columns of A are J d1, J d2 in the (d3, d4) basis; the lower-left block
  // of J is A and the upper-right block is -A^{-1}.
  const ScalarExpr A[2][2] = {{a, s1 * b}, {s2 * b, -(s1 * s2) * a}};
  // A^{-1} = adj(A) / det(A) with det(A) = -s1 s2 (a^2 + b^2).
  const ScalarExpr det = -(s1 * s2) * (a * a + b * b);
  const ScalarExpr inv[2][2] = {{A[1][1] / det, -A[0][1] / det}, {-A[1][0] / det, A[0][0] / det}};
  ExprMatrix m = zero_matrix();
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      m[sz(k + 2)][sz(j)] = A[k][j];
      m[sz(k)][sz(j + 2)] = -inv[k][j];
    }
  }
  return AlmostComplexField(chart, std::move(m));
}

AlmostComplexField hyperhermitian_j_from_H(const ProductWeylChart& P, const HolomorphicFunction& H,
                                           std::array<int, 2> signs) {
  if (P.n1() != 2 || P.n2() != 2) throw DimensionError("hyper-Hermitian structures need a 2+2 product");
  for (int s : signs) {
    if (s != 1 && s != -1) throw InvalidArgument("signs must be +1 or -1");
  }
  for (const ExprMatrix* g : {&P.g1(), &P.g2()}) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const ScalarExpr& e = (*g)[sz(i)][sz(j)];
        if (!e.is_constant() || e.value() != (i == j ? 1.0 : 0.0)) {
          throw InvalidArgument("hyper-Hermitian construction needs flat factors");
        }
      }
    }
  }
  const auto [a, b] = holomorphic_coefficients(H, signs);
  const Chart& chart = P.weyl().chart();
  const ScalarExpr f = 0.5 * (P.f2() - P.f1());
  QuasiRandomSampler sampler(4, 0x4a);
  for (int s = 0; s < 1000; ++s) {
    const Point p = sampler.next(chart);
    const double av = a.eval(p);
    const double bv = b.eval(p);
    const double mod2 = av * av + bv * bv;
    if (!(mod2 > 1e-24)) throw InvalidArgument("H vanishes in the chart box");
    const double expected = -0.5 * std::log(mod2);
    if (std::abs(f.eval(p) - expected) > 1e-10 * std::max(1.0, std::abs(expected))) {
      throw InvalidArgument("conformal factor does not match -ln|H|");
    }
  }
  return structure_from_coefficients(chart, a, b, signs);
}

// ---------------------------------------------------------------------------

KFormField fundamental_form(const WeylChart& W, const AlmostComplexField& J) {
  if (W.dim() != 4) throw DimensionError("fundamental forms live in dimension 4");
  KFormField w(4, 2);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      ScalarExpr acc;
      for (int k = 0; k < 4; ++k) acc = acc + J.expr()[sz(k)][sz(i)] * W.g()[sz(k)][sz(j)];
      w.set({i, j}, acc);
    }
  }
  return w;
}

KFormValue lck_lee_form(const WeylChart& W, const AlmostComplexField& J, std::span<const double> p) {
  const KFormField w = fundamental_form(W, J);
  const KFormValue wp = w.eval(p);
  const KFormValue dw = exterior_derivative(w).eval(p);
  // Columns: w ^ dx^m on the increasing triples.
  static constexpr int triples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  Eigen::Matrix4d M;
  Eigen::Vector4d rhs;
  for (int m = 0; m < 4; ++m) {
    const KFormValue col = wedge(wp, KFormValue::basis(4, {m}));
    for (int t = 0; t < 4; ++t) M(t, m) = -2.0 * col.at(triples[t]);
  }
  for (int t = 0; t < 4; ++t) rhs(t) = dw.at(triples[t]);
  Eigen::FullPivLU<Eigen::Matrix4d> lu(M);
  const double scale = std::max(1e-300, M.cwiseAbs().maxCoeff());
  lu.setThreshold(1e-12);
  if (lu.rank() < 4 || std::abs(lu.determinant()) < 1e-12 * std::pow(scale, 4)) {
    throw InvalidArgument("fundamental form is degenerate");
  }
  const Eigen::Vector4d tau = lu.solve(rhs);
  return KFormValue::from_covector(std::span<const double>(tau.data(), 4));
}

double lck_equation_defect(const WeylChart& W, const AlmostComplexField& J, std::span<const double> p,
                           const KFormValue& tau) {
  const KFormField w = fundamental_form(W, J);
  const KFormValue wp = w.eval(p);
  const TensorValue G = levi_civita_christoffels(W, p);
  const Eigen::Matrix4d g = W.metric(p).matrix();
  const Eigen::Matrix4d m = J.at(p);
  Eigen::Vector4d t, jt;
  for (int a = 0; a < 4; ++a) t(a) = tau({a});
  jt = -(m.transpose() * t);  // (J tau)_k = -tau_l J^l_k
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    const KFormValue dwi = w.partial(i).eval(p);
    const Eigen::Vector4d x = g.col(i);
    const Eigen::Vector4d jx = g * m.col(i);
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        double nabla = dwi({j, k});
        for (int l = 0; l < 4; ++l) nabla -= G({l, i, j}) * wp({l, k}) + G({l, i, k}) * wp({j, l});
        const double rhs = x(j) * jt(k) - x(k) * jt(j) + jx(j) * t(k) - jx(k) * t(j);
        worst = std::max(worst, std::abs(nabla - lck_sign * rhs));
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::Matrix4d endomorphism(const TensorValue& R, int a, int b) {
  Eigen::Matrix4d out;
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 4; ++l) out(l, k) = R({a, b, k, l});
  }
  return out;
}

}  // namespace

Eigen::Matrix4d curvature_operator(const WeylChart& W, std::span<const double> p, const Eigen::Matrix4d& alpha) {
  if (W.dim() != 4) throw DimensionError("the curvature operator is implemented in dimension 4");
  const TensorValue R = weyl_curvature_endomorphism(W, p);
  Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      if (alpha(a, b) != 0.0) out += alpha(a, b) * endomorphism(R, a, b);
    }
  }
  return out;
}

Eigen::Matrix4d wedge_endomorphism(const MetricValue& g, const Eigen::Vector4d& X, const Eigen::Vector4d& Y) {
  const Eigen::Matrix4d G = g.matrix();
  return Y * (G * X).transpose() - X * (G * Y).transpose();
}

double asd_identity_defect(const WeylChart& W, std::span<const double> p) {
  if (W.dim() != 4) throw DimensionError("the identity is stated in dimension 4");
  const MetricValue g = W.metric(p);
  const KFormValue F = faraday(W, p);
  const Eigen::MatrixXd Fs = two_form_to_endomorphism(g, F);
  const TensorValue R = weyl_curvature_endomorphism(W, p);
  double worst = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 2; b < 4; ++b) {
      const Eigen::Matrix4d B =
          wedge_endomorphism(g, Eigen::Vector4d::Unit(a), Eigen::Vector4d::Unit(b));
      const Eigen::Matrix4d expected = F({a, b}) * Eigen::Matrix4d::Identity() + Fs * B - B * Fs;
      worst = std::max(worst, (endomorphism(R, a, b) - expected).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

int holonomy_image_rank(const WeylChart& W, std::span<const double> p, double tol_svd) {
  if (W.dim() != 4) throw DimensionError("holonomy rank is implemented in dimension 4");
  const TensorValue R = weyl_curvature_endomorphism(W, p);
  Eigen::Matrix<double, 16, 6> M;
  int col = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const Eigen::Matrix4d E = endomorphism(R, a, b);
      M.col(col++) = Eigen::Map<const Eigen::Matrix<double, 16, 1>>(E.data());
    }
  }
  const Eigen::JacobiSVD<Eigen::Matrix<double, 16, 6>> svd(M);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv(i) > tol_svd * sv(0) ? 1 : 0;
  return rank;
}

}  // namespace weyl
