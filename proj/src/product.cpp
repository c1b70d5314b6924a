#include "weyl/product.hpp"

#include <cmath>

#include "weyl/errors.hpp"
#include "weyl/sampling.hpp"

namespace weyl {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

ScalarExpr determinant(const ExprMatrix& m) {
  switch (m.size()) {
    case 1:
      return m[0][0];
    case 2:
      return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    case 3:
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    default:
      throw DimensionError("factor dimension must be within 1..3");
  }
}

void check_factor(const Chart& chart, const ExprMatrix& g) {
  const int n = chart.dim();
  if (n < 1 || n > 3) throw DimensionError("factor dimension must be within 1..3");
  if (static_cast<int>(g.size()) != n) throw DimensionError("factor metric does not match its chart");
  for (const auto& row : g) {
    if (static_cast<int>(row.size()) != n) throw DimensionError("factor metric is not square");
    for (const auto& e : row) {
      if (e.max_coordinate() >= n) throw DimensionError("factor metric uses a coordinate outside its factor");
    }
  }
  QuasiRandomSampler sampler(n, 0xfac7);
  for (int s = 0; s < 64; ++s) {
    const Point p = sampler.next(chart);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = g[sz(i)][sz(j)].eval(p);
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      throw DimensionError("factor metric is not symmetric");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(m).info() != Eigen::Success) {
      throw SingularMetricError("factor metric is not positive definite on its box");
    }
  }
}

// Moves factor-local coordinates x(j) to product slot offset + j.
ExprMatrix shift(const ExprMatrix& g, int offset) {
  std::map<int, ScalarExpr> rename;
  for (int j = 0; j < static_cast<int>(g.size()); ++j) rename[j] = ScalarExpr::coordinate(offset + j);
  ExprMatrix out = g;
  for (auto& row : out) {
    for (auto& e : row) e = substitute(e, rename);
  }
  return out;
}

}  // namespace

ProductWeylChart::ProductWeylChart(Chart c1, ExprMatrix g1, Chart c2, ExprMatrix g2, ScalarExpr f1,
                                   ScalarExpr f2, WeylChart w)
    : chart1_(std::move(c1)),
      chart2_(std::move(c2)),
      g1_(std::move(g1)),
      g2_(std::move(g2)),
      f1_(std::move(f1)),
      f2_(std::move(f2)),
      weyl_(std::move(w)) {}

ProductWeylChart build_product(Chart chart1, ExprMatrix g1, Chart chart2, ExprMatrix g2, ScalarExpr f1,
                               ScalarExpr f2) {
  check_factor(chart1, g1);
  check_factor(chart2, g2);
  const int n1 = chart1.dim();
  const int n2 = chart2.dim();
  const int n = n1 + n2;
  if (n > kMaxDim) throw DimensionError("product dimension exceeds 6");
  if (f1.max_coordinate() >= n || f2.max_coordinate() >= n) {
    throw DimensionError("conformal factor uses a coordinate outside the product");
  }

  std::vector<std::pair<double, double>> box = chart1.box();
  box.insert(box.end(), chart2.box().begin(), chart2.box().end());

  const ScalarExpr e1 = exp(f1);
  const ScalarExpr e2 = exp(f2);
  const ExprMatrix s2 = shift(g2, n1);
  ExprMatrix g(sz(n), ExprVector(sz(n)));
  ExprVector theta(sz(n));
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n1; ++j) g[sz(i)][sz(j)] = e1 * g1[sz(i)][sz(j)];
    theta[sz(i)] = -0.5 * partial(f2, i);
  }
  for (int i = 0; i < n2; ++i) {
    for (int j = 0; j < n2; ++j) g[sz(n1 + i)][sz(n1 + j)] = e2 * s2[sz(i)][sz(j)];
    theta[sz(n1 + i)] = -0.5 * partial(f1, n1 + i);
  }
  WeylChart w(Chart(n, std::move(box)), std::move(g), std::move(theta));
  return ProductWeylChart(std::move(chart1), std::move(g1), std::move(chart2), std::move(g2), std::move(f1),
                          std::move(f2), std::move(w));
}

ProductWeylChart build_flat_product(Chart chart1, Chart chart2, ScalarExpr f1, ScalarExpr f2) {
  auto identity = [](int n) {
    ExprMatrix g(sz(n), ExprVector(sz(n)));
    for (int i = 0; i < n; ++i) g[sz(i)][sz(i)] = ScalarExpr(1.0);
    return g;
  };
  ExprMatrix g1 = identity(chart1.dim());
  ExprMatrix g2 = identity(chart2.dim());
  return build_product(std::move(chart1), std::move(g1), std::move(chart2), std::move(g2), std::move(f1),
                       std::move(f2));
}

KFormField weightless_volume_form(const ProductWeylChart& P, int which) {
  if (which != 1 && which != 2) throw InvalidArgument("factor must be 1 or 2");
  const int ni = which == 1 ? P.n1() : P.n2();
  const int offset = which == 1 ? 0 : P.n1();
  const ScalarExpr& f = which == 1 ? P.f1() : P.f2();
  const ScalarExpr det = determinant(shift(which == 1 ? P.g1() : P.g2(), offset));
  ScalarExpr exponent = (0.5 * ni) * f;
  ScalarExpr coefficient;
  if (det.is_constant()) {
    coefficient = std::sqrt(det.value()) * exp(exponent);
  } else {
    coefficient = exp(exponent + 0.5 * ln(det));
  }
  KFormField w(P.dim(), ni);
  Index idx(sz(ni));
  for (int j = 0; j < ni; ++j) idx[sz(j)] = offset + j;
  w.set(idx, coefficient);
  return w;
}

double mixed_faraday_check(const ProductWeylChart& P, int samples, std::uint64_t seed) {
  const KFormField F = faraday_field(P.weyl());
  const int n = P.dim();
  QuasiRandomSampler sampler(n, seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Point p = sampler.next(P.weyl().chart());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (P.factor_of(i) != P.factor_of(j)) continue;
        const int ij[2] = {i, j};
        worst = std::max(worst, std::abs(F.at(ij).eval(p)));
      }
    }
  }
  return worst;
}

Eigen::MatrixXd slice_ricci(const ProductWeylChart& P, int which, std::span<const double> p) {
  if (which != 1 && which != 2) throw InvalidArgument("factor must be 1 or 2");
  const int n = P.dim();
  if (static_cast<int>(p.size()) != n) throw DimensionError("point has the wrong dimension");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const int ni = which == 1 ? P.n1() : P.n2();
  if (ni == 1) return out;
  const int offset = which == 1 ? 0 : P.n1();

  // Freeze the other factor at p, renumber this factor's coordinates from 0.
  std::map<int, ScalarExpr> freeze;
  for (int k = 0; k < n; ++k) {
    if (P.factor_of(k) == which) {
      freeze[k] = ScalarExpr::coordinate(k - offset);
    } else {
      freeze[k] = ScalarExpr(p[sz(k)]);
    }
  }
  const ScalarExpr conformal = exp(substitute(which == 1 ? P.f1() - P.f2() : P.f2() - P.f1(), freeze));
  const ExprMatrix& gi = which == 1 ? P.g1() : P.g2();
  ExprMatrix g(sz(ni), ExprVector(sz(ni)));
  for (int a = 0; a < ni; ++a) {
    for (int b = 0; b < ni; ++b) g[sz(a)][sz(b)] = conformal * gi[sz(a)][sz(b)];
  }
  const WeylChart slice(which == 1 ? P.chart1() : P.chart2(), std::move(g), ExprVector(sz(ni)));
  const std::vector<double> q(p.begin() + offset, p.begin() + offset + ni);
  out.block(offset, offset, ni, ni) = weyl_ricci(slice, q);
  return out;
}

Eigen::MatrixXd fhat(const ProductWeylChart& P, std::span<const double> p) {
  const KFormValue F = faraday(P.weyl(), p);
  const int n = P.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < P.n1(); ++i) {
    for (int a = P.n1(); a < n; ++a) {
      out(i, a) = F({i, a});
      out(a, i) = F({i, a});
    }
  }
  return out;
}

Eigen::MatrixXd ricci_decomposition_rhs(const ProductWeylChart& P, std::span<const double> p) {
  const int n = P.dim();
  const KFormValue F = faraday(P.weyl(), p);
  Eigen::MatrixXd Fm(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) Fm(i, j) = F({i, j});
  }
  return slice_ricci(P, 1, p) + slice_ricci(P, 2, p) + (2.0 - n) / 2.0 * Fm +
         (P.n1() - P.n2()) / 2.0 * fhat(P, p);
}

double ricci_decomposition_defect(const ProductWeylChart& P, std::span<const double> p) {
  return (weyl_ricci(P.weyl(), p) - ricci_decomposition_rhs(P, p)).cwiseAbs().maxCoeff();
}

}  // namespace weyl
