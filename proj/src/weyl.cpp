#include "weyl/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "weyl/errors.hpp"
#include "weyl/sampling.hpp"

namespace weyl {

namespace {

constexpr int kValidationSamples = 64;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

// Pointwise values of g, theta and their derivatives, plus the Weyl
// Christoffel symbols and (optionally) their first derivatives.
struct Jet {
  int n;
  MetricValue g;
  std::vector<double> dg;      // [k][i][j]
  std::vector<double> ddg;     // [k][l][i][j]
  std::vector<double> theta;   // [i]
  std::vector<double> dtheta;  // [k][i]
  std::vector<double> gamma;   // [k][i][j]
  std::vector<double> dgamma;  // [m][k][i][j]

  double& at3(std::vector<double>& v, int a, int b, int c) const { return v[sz((a * n + b) * n + c)]; }
  double at3(const std::vector<double>& v, int a, int b, int c) const { return v[sz((a * n + b) * n + c)]; }
  double at4(const std::vector<double>& v, int a, int b, int c, int d) const {
    return v[sz(((a * n + b) * n + c) * n + d)];
  }
};

Jet make_jet(const WeylChart& W, std::span<const double> p, bool with_theta, bool second_order) {
  const int n = W.dim();
  Jet J{n, W.metric(p), {}, {}, {}, {}, {}, {}};
  J.dg.assign(sz(n * n * n), 0.0);
  J.theta.assign(sz(n), 0.0);
  J.dtheta.assign(sz(n * n), 0.0);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = W.dg(k, i, j).eval(p);
        J.at3(J.dg, k, i, j) = v;
        J.at3(J.dg, k, j, i) = v;
      }
    }
  }
  if (with_theta) {
    for (int i = 0; i < n; ++i) J.theta[sz(i)] = W.theta()[sz(i)].eval(p);
    if (second_order) {
      for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) J.dtheta[sz(k * n + i)] = W.dtheta(k, i).eval(p);
      }
    }
  }
  if (second_order) {
    J.ddg.assign(sz(n * n * n * n), 0.0);
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        for (int i = 0; i < n; ++i) {
          for (int j = i; j < n; ++j) {
            const double v = W.ddg(k, l, i, j).eval(p);
            J.ddg[sz(((k * n + l) * n + i) * n + j)] = v;
            J.ddg[sz(((k * n + l) * n + j) * n + i)] = v;
            J.ddg[sz(((l * n + k) * n + i) * n + j)] = v;
            J.ddg[sz(((l * n + k) * n + j) * n + i)] = v;
          }
        }
      }
    }
  }

  const Eigen::MatrixXd& gi = J.g.inverse();
  const Eigen::MatrixXd& gm = J.g.matrix();
  // First-kind symbols G_{l,ij} and their derivatives.
  std::vector<double> first(sz(n * n * n));
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        J.at3(first, l, i, j) = 0.5 * (J.at3(J.dg, i, j, l) + J.at3(J.dg, j, i, l) - J.at3(J.dg, l, i, j));
      }
    }
  }
  std::vector<double> theta_up(sz(n), 0.0);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) theta_up[sz(k)] += gi(k, l) * J.theta[sz(l)];
  }
  J.gamma.assign(sz(n * n * n), 0.0);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int l = 0; l < n; ++l) v += gi(k, l) * J.at3(first, l, i, j);
        v += (k == j ? J.theta[sz(i)] : 0.0) + (k == i ? J.theta[sz(j)] : 0.0) - gm(i, j) * theta_up[sz(k)];
        J.at3(J.gamma, k, i, j) = v;
      }
    }
  }
  if (!second_order) return J;

  // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
  std::vector<double> dginv(sz(n * n * n), 0.0);
  for (int m = 0; m < n; ++m) {
    Eigen::MatrixXd dm(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) dm(a, b) = J.at3(J.dg, m, a, b);
    }
    const Eigen::MatrixXd d = -gi * dm * gi;
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) J.at3(dginv, m, k, l) = d(k, l);
    }
  }
  J.dgamma.assign(sz(n * n * n * n), 0.0);
  for (int m = 0; m < n; ++m) {
    std::vector<double> dtheta_up(sz(n), 0.0);
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) {
        dtheta_up[sz(k)] += J.at3(dginv, m, k, l) * J.theta[sz(l)] + gi(k, l) * J.dtheta[sz(m * n + l)];
      }
    }
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          for (int l = 0; l < n; ++l) {
            const double dfirst = 0.5 * (J.at4(J.ddg, m, i, j, l) + J.at4(J.ddg, m, j, i, l) -
                                         J.at4(J.ddg, m, l, i, j));
            v += J.at3(dginv, m, k, l) * J.at3(first, l, i, j) + gi(k, l) * dfirst;
          }
          v += (k == j ? J.dtheta[sz(m * n + i)] : 0.0) + (k == i ? J.dtheta[sz(m * n + j)] : 0.0) -
               J.at3(J.dg, m, i, j) * theta_up[sz(k)] - gm(i, j) * dtheta_up[sz(k)];
          J.dgamma[sz(((m * n + k) * n + i) * n + j)] = v;
        }
      }
    }
  }
  return J;
}

// R^l_{ijk} stored at (i, j, k, l).
std::vector<double> curvature_endo(const Jet& J) {
  const int n = J.n;
  std::vector<double> r(sz(n * n * n * n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double v = J.at4(J.dgamma, i, l, j, k) - J.at4(J.dgamma, j, l, i, k);
          for (int m = 0; m < n; ++m) {
            v += J.at3(J.gamma, l, i, m) * J.at3(J.gamma, m, j, k) - J.at3(J.gamma, l, j, m) * J.at3(J.gamma, m, i, k);
          }
          r[sz(((i * n + j) * n + k) * n + l)] = v;
        }
      }
    }
  }
  return r;
}

std::vector<double> lower_last(const Jet& J, const std::vector<double>& endo) {
  const int n = J.n;
  std::vector<double> r(endo.size(), 0.0);
  const Eigen::MatrixXd& gm = J.g.matrix();
  for (std::size_t base = 0; base < endo.size(); base += sz(n)) {
    for (int t = 0; t < n; ++t) {
      double v = 0.0;
      for (int l = 0; l < n; ++l) v += endo[base + sz(l)] * gm(l, t);
      r[base + sz(t)] = v;
    }
  }
  return r;
}

std::vector<double> covariant_curvature(const Jet& J) { return lower_last(J, curvature_endo(J)); }

std::vector<Variance> covariant_slots(int rank) { return std::vector<Variance>(sz(rank), Variance::Covariant); }

KFormValue faraday_from_jet(const Jet& J) {
  KFormValue F(J.n, 2);
  for (int i = 0; i < J.n; ++i) {
    for (int j = i + 1; j < J.n; ++j) {
      F.set({i, j}, J.dtheta[sz(i * J.n + j)] - J.dtheta[sz(j * J.n + i)]);
    }
  }
  return F;
}

// Contracts every slot of a covariant tensor with the columns of E.
std::vector<double> to_frame(std::vector<double> t, int n, int rank, const Eigen::MatrixXd& E) {
  std::vector<double> out(t.size());
  const std::size_t total = t.size();
  for (int s = 0; s < rank; ++s) {
    std::size_t stride = 1;
    for (int r = s + 1; r < rank; ++r) stride *= sz(n);
    for (std::size_t flat = 0; flat < total; ++flat) {
      const int a = static_cast<int>((flat / stride) % sz(n));
      const std::size_t base = flat - sz(a) * stride;
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += t[base + sz(i) * stride] * E(i, a);
      out[flat] = v;
    }
    std::swap(t, out);
  }
  return t;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

WeylChart::WeylChart(Chart chart, ExprMatrix g, ExprVector theta) {
  const int n = chart.dim();
  if (n < kMinDim || n > kMaxDim) throw DimensionError("Weyl chart dimension must be within 2..6");
  if (static_cast<int>(g.size()) != n || static_cast<int>(theta.size()) != n) {
    throw DimensionError("metric or Lee form does not match the chart dimension");
  }
  for (const auto& row : g) {
    if (static_cast<int>(row.size()) != n) throw DimensionError("metric is not square");
    for (const auto& e : row) {
      if (e.max_coordinate() >= n) throw DimensionError("metric entry uses a coordinate outside the chart");
    }
  }
  for (const auto& e : theta) {
    if (e.max_coordinate() >= n) throw DimensionError("Lee form uses a coordinate outside the chart");
  }

  auto data = std::make_shared<Data>(Data{std::move(chart), std::move(g), std::move(theta), {}, {}, {}});
  data->dg.resize(sz(n * n * n));
  data->ddg.resize(sz(n * n * n * n));
  data->dtheta.resize(sz(n * n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const ScalarExpr d = partial(data->g[sz(i)][sz(j)], k);
        data->dg[sz((k * n + i) * n + j)] = d;
        data->dg[sz((k * n + j) * n + i)] = d;
      }
    }
    for (int i = 0; i < n; ++i) data->dtheta[sz(k * n + i)] = partial(data->theta[sz(i)], k);
  }
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const ScalarExpr d = partial(data->dg[sz((k * n + i) * n + j)], l);
          for (auto [a, b] : {std::pair{k, l}, std::pair{l, k}}) {
            data->ddg[sz(((a * n + b) * n + i) * n + j)] = d;
            data->ddg[sz(((a * n + b) * n + j) * n + i)] = d;
          }
        }
      }
    }
  }
  data_ = std::move(data);

  QuasiRandomSampler sampler(n, 0x5eed);
  for (int s = 0; s < kValidationSamples; ++s) {
    const Point p = sampler.next(data_->chart);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double a = data_->g[sz(i)][sz(j)].eval(p);
        const double b = data_->g[sz(j)][sz(i)].eval(p);
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
          throw DimensionError("metric expressions are not symmetric");
        }
      }
    }
    (void)metric(p);
    (void)lee_form(p);
  }
}

MetricValue WeylChart::metric(std::span<const double> p) const {
  const int n = dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      m(i, j) = data_->g[sz(i)][sz(j)].eval(p);
      m(j, i) = m(i, j);
    }
  }
  return MetricValue(m);
}

KFormValue WeylChart::lee_form(std::span<const double> p) const {
  std::vector<double> v(sz(dim()));
  for (int i = 0; i < dim(); ++i) v[sz(i)] = data_->theta[sz(i)].eval(p);
  return KFormValue::from_covector(v);
}

const ScalarExpr& WeylChart::dg(int k, int i, int j) const {
  const int n = dim();
  return data_->dg[sz((k * n + i) * n + j)];
}

const ScalarExpr& WeylChart::ddg(int k, int l, int i, int j) const {
  const int n = dim();
  return data_->ddg[sz(((k * n + l) * n + i) * n + j)];
}

const ScalarExpr& WeylChart::dtheta(int k, int i) const { return data_->dtheta[sz(k * dim() + i)]; }

// ---------------------------------------------------------------------------

KFormField::KFormField(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > kMaxDim || degree < 0 || degree > dim) {
    throw DimensionError("form degree outside 0..dim");
  }
  entries_.assign(dense_size(dim, degree), ScalarExpr());
}

const ScalarExpr& KFormField::at(std::span<const int> idx) const {
  std::size_t off = 0;
  for (int i : idx) off = off * sz(dim_) + sz(i);
  return entries_[off];
}

void KFormField::set(std::span<const int> idx, const ScalarExpr& value) {
  if (static_cast<int>(idx.size()) != degree_) throw DimensionError("wrong number of indices");
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw DimensionError("index out of range");
  }
  const int sign = permutation_sign(idx);
  if (sign == 0) throw InvalidArgument("repeated index in a form coefficient");
  Index sorted(idx.begin(), idx.end());
  std::sort(sorted.begin(), sorted.end());
  const ScalarExpr neg = -value;
  Index perm = sorted;
  do {
    std::size_t off = 0;
    for (int i : perm) off = off * sz(dim_) + sz(i);
    entries_[off] = permutation_sign(perm) * sign > 0 ? value : neg;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

void KFormField::set(std::initializer_list<int> idx, const ScalarExpr& value) {
  set(std::span<const int>(idx.begin(), idx.size()), value);
}

KFormValue KFormField::eval(std::span<const double> p) const {
  KFormValue out(dim_, degree_);
  for_each_index(dim_, degree_, [&](const Index& idx, std::size_t flat) {
    if (!std::is_sorted(idx.begin(), idx.end()) || permutation_sign(idx) == 0) return;
    if (degree_ == 0 || !entries_[flat].is_zero()) out.set(idx, entries_[flat].eval(p));
  });
  return out;
}

KFormField KFormField::partial(int i) const {
  KFormField out(dim_, degree_);
  if (degree_ == 0) {
    out.entries_[0] = weyl::partial(entries_[0], i);
    return out;
  }
  for_each_index(dim_, degree_, [&](const Index& idx, std::size_t flat) {
    if (!std::is_sorted(idx.begin(), idx.end()) || permutation_sign(idx) == 0) return;
    if (!entries_[flat].is_zero()) out.set(idx, weyl::partial(entries_[flat], i));
  });
  return out;
}

KFormField KFormField::scaled(const ScalarExpr& s) const {
  KFormField out(dim_, degree_);
  for (std::size_t f = 0; f < entries_.size(); ++f) out.entries_[f] = s * entries_[f];
  return out;
}

KFormField exterior_derivative(const KFormField& w) {
  const int n = w.dim();
  const int k = w.degree();
  if (k + 1 > n) throw DimensionError("exterior derivative of a top-degree form");
  std::vector<KFormField> dw;
  for (int i = 0; i < n; ++i) dw.push_back(w.partial(i));
  KFormField out(n, k + 1);
  for_each_index(n, k + 1, [&](const Index& idx, std::size_t) {
    if (!std::is_sorted(idx.begin(), idx.end()) || permutation_sign(idx) == 0) return;
    ScalarExpr acc;
    Index rest(sz(k));
    for (int m = 0; m <= k; ++m) {
      std::size_t r = 0;
      for (int s = 0; s <= k; ++s) {
        if (s != m) rest[r++] = idx[sz(s)];
      }
      const ScalarExpr& term = dw[sz(idx[sz(m)])].at(rest);
      acc = m % 2 == 0 ? acc + term : acc - term;
    }
    out.set(idx, acc);
  });
  return out;
}

// ---------------------------------------------------------------------------

TensorValue levi_civita_christoffels(const WeylChart& W, std::span<const double> p) {
  const Jet J = make_jet(W, p, false, false);
  return TensorValue(W.dim(), {Variance::Contravariant, Variance::Covariant, Variance::Covariant}, J.gamma);
}

TensorValue weyl_christoffels(const WeylChart& W, std::span<const double> p) {
  const Jet J = make_jet(W, p, true, false);
  return TensorValue(W.dim(), {Variance::Contravariant, Variance::Covariant, Variance::Covariant}, J.gamma);
}

TensorValue weyl_curvature(const WeylChart& W, std::span<const double> p) {
  const Jet J = make_jet(W, p, true, true);
  return TensorValue(W.dim(), covariant_slots(4), covariant_curvature(J));
}

TensorValue weyl_curvature_endomorphism(const WeylChart& W, std::span<const double> p) {
  const Jet J = make_jet(W, p, true, true);
  return TensorValue(W.dim(),
                     {Variance::Covariant, Variance::Covariant, Variance::Covariant, Variance::Contravariant},
                     curvature_endo(J));
}

KFormValue faraday(const WeylChart& W, std::span<const double> p) {
  const int n = W.dim();
  KFormValue F(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) F.set({i, j}, W.dtheta(i, j).eval(p) - W.dtheta(j, i).eval(p));
  }
  return F;
}

KFormField faraday_field(const WeylChart& W) {
  const int n = W.dim();
  KFormField F(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) F.set({i, j}, W.dtheta(i, j) - W.dtheta(j, i));
  }
  return F;
}

Eigen::MatrixXd weyl_ricci(const WeylChart& W, std::span<const double> p,
                           const std::optional<Eigen::MatrixXd>& frame) {
  const Jet J = make_jet(W, p, true, true);
  const int n = J.n;
  const std::vector<double> R = covariant_curvature(J);
  auto r = [&](int a, int b, int c, int d) { return R[sz(((a * n + b) * n + c) * n + d)]; };

  // Contraction tensor h^{kl} = sum_e E_ke E_le, which equals g^{kl} for any
  // orthonormal frame; with a frame, the sum is carried out explicitly.
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
  if (frame) {
    const Eigen::MatrixXd& E = *frame;
    if (E.rows() != n || E.cols() != n) throw DimensionError("frame has the wrong shape");
    const double defect = (E.transpose() * J.g.matrix() * E - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (defect > 1e-8) throw InvalidArgument("frame is not orthonormal for g");
    for (int e = 0; e < n; ++e) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          for (int k = 0; k < n; ++k) {
            for (int l = 0; l < n; ++l) v += E(k, e) * E(l, e) * (r(i, k, l, j) - r(i, k, j, l));
          }
          ric(i, j) += 0.5 * v;
        }
      }
    }
    return ric;
  }
  const Eigen::MatrixXd& gi = J.g.inverse();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) v += gi(k, l) * (r(i, k, l, j) - r(i, k, j, l));
      }
      ric(i, j) = 0.5 * v;
    }
  }
  return ric;
}

double pair_symmetry_defect(const WeylChart& W, std::span<const double> p) {
  const Jet J = make_jet(W, p, true, true);
  const int n = J.n;
  const std::vector<double> R = covariant_curvature(J);
  const KFormValue F = faraday_from_jet(J);
  const Eigen::MatrixXd& g = J.g.matrix();
  auto r = [&](int a, int b, int c, int d) { return R[sz(((a * n + b) * n + c) * n + d)]; };
  auto f = [&](int a, int b) { return F({a, b}); };
  double worst = 0.0;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      for (int z = 0; z < n; ++z) {
        for (int t = 0; t < n; ++t) {
          const double rhs = (f(x, z) * g(y, t) - f(x, t) * g(y, z)) - (f(y, z) * g(x, t) - f(y, t) * g(x, z)) +
                             f(x, y) * g(z, t) - f(z, t) * g(x, y);
          worst = std::max(worst, std::abs(r(x, y, z, t) - r(z, t, x, y) - rhs));
        }
      }
    }
  }
  return worst;
}

double raw_pair_asymmetry(const WeylChart& W, std::span<const double> p) {
  const Jet J = make_jet(W, p, true, true);
  const int n = J.n;
  const std::vector<double> R = covariant_curvature(J);
  auto r = [&](int a, int b, int c, int d) { return R[sz(((a * n + b) * n + c) * n + d)]; };
  double worst = 0.0;
  for_each_index(n, 4, [&](const Index& i, std::size_t) {
    worst = std::max(worst, std::abs(r(i[0], i[1], i[2], i[3]) - r(i[2], i[3], i[0], i[1])));
  });
  return worst;
}

namespace {

// Full (k+1)-slot array of D_i w_J for the connection in J; the Lee-form
// weight term is included only when `weighted`.
std::vector<double> covderiv_array(const Jet& J, const KFormField& omega, std::span<const double> p,
                                   bool weighted) {
  const int n = J.n;
  const int k = omega.degree();
  const KFormValue w = omega.eval(p);
  std::vector<KFormValue> dw;
  for (int i = 0; i < n; ++i) dw.push_back(omega.partial(i).eval(p));
  std::vector<double> out(dense_size(n, k + 1), 0.0);
  const std::size_t block = dense_size(n, k);
  for (int i = 0; i < n; ++i) {
    for_each_index(n, k, [&](const Index& idx, std::size_t flat) {
      double v = dw[sz(i)].entries()[flat];
      Index mod = idx;
      for (int m = 0; m < k; ++m) {
        const int jm = idx[sz(m)];
        for (int l = 0; l < n; ++l) {
          mod[sz(m)] = l;
          v -= J.at3(J.gamma, l, i, jm) * w.at(mod);
        }
        mod[sz(m)] = jm;
      }
      if (weighted) v += k * J.theta[sz(i)] * w.entries()[flat];
      out[sz(i) * block + flat] = v;
    });
  }
  return out;
}

// Columns alpha(e^a) of the Lee-form action on w, as (k+1)-slot arrays.
Eigen::MatrixXd alpha_matrix(const Jet& J, const KFormValue& w) {
  const int n = J.n;
  const int k = w.degree();
  const Eigen::MatrixXd& g = J.g.matrix();
  const Eigen::MatrixXd& gi = J.g.inverse();
  const std::size_t block = dense_size(n, k);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sz(n) * block), n);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < n; ++i) {
      for_each_index(n, k, [&](const Index& idx, std::size_t flat) {
        double v = 0.0;
        Index mod = idx;
        for (int m = 0; m < k; ++m) {
          const int jm = idx[sz(m)];
          if (jm == a) {
            mod[sz(m)] = i;
            v -= w.at(mod);
          }
          for (int l = 0; l < n; ++l) {
            mod[sz(m)] = l;
            v += g(i, jm) * gi(l, a) * w.at(mod);
          }
          mod[sz(m)] = jm;
        }
        A(static_cast<Eigen::Index>(sz(i) * block + flat), a) = v;
      });
    }
  }
  return A;
}

struct LeeSystem {
  Eigen::MatrixXd A;  // in an orthonormal frame
  Eigen::VectorXd b;
  double scale;  // 1/k! from the form pairing
};

LeeSystem lee_system(const WeylChart& W, const KFormField& omega, std::span<const double> p) {
  if (omega.dim() != W.dim()) throw DimensionError("form and chart dimensions differ");
  const int k = omega.degree();
  if (k < 1 || k > W.dim() - 1) throw DimensionError("form degree must be within 1..n-1");
  const Jet J = make_jet(W, p, false, false);
  const int n = J.n;
  const KFormValue w = omega.eval(p);
  if (std::sqrt(std::max(0.0, inner(J.g, w, w))) < 1e-12) throw InvalidArgument("form vanishes at the point");

  const Eigen::MatrixXd E = J.g.orthonormal_frame();
  const std::vector<double> nabla = to_frame(covderiv_array(J, omega, p, false), n, k + 1, E);
  const Eigen::MatrixXd A = alpha_matrix(J, w);
  LeeSystem sys{Eigen::MatrixXd(A.rows(), n), Eigen::VectorXd(A.rows()), 1.0 / factorial(k)};
  for (int a = 0; a < n; ++a) {
    std::vector<double> col(A.col(a).data(), A.col(a).data() + A.rows());
    col = to_frame(std::move(col), n, k + 1, E);
    for (Eigen::Index r = 0; r < A.rows(); ++r) sys.A(r, a) = col[static_cast<std::size_t>(r)];
  }
  for (Eigen::Index r = 0; r < A.rows(); ++r) sys.b(r) = nabla[static_cast<std::size_t>(r)];
  return sys;
}

}  // namespace

TensorValue covderiv_weightless_form(const WeylChart& W, const KFormField& omega, std::span<const double> p) {
  if (omega.dim() != W.dim()) throw DimensionError("form and chart dimensions differ");
  const int k = omega.degree();
  if (k < 1 || k > W.dim() - 1) throw DimensionError("form degree must be within 1..n-1");
  const Jet J = make_jet(W, p, true, false);
  return TensorValue(W.dim(), covariant_slots(k + 1), covderiv_array(J, omega, p, true));
}

MinimalLeeForm minimal_lee_form(const WeylChart& W, const KFormField& omega, std::span<const double> p) {
  const LeeSystem sys = lee_system(W, omega, p);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
  if (!(cond < 1e10)) {
    std::ostringstream msg;
    msg << "ill-conditioned minimal Lee form system (condition number " << cond << ")";
    throw InvalidArgument(msg.str());
  }
  const Eigen::VectorXd tau = -svd.solve(sys.b);
  const double res = std::sqrt(sys.scale) * (sys.A * tau + sys.b).norm();
  std::vector<double> t(tau.data(), tau.data() + tau.size());
  return {KFormValue::from_covector(t), res, cond};
}

double minimal_lee_residual(const WeylChart& W, const KFormField& omega, std::span<const double> p,
                            std::span<const double> tau) {
  const LeeSystem sys = lee_system(W, omega, p);
  if (static_cast<int>(tau.size()) != W.dim()) throw DimensionError("tau has the wrong length");
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(tau.data(), static_cast<Eigen::Index>(tau.size()));
  return std::sqrt(sys.scale) * (sys.A * t + sys.b).norm();
}

WeylChart gauge_transform(const WeylChart& W, const ScalarExpr& u) {
  const int n = W.dim();
  const ScalarExpr factor = exp(2.0 * u);
  ExprMatrix g = W.g();
  ExprVector theta = W.theta();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g[sz(i)][sz(j)] = factor * g[sz(i)][sz(j)];
    theta[sz(i)] = theta[sz(i)] - partial(u, i);
  }
  return WeylChart(W.chart(), std::move(g), std::move(theta));
}

}  // namespace weyl
