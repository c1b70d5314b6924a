#include "weyl/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "weyl/errors.hpp"

namespace weyl {

namespace {

void check_dim(int dim) {
  if (dim < kMinDim || dim > kMaxDim) {
    throw DimensionError("dimension " + std::to_string(dim) + " outside 2..6");
  }
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// Raises every slot of a fully covariant dense array.
std::vector<double> raise_all(const Eigen::MatrixXd& ginv, int dim, int rank,
                              std::vector<double> values) {
  const std::size_t total = values.size();
  std::size_t stride = 1;
  for (int s = rank - 1; s >= 0; --s) {
    std::vector<double> out(total, 0.0);
    const std::size_t block = stride * static_cast<std::size_t>(dim);
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        for (int a = 0; a < dim; ++a) {
          double acc = 0.0;
          for (int b = 0; b < dim; ++b) {
            acc += ginv(a, b) * values[base + static_cast<std::size_t>(b) * stride + inner];
          }
          out[base + static_cast<std::size_t>(a) * stride + inner] = acc;
        }
      }
    }
    values = std::move(out);
    stride = block;
  }
  return values;
}

}  // namespace

std::size_t dense_size(int dim, int rank) {
  std::size_t n = 1;
  for (int i = 0; i < rank; ++i) n *= static_cast<std::size_t>(dim);
  return n;
}

int permutation_sign(std::span<const int> idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      if (idx[i] == idx[j]) return 0;
      if (idx[i] > idx[j]) sign = -sign;
    }
  }
  return sign;
}

// ---------------------------------------------------------------------------
// TensorValue

TensorValue::TensorValue(int dim, std::vector<Variance> slots)
    : dim_(dim), slots_(std::move(slots)) {
  check_dim(dim_);
  entries_.assign(dense_size(dim_, rank()), 0.0);
}

TensorValue::TensorValue(int dim, std::vector<Variance> slots, std::vector<double> entries)
    : dim_(dim), slots_(std::move(slots)), entries_(std::move(entries)) {
  check_dim(dim_);
  if (entries_.size() != dense_size(dim_, rank())) {
    throw DimensionError("tensor entry count " + std::to_string(entries_.size()) +
                         " does not match dim^rank");
  }
}

TensorValue TensorValue::vector(std::span<const double> components) {
  return TensorValue(static_cast<int>(components.size()), {Variance::Contravariant},
                     {components.begin(), components.end()});
}

TensorValue TensorValue::covector(std::span<const double> components) {
  return TensorValue(static_cast<int>(components.size()), {Variance::Covariant},
                     {components.begin(), components.end()});
}

TensorValue TensorValue::basis_vector(int dim, int i) {
  TensorValue v(dim, {Variance::Contravariant});
  if (i < 0 || i >= dim) throw DimensionError("basis index out of range");
  v[static_cast<std::size_t>(i)] = 1.0;
  return v;
}

std::size_t TensorValue::offset(std::span<const int> idx) const {
  if (idx.size() != slots_.size()) throw DimensionError("wrong number of indices");
  std::size_t off = 0;
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw DimensionError("index out of range");
    off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
  }
  return off;
}

double TensorValue::operator()(std::initializer_list<int> idx) const {
  return at(std::span<const int>(idx.begin(), idx.size()));
}

double TensorValue::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

TensorValue operator-(const TensorValue& a, const TensorValue& b) {
  if (a.dim() != b.dim() || a.slots() != b.slots()) {
    throw DimensionError("tensor shape mismatch in subtraction");
  }
  std::vector<double> out(a.entries().begin(), a.entries().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return TensorValue(a.dim(), a.slots(), std::move(out));
}

// ---------------------------------------------------------------------------
// KFormValue

KFormValue::KFormValue(int dim, int degree) : dim_(dim), degree_(degree) {
  check_dim(dim_);
  if (degree_ < 0 || degree_ > dim_) throw DimensionError("form degree outside 0..dim");
  entries_.assign(dense_size(dim_, degree_), 0.0);
}

KFormValue::KFormValue(int dim, int degree, std::vector<double> entries)
    : dim_(dim), degree_(degree), entries_(std::move(entries)) {}

KFormValue KFormValue::from_entries(int dim, int degree, std::vector<double> entries,
                                    double tol) {
  KFormValue w(dim, degree);
  if (entries.size() != w.entries_.size()) throw DimensionError("form entry count mismatch");
  w.entries_ = std::move(entries);
  if (w.antisymmetry_defect() > tol) throw InvalidArgument("entries are not antisymmetric");
  return w;
}

KFormValue KFormValue::basis(int dim, std::initializer_list<int> idx) {
  KFormValue w(dim, static_cast<int>(idx.size()));
  w.set(idx, 1.0);
  return w;
}

KFormValue KFormValue::from_covector(std::span<const double> components) {
  KFormValue w(static_cast<int>(components.size()), 1);
  std::copy(components.begin(), components.end(), w.entries_.begin());
  return w;
}

KFormValue KFormValue::from_covector(const TensorValue& covector) {
  if (covector.rank() != 1 || covector.slots()[0] != Variance::Covariant) {
    throw DimensionError("expected a covector");
  }
  return from_covector(covector.entries());
}

double KFormValue::at(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != degree_) throw DimensionError("wrong number of indices");
  std::size_t off = 0;
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw DimensionError("index out of range");
    off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
  }
  return entries_[off];
}

double KFormValue::operator()(std::initializer_list<int> idx) const {
  return at(std::span<const int>(idx.begin(), idx.size()));
}

void KFormValue::set(std::span<const int> idx, double value) {
  if (static_cast<int>(idx.size()) != degree_) throw DimensionError("wrong number of indices");
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw DimensionError("index out of range");
  }
  const int sign = permutation_sign(idx);
  if (sign == 0) {
    if (value != 0.0) throw InvalidArgument("repeated index must carry zero");
    return;
  }
  Index sorted(idx.begin(), idx.end());
  std::sort(sorted.begin(), sorted.end());
  Index perm = sorted;
  do {
    const int s = permutation_sign(perm) * sign;
    std::size_t off = 0;
    for (int i : perm) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    entries_[off] = s * value;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

void KFormValue::set(std::initializer_list<int> idx, double value) {
  set(std::span<const int>(idx.begin(), idx.size()), value);
}

TensorValue KFormValue::as_tensor() const {
  return TensorValue(dim_, std::vector<Variance>(static_cast<std::size_t>(degree_), Variance::Covariant),
                     entries_);
}

double KFormValue::antisymmetry_defect() const {
  double worst = 0.0;
  for_each_index(dim_, degree_, [&](const Index& idx, std::size_t flat) {
    for (int a = 0; a < degree_; ++a) {
      for (int b = a + 1; b < degree_; ++b) {
        Index swapped = idx;
        std::swap(swapped[static_cast<std::size_t>(a)], swapped[static_cast<std::size_t>(b)]);
        worst = std::max(worst, std::abs(entries_[flat] + at(swapped)));
      }
    }
  });
  return worst;
}

double KFormValue::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

KFormValue& KFormValue::operator+=(const KFormValue& other) {
  if (dim_ != other.dim_ || degree_ != other.degree_) throw DimensionError("form shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
  return *this;
}

KFormValue& KFormValue::operator-=(const KFormValue& other) {
  if (dim_ != other.dim_ || degree_ != other.degree_) throw DimensionError("form shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
  return *this;
}

KFormValue& KFormValue::operator*=(double s) {
  for (double& v : entries_) v *= s;
  return *this;
}

KFormValue operator+(KFormValue a, const KFormValue& b) { return a += b; }
KFormValue operator-(KFormValue a, const KFormValue& b) { return a -= b; }
KFormValue operator*(double s, KFormValue a) { return a *= s; }

// ---------------------------------------------------------------------------
// MetricValue

MetricValue::MetricValue(Eigen::MatrixXd g) : g_(std::move(g)) {
  if (g_.rows() != g_.cols()) throw DimensionError("metric must be square");
  check_dim(static_cast<int>(g_.rows()));
  const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DimensionError("metric must be symmetric");
  }
  for (Eigen::Index k = 1; k <= g_.rows(); ++k) {
    const double minor = g_.topLeftCorner(k, k).determinant();
    if (!(minor > 0.0)) {
      throw SingularMetricError("leading principal minor " + std::to_string(k) +
                                " is not positive");
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g_);
  inv_ = llt.solve(Eigen::MatrixXd::Identity(g_.rows(), g_.cols()));
  det_ = g_.determinant();
}

MetricValue MetricValue::identity(int dim) {
  return MetricValue(Eigen::MatrixXd::Identity(dim, dim));
}

Eigen::MatrixXd MetricValue::orthonormal_frame() const {
  // g = L L^T  =>  columns of L^{-T} are g-orthonormal.
  Eigen::LLT<Eigen::MatrixXd> llt(g_);
  Eigen::MatrixXd L = llt.matrixL();
  return L.transpose().triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(g_.rows(), g_.cols()));
}

// ---------------------------------------------------------------------------
// Exterior algebra

KFormValue wedge(const KFormValue& a, const KFormValue& b) {
  if (a.dim() != b.dim()) throw DimensionError("wedge: dimension mismatch");
  const int k = a.degree();
  const int l = b.degree();
  const int n = a.dim();
  if (k + l > n) throw DimensionError("wedge: degree overflow");

  std::vector<unsigned> shuffles;
  std::vector<int> signs;
  for (unsigned mask = 0; mask < (1u << (k + l)); ++mask) {
    if (std::popcount(mask) != k) continue;
    int inversions = 0;
    int complement_seen = 0;
    for (int pos = 0; pos < k + l; ++pos) {
      if (mask & (1u << pos)) {
        inversions += complement_seen;
      } else {
        ++complement_seen;
      }
    }
    shuffles.push_back(mask);
    signs.push_back(inversions % 2 == 0 ? 1 : -1);
  }

  KFormValue out(n, k + l);
  Index ia(static_cast<std::size_t>(k));
  Index ib(static_cast<std::size_t>(l));
  // Evaluate increasing tuples only; set() fills the orbit exactly.
  for_each_index(n, k + l, [&](const Index& idx, std::size_t) {
    if (!std::is_sorted(idx.begin(), idx.end()) || permutation_sign(idx) == 0) return;
    double acc = 0.0;
    for (std::size_t s = 0; s < shuffles.size(); ++s) {
      std::size_t na = 0;
      std::size_t nb = 0;
      for (int pos = 0; pos < k + l; ++pos) {
        if (shuffles[s] & (1u << pos)) {
          ia[na++] = idx[static_cast<std::size_t>(pos)];
        } else {
          ib[nb++] = idx[static_cast<std::size_t>(pos)];
        }
      }
      acc += signs[s] * a.at(ia) * b.at(ib);
    }
    out.set(idx, acc);
  });
  return out;
}

KFormValue interior(const TensorValue& v, const KFormValue& w) {
  if (v.rank() != 1 || v.slots()[0] != Variance::Contravariant) {
    throw DimensionError("interior: expected a vector");
  }
  if (v.dim() != w.dim()) throw DimensionError("interior: dimension mismatch");
  if (w.degree() == 0) throw DimensionError("interior: degree 0 form");
  const int n = w.dim();
  const int k = w.degree();
  std::vector<double> out(dense_size(n, k - 1), 0.0);
  Index full(static_cast<std::size_t>(k));
  for_each_index(n, k - 1, [&](const Index& idx, std::size_t flat) {
    std::copy(idx.begin(), idx.end(), full.begin() + 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      full[0] = i;
      acc += v[static_cast<std::size_t>(i)] * w.at(full);
    }
    out[flat] = acc;
  });
  return KFormValue(n, k - 1, std::move(out));
}

TensorValue musical(const MetricValue& g, const TensorValue& t, int slot, Musical direction) {
  if (g.dim() != t.dim()) throw DimensionError("musical: dimension mismatch");
  if (slot < 0 || slot >= t.rank()) throw DimensionError("musical: bad slot index");
  const Variance have = t.slots()[static_cast<std::size_t>(slot)];
  const bool raise = direction == Musical::Raise;
  if (raise && have != Variance::Covariant) {
    throw DimensionError("musical: can only raise a covariant slot");
  }
  if (!raise && have != Variance::Contravariant) {
    throw DimensionError("musical: can only lower a contravariant slot");
  }
  const Eigen::MatrixXd& m = raise ? g.inverse() : g.matrix();
  std::vector<Variance> slots = t.slots();
  slots[static_cast<std::size_t>(slot)] = raise ? Variance::Contravariant : Variance::Covariant;
  TensorValue out(t.dim(), slots);
  Index src;
  for_each_index(t.dim(), t.rank(), [&](const Index& idx, std::size_t flat) {
    src = idx;
    double acc = 0.0;
    for (int b = 0; b < t.dim(); ++b) {
      src[static_cast<std::size_t>(slot)] = b;
      acc += m(idx[static_cast<std::size_t>(slot)], b) * t.at(src);
    }
    out[flat] = acc;
  });
  return out;
}

double inner(const MetricValue& g, const KFormValue& a, const KFormValue& b) {
  if (a.dim() != b.dim() || a.dim() != g.dim()) throw DimensionError("inner: dimension mismatch");
  if (a.degree() != b.degree()) throw DimensionError("inner: degree mismatch");
  const std::vector<double> braised =
      raise_all(g.inverse(), b.dim(), b.degree(), {b.entries().begin(), b.entries().end()});
  double acc = 0.0;
  for (std::size_t i = 0; i < braised.size(); ++i) acc += a.entries()[i] * braised[i];
  return acc / factorial(a.degree());
}

KFormValue volume_form(const MetricValue& g, int orientation) {
  const int n = g.dim();
  KFormValue vol(n, n);
  Index idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  vol.set(idx, (orientation >= 0 ? 1.0 : -1.0) * std::sqrt(g.determinant()));
  return vol;
}

KFormValue hodge(const MetricValue& g, int orientation, const KFormValue& w) {
  if (g.dim() != w.dim()) throw DimensionError("hodge: dimension mismatch");
  if (orientation != 1 && orientation != -1) throw InvalidArgument("orientation must be +1 or -1");
  const int n = w.dim();
  const int k = w.degree();
  const std::vector<double> raised =
      raise_all(g.inverse(), n, k, {w.entries().begin(), w.entries().end()});
  const double scale = orientation * std::sqrt(g.determinant()) / factorial(k);

  std::vector<double> out(dense_size(n, n - k), 0.0);
  Index perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::size_t in_off = 0;
    for (int s = 0; s < k; ++s) {
      in_off = in_off * static_cast<std::size_t>(n) + static_cast<std::size_t>(perm[static_cast<std::size_t>(s)]);
    }
    std::size_t out_off = 0;
    for (int s = k; s < n; ++s) {
      out_off = out_off * static_cast<std::size_t>(n) + static_cast<std::size_t>(perm[static_cast<std::size_t>(s)]);
    }
    out[out_off] += scale * permutation_sign(perm) * raised[in_off];
  } while (std::next_permutation(perm.begin(), perm.end()));
  return KFormValue(n, n - k, std::move(out));
}

std::pair<KFormValue, KFormValue> sd_asd_split(const MetricValue& g, int orientation,
                                               const KFormValue& w) {
  if (w.dim() != 4 || w.degree() != 2) {
    throw DimensionError("sd_asd_split: needs a 2-form in dimension 4");
  }
  const KFormValue star = hodge(g, orientation, w);
  return {0.5 * (w + star), 0.5 * (w - star)};
}

Eigen::MatrixXd two_form_to_endomorphism(const MetricValue& g, const KFormValue& w) {
  if (w.degree() != 2 || w.dim() != g.dim()) throw DimensionError("expected a 2-form");
  const int n = w.dim();
  Eigen::MatrixXd omega(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) omega(i, j) = w({i, j});
  }
  // g(AX, Y) = w(X, Y)  =>  A^c_a = g^{cb} w_{ab}
  return g.inverse() * omega.transpose();
}

Eigen::MatrixXd raise_two_form(const MetricValue& g, const KFormValue& w) {
  if (w.degree() != 2 || w.dim() != g.dim()) throw DimensionError("expected a 2-form");
  const int n = w.dim();
  Eigen::MatrixXd omega(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) omega(i, j) = w({i, j});
  }
  return g.inverse() * omega * g.inverse();
}

}  // namespace weyl
