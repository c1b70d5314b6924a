#pragma once

// Pointwise dense tensors and exterior algebra in dimension 2..6.
//
// Index conventions: coordinate x(i+1) is index i. Flat storage is row-major
// over the slots. Wedge products use the shuffle convention with unit
// coefficients, so dx1^dx2 has (0,1)-entry +1 and the pairing of k-forms is
// (1/k!) a_I b^I (an orthonormal coframe gives an orthonormal basis of
// increasing wedges).

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace weyl {

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 6;

enum class Variance { Covariant, Contravariant };
enum class Musical { Raise, Lower };

using Index = std::vector<int>;

/// Number of entries of a rank-`rank` dense array in dimension `dim`.
std::size_t dense_size(int dim, int rank);

/// Calls fn(idx) for every multi-index of the given rank, in row-major order.
template <typename Fn>
void for_each_index(int dim, int rank, Fn&& fn) {
  Index idx(static_cast<std::size_t>(rank), 0);
  const std::size_t total = dense_size(dim, rank);
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(static_cast<const Index&>(idx), flat);
    for (int s = rank - 1; s >= 0; --s) {
      if (++idx[static_cast<std::size_t>(s)] < dim) break;
      idx[static_cast<std::size_t>(s)] = 0;
    }
  }
}

/// Sign of the permutation that sorts `idx`; 0 if it has a repeated entry.
int permutation_sign(std::span<const int> idx);

class MetricValue;

class TensorValue {
 public:
  TensorValue(int dim, std::vector<Variance> slots);
  TensorValue(int dim, std::vector<Variance> slots, std::vector<double> entries);

  static TensorValue vector(std::span<const double> components);
  static TensorValue covector(std::span<const double> components);
  /// Coordinate basis vector d/dx(i+1).
  static TensorValue basis_vector(int dim, int i);

  int dim() const noexcept { return dim_; }
  int rank() const noexcept { return static_cast<int>(slots_.size()); }
  const std::vector<Variance>& slots() const noexcept { return slots_; }
  std::span<const double> entries() const noexcept { return entries_; }

  std::size_t offset(std::span<const int> idx) const;
  double operator()(std::initializer_list<int> idx) const;
  double at(std::span<const int> idx) const { return entries_[offset(idx)]; }
  double& at(std::span<const int> idx) { return entries_[offset(idx)]; }
  double operator[](std::size_t flat) const { return entries_[flat]; }
  double& operator[](std::size_t flat) { return entries_[flat]; }

  /// Largest absolute entry.
  double max_abs() const;

 private:
  int dim_;
  std::vector<Variance> slots_;
  std::vector<double> entries_;
};

TensorValue operator-(const TensorValue& a, const TensorValue& b);

/// Fully covariant antisymmetric tensor. Components are only written through
/// set(), which fills the whole antisymmetric orbit.
class KFormValue {
 public:
  KFormValue(int dim, int degree);

  /// Takes a dense array and checks antisymmetry to `tol` (absolute).
  static KFormValue from_entries(int dim, int degree, std::vector<double> entries,
                                 double tol = 1e-12);
  /// dx(i1+1) ^ ... ^ dx(ik+1).
  static KFormValue basis(int dim, std::initializer_list<int> idx);
  static KFormValue from_covector(std::span<const double> components);
  static KFormValue from_covector(const TensorValue& covector);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  std::span<const double> entries() const noexcept { return entries_; }

  double operator()(std::initializer_list<int> idx) const;
  double at(std::span<const int> idx) const;
  void set(std::span<const int> idx, double value);
  void set(std::initializer_list<int> idx, double value);

  TensorValue as_tensor() const;
  /// Max over all entries and transpositions of |w(..a..b..) + w(..b..a..)|.
  double antisymmetry_defect() const;
  double max_abs() const;

  KFormValue& operator+=(const KFormValue& other);
  KFormValue& operator-=(const KFormValue& other);
  KFormValue& operator*=(double s);

 private:
  KFormValue(int dim, int degree, std::vector<double> entries);
  friend KFormValue wedge(const KFormValue&, const KFormValue&);
  friend KFormValue interior(const TensorValue&, const KFormValue&);
  friend KFormValue hodge(const MetricValue&, int, const KFormValue&);
  int dim_;
  int degree_;
  std::vector<double> entries_;
};

KFormValue operator+(KFormValue a, const KFormValue& b);
KFormValue operator-(KFormValue a, const KFormValue& b);
KFormValue operator*(double s, KFormValue a);

/// Symmetric positive definite bilinear form at a point.
class MetricValue {
 public:
  /// Throws SingularMetricError unless every leading principal minor is > 0
  /// and DimensionError unless the matrix is square, symmetric and 2..6.
  explicit MetricValue(Eigen::MatrixXd g);
  static MetricValue identity(int dim);

  int dim() const noexcept { return static_cast<int>(g_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return g_; }
  const Eigen::MatrixXd& inverse() const noexcept { return inv_; }
  double determinant() const noexcept { return det_; }
  double operator()(int i, int j) const { return g_(i, j); }

  /// Columns form a g-orthonormal frame (Gram-Schmidt of the coordinate basis).
  Eigen::MatrixXd orthonormal_frame() const;

 private:
  Eigen::MatrixXd g_;
  Eigen::MatrixXd inv_;
  double det_;
};

KFormValue wedge(const KFormValue& a, const KFormValue& b);
KFormValue interior(const TensorValue& v, const KFormValue& w);
TensorValue musical(const MetricValue& g, const TensorValue& t, int slot, Musical direction);
/// Induced pairing on k-forms.
double inner(const MetricValue& g, const KFormValue& a, const KFormValue& b);
/// Riemannian volume form; orientation +1 makes dx1^..^dxn positive.
KFormValue volume_form(const MetricValue& g, int orientation = 1);
KFormValue hodge(const MetricValue& g, int orientation, const KFormValue& w);
/// (self-dual, anti-self-dual) parts of a 2-form in dimension 4.
std::pair<KFormValue, KFormValue> sd_asd_split(const MetricValue& g, int orientation,
                                               const KFormValue& w);

/// Endomorphism A with g(A X, Y) = w(X, Y); A(i, j) = A^i_j.
Eigen::MatrixXd two_form_to_endomorphism(const MetricValue& g, const KFormValue& w);
/// Contravariant bivector w^{ab} = g^{ai} g^{bj} w_ij.
Eigen::MatrixXd raise_two_form(const MetricValue& g, const KFormValue& w);

}  // namespace weyl
