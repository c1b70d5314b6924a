#pragma once

// Closed-form scalar fields on a coordinate chart.
//
// A ScalarExpr is an immutable, shareable expression tree over constants,
// coordinates x1..x6, + - * /, non-negative integer powers, exp, ln, sin and
// cos. Trees are built through the free operators below, which fold constants
// and absorb 0/1; no other canonicalization is attempted. Equality of two
// expressions is decided by evaluation, never by structure.
//
// Text grammar accepted by parse_expr and produced by to_string():
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := ["-"] base ("^" integer)?
//   base   := number | ident | "(" expr ")" | func "(" expr ")"
//   func   := "exp" | "ln" | "sin" | "cos"
//   ident  := "x" digit
//
// "^" binds tighter than unary minus, so "-x1^2" is -(x1^2).

#include <complex>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace weyl {

using Point = std::vector<double>;

/// Coordinate chart: dimension and an axis-aligned box [lo_i, hi_i].
class Chart {
 public:
  Chart(int dim, std::vector<std::pair<double, double>> box);
  /// The cube [lo, hi]^dim.
  static Chart cube(int dim, double lo, double hi);

  int dim() const noexcept { return dim_; }
  const std::vector<std::pair<double, double>>& box() const noexcept { return box_; }
  bool contains(std::span<const double> p) const;
  /// Point at fractional position u in [0,1]^dim.
  Point at_unit(std::span<const double> u) const;

 private:
  int dim_;
  std::vector<std::pair<double, double>> box_;
};

class ScalarExpr {
 public:
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Ln, Sin, Cos };

  /// The constant 0.
  ScalarExpr();
  /// Implicit so that literals mix with expressions: 2.0 * x.
  ScalarExpr(double value);  // NOLINT(google-explicit-constructor)

  static ScalarExpr constant(double value) { return ScalarExpr(value); }
  /// Coordinate x(index+1).
  static ScalarExpr coordinate(int index);

  Kind kind() const noexcept;
  /// Constant value; only meaningful for Kind::Const.
  double value() const noexcept;
  /// Coordinate index for Kind::Var, exponent for Kind::Pow.
  int integer() const noexcept;
  /// Operand(s); unary nodes only have lhs().
  ScalarExpr lhs() const;
  ScalarExpr rhs() const;

  bool is_constant() const noexcept { return kind() == Kind::Const; }
  bool is_zero() const noexcept { return is_constant() && value() == 0.0; }
  bool is_one() const noexcept { return is_constant() && value() == 1.0; }

  /// Throws DomainError (naming the offending subexpression) for ln of a
  /// non-positive value or a division by zero.
  double eval(std::span<const double> p) const;
  double eval(std::initializer_list<double> p) const {
    return eval(std::span<const double>(p.begin(), p.size()));
  }

  /// Grammar-conformant text; constants are printed with 17 significant digits.
  std::string to_string() const;
  /// Largest coordinate index referenced, or -1.
  int max_coordinate() const;
  bool depends_on(int index) const;
  std::size_t node_count() const;

  struct Node;

 private:
  explicit ScalarExpr(std::shared_ptr<const Node> node);
  friend ScalarExpr make_node(Kind, ScalarExpr, ScalarExpr, double, int);
  std::shared_ptr<const Node> node_;
};

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a);
ScalarExpr pow(const ScalarExpr& base, int exponent);
ScalarExpr exp(const ScalarExpr& a);
ScalarExpr ln(const ScalarExpr& a);
ScalarExpr sin(const ScalarExpr& a);
ScalarExpr cos(const ScalarExpr& a);

/// Exact symbolic partial derivative with respect to coordinate `index`.
ScalarExpr partial(const ScalarExpr& e, int index);
ScalarExpr partial(const ScalarExpr& e, int i, int j);

/// Replaces coordinates by expressions; unmapped coordinates stay.
ScalarExpr substitute(const ScalarExpr& e, const std::map<int, ScalarExpr>& replacement);

/// Parses `text`; ParseError on malformed input, unknown identifiers, or a
/// coordinate outside the chart dimension.
ScalarExpr parse_expr(std::string_view text, const Chart& chart);

/// Evaluates `e` at `samples` quasi-random points of the chart box and
/// rethrows the first DomainError encountered.
void validate_on_box(const ScalarExpr& e, const Chart& chart, int samples = 10000);

// ---------------------------------------------------------------------------
// Polynomials in two complex variables.

struct ComplexMonomial {
  int p = 0;  // degree in z
  int q = 0;  // degree in w
  std::complex<double> coefficient;
};

/// H(z, w) = sum c_pq z^p w^q.
class ComplexPoly2 {
 public:
  ComplexPoly2() = default;
  explicit ComplexPoly2(std::vector<ComplexMonomial> terms);

  const std::vector<ComplexMonomial>& terms() const noexcept { return terms_; }
  std::complex<double> operator()(std::complex<double> z, std::complex<double> w) const;

 private:
  std::vector<ComplexMonomial> terms_;
};

/// Real and imaginary parts of H(z, w) as expressions on a 4-dimensional chart,
/// with z = x1 + i*z_sign*x2 and w = x3 + i*w_sign*x4.
std::pair<ScalarExpr, ScalarExpr> holomorphic_parts(const ComplexPoly2& h, int z_sign, int w_sign);

/// Re H(z, w), or Re H(z, conj(w)) when conjugate_w. z = x1 + i*z_sign*x2.
ScalarExpr re_holomorphic(const ComplexPoly2& h, bool conjugate_w, const Chart& chart,
                          int z_sign = 1);

/// Partial Laplacians (d11 + d22, d33 + d44) of an expression on a 4-chart.
std::pair<ScalarExpr, ScalarExpr> partial_laplacians(const ScalarExpr& f);

}  // namespace weyl
