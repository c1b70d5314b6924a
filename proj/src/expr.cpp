#include "weyl/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "weyl/errors.hpp"
#include "weyl/sampling.hpp"

namespace weyl {

struct ScalarExpr::Node {
  Kind kind = Kind::Const;
  double value = 0.0;
  int integer = 0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

namespace {

using Kind = ScalarExpr::Kind;

const std::shared_ptr<const ScalarExpr::Node>& zero_node() {
  static const std::shared_ptr<const ScalarExpr::Node> node = [] {
    auto n = std::make_shared<ScalarExpr::Node>();
    n->kind = Kind::Const;
    return n;
  }();
  return node;
}

}  // namespace

ScalarExpr make_node(Kind kind, ScalarExpr a, ScalarExpr b, double value, int integer) {
  auto node = std::make_shared<ScalarExpr::Node>();
  node->kind = kind;
  node->value = value;
  node->integer = integer;
  node->a = std::move(a.node_);
  node->b = std::move(b.node_);
  return ScalarExpr(std::shared_ptr<const ScalarExpr::Node>(std::move(node)));
}

ScalarExpr::ScalarExpr() : node_(zero_node()) {}

ScalarExpr::ScalarExpr(double value) : node_(nullptr) {
  if (value == 0.0) {
    node_ = zero_node();
  } else {
    auto node = std::make_shared<Node>();
    node->kind = Kind::Const;
    node->value = value;
    node_ = std::move(node);
  }
}

ScalarExpr::ScalarExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

ScalarExpr ScalarExpr::coordinate(int index) {
  if (index < 0 || index >= 6) throw DimensionError("coordinate index outside 0..5");
  return make_node(Kind::Var, {}, {}, 0.0, index);
}

ScalarExpr::Kind ScalarExpr::kind() const noexcept { return node_->kind; }
double ScalarExpr::value() const noexcept { return node_->value; }
int ScalarExpr::integer() const noexcept { return node_->integer; }
ScalarExpr ScalarExpr::lhs() const { return ScalarExpr(node_->a ? node_->a : zero_node()); }
ScalarExpr ScalarExpr::rhs() const { return ScalarExpr(node_->b ? node_->b : zero_node()); }

// ---------------------------------------------------------------------------
// Construction with light simplification

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_constant() && b.is_constant()) return ScalarExpr(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (b.kind() == Kind::Neg) return a - b.lhs();
  return make_node(Kind::Add, a, b, 0.0, 0);
}

ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_constant() && b.is_constant()) return ScalarExpr(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (b.kind() == Kind::Neg) return a + b.lhs();
  return make_node(Kind::Sub, a, b, 0.0, 0);
}

ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_constant() && b.is_constant()) return ScalarExpr(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return ScalarExpr(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_constant() && a.value() == -1.0) return -b;
  if (b.is_constant() && b.value() == -1.0) return -a;
  if (a.kind() == Kind::Neg && b.kind() == Kind::Neg) return a.lhs() * b.lhs();
  if (a.kind() == Kind::Neg) return -(a.lhs() * b);
  if (b.kind() == Kind::Neg) return -(a * b.lhs());
  // Keep constants on the left so they can fold: c1 * (c2 * x) -> (c1 c2) * x.
  if (b.is_constant()) return b * a;
  if (a.is_constant() && b.kind() == Kind::Mul && b.lhs().is_constant()) {
    return ScalarExpr(a.value() * b.lhs().value()) * b.rhs();
  }
  return make_node(Kind::Mul, a, b, 0.0, 0);
}

ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) {
  if (b.is_constant() && b.value() != 0.0) {
    if (a.is_constant()) return ScalarExpr(a.value() / b.value());
    if (b.is_one()) return a;
  }
  if (a.is_zero() && !b.is_zero()) return ScalarExpr(0.0);
  return make_node(Kind::Div, a, b, 0.0, 0);
}

ScalarExpr operator-(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr(-a.value());
  if (a.kind() == Kind::Neg) return a.lhs();
  if (a.kind() == Kind::Mul && a.lhs().is_constant()) {
    return ScalarExpr(-a.lhs().value()) * a.rhs();
  }
  return make_node(Kind::Neg, a, {}, 0.0, 0);
}

ScalarExpr pow(const ScalarExpr& base, int exponent) {
  if (exponent < 0) throw InvalidArgument("negative integer powers are expressed with '/'");
  if (exponent == 0) return ScalarExpr(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return ScalarExpr(std::pow(base.value(), exponent));
  if (base.kind() == Kind::Pow) return pow(base.lhs(), base.integer() * exponent);
  return make_node(Kind::Pow, base, {}, 0.0, exponent);
}

ScalarExpr exp(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr(std::exp(a.value()));
  return make_node(Kind::Exp, a, {}, 0.0, 0);
}

ScalarExpr ln(const ScalarExpr& a) {
  if (a.is_constant() && a.value() > 0.0) return ScalarExpr(std::log(a.value()));
  if (a.kind() == Kind::Exp) return a.lhs();
  return make_node(Kind::Ln, a, {}, 0.0, 0);
}

ScalarExpr sin(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr(std::sin(a.value()));
  return make_node(Kind::Sin, a, {}, 0.0, 0);
}

ScalarExpr cos(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr(std::cos(a.value()));
  return make_node(Kind::Cos, a, {}, 0.0, 0);
}

// ---------------------------------------------------------------------------
// Evaluation

double ScalarExpr::eval(std::span<const double> p) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Const:
      return n.value;
    case Kind::Var:
      if (static_cast<std::size_t>(n.integer) >= p.size()) {
        throw DimensionError("point has no coordinate x" + std::to_string(n.integer + 1));
      }
      return p[static_cast<std::size_t>(n.integer)];
    case Kind::Add:
      return lhs().eval(p) + rhs().eval(p);
    case Kind::Sub:
      return lhs().eval(p) - rhs().eval(p);
    case Kind::Mul:
      return lhs().eval(p) * rhs().eval(p);
    case Kind::Div: {
      const double den = rhs().eval(p);
      if (den == 0.0) throw DomainError("division by zero", to_string());
      return lhs().eval(p) / den;
    }
    case Kind::Pow: {
      const double b = lhs().eval(p);
      double r = 1.0;
      for (int i = 0; i < n.integer; ++i) r *= b;
      return r;
    }
    case Kind::Neg:
      return -lhs().eval(p);
    case Kind::Exp:
      return std::exp(lhs().eval(p));
    case Kind::Ln: {
      const double v = lhs().eval(p);
      if (!(v > 0.0)) throw DomainError("ln of non-positive value", to_string());
      return std::log(v);
    }
    case Kind::Sin:
      return std::sin(lhs().eval(p));
    case Kind::Cos:
      return std::cos(lhs().eval(p));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Binding strength of the printed node: 1 sums, 2 products, 3 unary minus,
// 4 powers, 5 atoms.
int precedence(const ScalarExpr& e) {
  switch (e.kind()) {
    case Kind::Add:
    case Kind::Sub:
      return 1;
    case Kind::Mul:
    case Kind::Div:
      return 2;
    case Kind::Neg:
      return 3;
    case Kind::Pow:
      return 4;
    case Kind::Const:
      return e.value() < 0.0 ? 3 : 5;
    default:
      return 5;
  }
}

void print(const ScalarExpr& e, std::string& out);

void print_child(const ScalarExpr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const ScalarExpr& e, std::string& out) {
  switch (e.kind()) {
    case Kind::Const:
      if (e.value() < 0.0) {
        out += '-';
        out += format_number(-e.value());
      } else {
        out += format_number(e.value());
      }
      return;
    case Kind::Var:
      out += 'x';
      out += std::to_string(e.integer() + 1);
      return;
    case Kind::Add:
      print_child(e.lhs(), 1, out);
      out += " + ";
      print_child(e.rhs(), 2, out);
      return;
    case Kind::Sub:
      print_child(e.lhs(), 1, out);
      out += " - ";
      print_child(e.rhs(), 2, out);
      return;
    case Kind::Mul:
      print_child(e.lhs(), 2, out);
      out += '*';
      print_child(e.rhs(), 3, out);
      return;
    case Kind::Div:
      print_child(e.lhs(), 2, out);
      out += '/';
      print_child(e.rhs(), 3, out);
      return;
    case Kind::Neg:
      out += '-';
      print_child(e.lhs(), 4, out);
      return;
    case Kind::Pow:
      print_child(e.lhs(), 5, out);
      out += '^';
      out += std::to_string(e.integer());
      return;
    case Kind::Exp:
    case Kind::Ln:
    case Kind::Sin:
    case Kind::Cos: {
      static constexpr std::array<const char*, 4> names = {"exp", "ln", "sin", "cos"};
      out += names[static_cast<std::size_t>(e.kind()) - static_cast<std::size_t>(Kind::Exp)];
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string ScalarExpr::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

int ScalarExpr::max_coordinate() const {
  switch (kind()) {
    case Kind::Const:
      return -1;
    case Kind::Var:
      return integer();
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
      return std::max(lhs().max_coordinate(), rhs().max_coordinate());
    default:
      return lhs().max_coordinate();
  }
}

bool ScalarExpr::depends_on(int index) const {
  switch (kind()) {
    case Kind::Const:
      return false;
    case Kind::Var:
      return integer() == index;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
      return lhs().depends_on(index) || rhs().depends_on(index);
    default:
      return lhs().depends_on(index);
  }
}

std::size_t ScalarExpr::node_count() const {
  switch (kind()) {
    case Kind::Const:
    case Kind::Var:
      return 1;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
      return 1 + lhs().node_count() + rhs().node_count();
    default:
      return 1 + lhs().node_count();
  }
}

// ---------------------------------------------------------------------------
// Differentiation and substitution

ScalarExpr partial(const ScalarExpr& e, int index) {
  switch (e.kind()) {
    case Kind::Const:
      return ScalarExpr(0.0);
    case Kind::Var:
      return ScalarExpr(e.integer() == index ? 1.0 : 0.0);
    case Kind::Add:
      return partial(e.lhs(), index) + partial(e.rhs(), index);
    case Kind::Sub:
      return partial(e.lhs(), index) - partial(e.rhs(), index);
    case Kind::Mul:
      return partial(e.lhs(), index) * e.rhs() + e.lhs() * partial(e.rhs(), index);
    case Kind::Div: {
      const ScalarExpr da = partial(e.lhs(), index);
      const ScalarExpr db = partial(e.rhs(), index);
      if (db.is_zero()) return da / e.rhs();
      return (da * e.rhs() - e.lhs() * db) / pow(e.rhs(), 2);
    }
    case Kind::Pow:
      return ScalarExpr(static_cast<double>(e.integer())) * pow(e.lhs(), e.integer() - 1) *
             partial(e.lhs(), index);
    case Kind::Neg:
      return -partial(e.lhs(), index);
    case Kind::Exp:
      return e * partial(e.lhs(), index);
    case Kind::Ln:
      return partial(e.lhs(), index) / e.lhs();
    case Kind::Sin:
      return cos(e.lhs()) * partial(e.lhs(), index);
    case Kind::Cos:
      return -(sin(e.lhs()) * partial(e.lhs(), index));
  }
  return ScalarExpr(0.0);
}

ScalarExpr partial(const ScalarExpr& e, int i, int j) { return partial(partial(e, i), j); }

ScalarExpr substitute(const ScalarExpr& e, const std::map<int, ScalarExpr>& replacement) {
  switch (e.kind()) {
    case Kind::Const:
      return e;
    case Kind::Var: {
      const auto it = replacement.find(e.integer());
      return it == replacement.end() ? e : it->second;
    }
    case Kind::Add:
      return substitute(e.lhs(), replacement) + substitute(e.rhs(), replacement);
    case Kind::Sub:
      return substitute(e.lhs(), replacement) - substitute(e.rhs(), replacement);
    case Kind::Mul:
      return substitute(e.lhs(), replacement) * substitute(e.rhs(), replacement);
    case Kind::Div:
      return substitute(e.lhs(), replacement) / substitute(e.rhs(), replacement);
    case Kind::Pow:
      return pow(substitute(e.lhs(), replacement), e.integer());
    case Kind::Neg:
      return -substitute(e.lhs(), replacement);
    case Kind::Exp:
      return exp(substitute(e.lhs(), replacement));
    case Kind::Ln:
      return ln(substitute(e.lhs(), replacement));
    case Kind::Sin:
      return sin(substitute(e.lhs(), replacement));
    case Kind::Cos:
      return cos(substitute(e.lhs(), replacement));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  ScalarExpr parse() {
    ScalarExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarExpr expr() {
    ScalarExpr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr term() {
    ScalarExpr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * factor();
      } else if (accept('/')) {
        lhs = lhs / factor();
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr factor() {
    const bool negate = accept('-');
    ScalarExpr b = base();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      if (pos_ - start > 3) {
        pos_ = start;
        fail("exponent too large");
      }
      b = pow(b, std::atoi(std::string(text_.substr(start, pos_ - start)).c_str()));
    }
    return negate ? -b : b;
  }

  ScalarExpr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ScalarExpr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  ScalarExpr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail("malformed number");
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail("malformed exponent");
    }
    const std::string literal(text_.substr(start, pos_ - start));
    return ScalarExpr(std::strtod(literal.c_str(), nullptr));
  }

  ScalarExpr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name.size() == 2 && name[0] == 'x' && std::isdigit(static_cast<unsigned char>(name[1]))) {
      const int index = name[1] - '1';
      if (index < 0 || index >= dim_) {
        pos_ = start;
        fail("coordinate " + std::string(name) + " out of chart range");
      }
      return ScalarExpr::coordinate(index);
    }
    ScalarExpr (*fn)(const ScalarExpr&) = nullptr;
    if (name == "exp") fn = &weyl::exp;
    if (name == "ln") fn = &weyl::ln;
    if (name == "sin") fn = &weyl::sin;
    if (name == "cos") fn = &weyl::cos;
    if (fn == nullptr) {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    if (!accept('(')) fail("expected '(' after " + std::string(name));
    ScalarExpr arg = expr();
    if (!accept(')')) fail("expected ')'");
    return fn(arg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int dim_;
};

}  // namespace

ScalarExpr parse_expr(std::string_view text, const Chart& chart) {
  return Parser(text, chart.dim()).parse();
}

void validate_on_box(const ScalarExpr& e, const Chart& chart, int samples) {
  if (e.max_coordinate() >= chart.dim()) {
    throw DimensionError("expression uses a coordinate outside the chart");
  }
  QuasiRandomSampler sampler(chart.dim(), 0x5eed);
  for (int i = 0; i < samples; ++i) {
    const double v = e.eval(sampler.next(chart));
    if (!std::isfinite(v)) throw DomainError("non-finite value", e.to_string());
  }
}

// ---------------------------------------------------------------------------
// Chart

Chart::Chart(int dim, std::vector<std::pair<double, double>> box) : dim_(dim), box_(std::move(box)) {
  if (dim_ < 1 || dim_ > 6) throw DimensionError("chart dimension outside 1..6");
  if (static_cast<int>(box_.size()) != dim_) throw DimensionError("box does not match chart dimension");
  for (const auto& [lo, hi] : box_) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw InvalidArgument("chart box must have positive volume");
    }
  }
}

Chart Chart::cube(int dim, double lo, double hi) {
  return Chart(dim, std::vector<std::pair<double, double>>(static_cast<std::size_t>(dim), {lo, hi}));
}

bool Chart::contains(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dim_) return false;
  for (int i = 0; i < dim_; ++i) {
    const auto& [lo, hi] = box_[static_cast<std::size_t>(i)];
    if (p[static_cast<std::size_t>(i)] < lo || p[static_cast<std::size_t>(i)] > hi) return false;
  }
  return true;
}

Point Chart::at_unit(std::span<const double> u) const {
  Point p(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) {
    const auto& [lo, hi] = box_[static_cast<std::size_t>(i)];
    p[static_cast<std::size_t>(i)] = lo + (hi - lo) * u[static_cast<std::size_t>(i)];
  }
  return p;
}

// ---------------------------------------------------------------------------
// Holomorphic polynomials

ComplexPoly2::ComplexPoly2(std::vector<ComplexMonomial> terms) : terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.p < 0 || t.q < 0) throw InvalidArgument("monomial degrees must be non-negative");
  }
}

std::complex<double> ComplexPoly2::operator()(std::complex<double> z, std::complex<double> w) const {
  std::complex<double> acc = 0.0;
  for (const auto& t : terms_) acc += t.coefficient * std::pow(z, t.p) * std::pow(w, t.q);
  return acc;
}

namespace {

using Exponents = std::array<int, 4>;
using ComplexPolynomial = std::map<Exponents, std::complex<double>>;

// (x_a + i*sign*x_b)^p expanded binomially.
ComplexPolynomial binomial_power(int a, int b, int sign, int p) {
  ComplexPolynomial out;
  double binom = 1.0;
  for (int m = 0; m <= p; ++m) {
    Exponents e{};
    e[static_cast<std::size_t>(a)] = p - m;
    e[static_cast<std::size_t>(b)] = m;
    out[e] = binom * std::pow(std::complex<double>(0.0, sign), m);
    binom = binom * (p - m) / (m + 1);
  }
  return out;
}

ComplexPolynomial multiply(const ComplexPolynomial& x, const ComplexPolynomial& y) {
  ComplexPolynomial out;
  for (const auto& [ex, cx] : x) {
    for (const auto& [ey, cy] : y) {
      Exponents e{};
      for (std::size_t k = 0; k < 4; ++k) e[k] = ex[k] + ey[k];
      out[e] += cx * cy;
    }
  }
  return out;
}

ScalarExpr monomial(const Exponents& e) {
  ScalarExpr m(1.0);
  for (int k = 0; k < 4; ++k) m = m * pow(ScalarExpr::coordinate(k), e[static_cast<std::size_t>(k)]);
  return m;
}

}  // namespace

std::pair<ScalarExpr, ScalarExpr> holomorphic_parts(const ComplexPoly2& h, int z_sign, int w_sign) {
  ComplexPolynomial total;
  for (const auto& t : h.terms()) {
    ComplexPolynomial term = multiply(binomial_power(0, 1, z_sign, t.p), binomial_power(2, 3, w_sign, t.q));
    for (const auto& [e, c] : term) total[e] += t.coefficient * c;
  }
  ScalarExpr re(0.0);
  ScalarExpr im(0.0);
  for (const auto& [e, c] : total) {
    if (c.real() != 0.0) re = re + ScalarExpr(c.real()) * monomial(e);
    if (c.imag() != 0.0) im = im + ScalarExpr(c.imag()) * monomial(e);
  }
  return {re, im};
}

ScalarExpr re_holomorphic(const ComplexPoly2& h, bool conjugate_w, const Chart& chart, int z_sign) {
  if (chart.dim() != 4) throw DimensionError("re_holomorphic needs a 4-dimensional chart");
  return holomorphic_parts(h, z_sign >= 0 ? 1 : -1, conjugate_w ? -1 : 1).first;
}

std::pair<ScalarExpr, ScalarExpr> partial_laplacians(const ScalarExpr& f) {
  return {partial(f, 0, 0) + partial(f, 1, 1), partial(f, 2, 2) + partial(f, 3, 3)};
}

}  // namespace weyl
