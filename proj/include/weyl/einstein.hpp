#pragma once

// Einstein-Weyl diagnostics and the Toda-type equation
//
//   e^{2f} (d11 f + d22 f) + d33 f + d44 f = 0
//
// satisfied by f when the 2+2 product g1 + e^{2f} g2 is Einstein-Weyl.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weyl/expr.hpp"
#include "weyl/weyl.hpp"

namespace weyl {

double toda_residual(const ScalarExpr& f, std::span<const double> p);
/// (|d11 f + d22 f|, |d33 f + d44 f|).
std::pair<double, double> biharmonic_defect(const ScalarExpr& f, std::span<const double> p);

/// g-norm of the trace-free symmetric part of the Weyl Ricci tensor.
double einstein_weyl_defect(const WeylChart& W, std::span<const double> p);
/// g-trace of the symmetric part of the Weyl Ricci tensor.
double weyl_scalar_curvature(const WeylChart& W, std::span<const double> p);

// ---------------------------------------------------------------------------
// Grids

struct GridSpec {
  std::array<int, 4> n{};     // nodes per axis, 5..33
  std::array<double, 4> x0{};  // first node
  std::array<double, 4> h{};   // spacing
};

/// Regular 4D lattice over a box; values row-major with the last axis fastest.
class GridField {
 public:
  explicit GridField(GridSpec spec, double fill = 0.0);
  GridField(GridSpec spec, std::vector<double> values);
  /// Box [lo, hi]^4 with `nodes` per axis.
  static GridSpec cube(int nodes, double lo, double hi);
  static GridField sample(GridSpec spec, const ScalarExpr& f);

  const GridSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t flat) { return values_[flat]; }
  double operator[](std::size_t flat) const { return values_[flat]; }

  std::size_t flat(const std::array<int, 4>& idx) const;
  std::array<int, 4> index(std::size_t flat) const;
  std::array<double, 4> coordinates(std::size_t flat) const;
  bool is_interior(std::size_t flat) const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// Text format: "toda-grid v1 n1 n2 n3 n4 x0_1 .. x0_4 h1 .. h4" then one value
/// per line, 17 significant digits.
void write_grid(std::ostream& out, const GridField& f);
GridField read_grid(std::istream& in);

/// e^{2f} (D11 f + D22 f) + D33 f + D44 f with second central differences, at
/// interior nodes; boundary entries are 0.
GridField toda_operator(const GridField& f);

struct TodaProblem {
  /// Supplies the Dirichlet data; interior entries are ignored.
  GridField boundary;
  /// Source term s (same grid), default 0.
  std::optional<GridField> source;
  /// Interior starting values; default 0.
  std::optional<GridField> initial_guess;
};

struct TodaResult {
  GridField solution;
  bool converged = false;
  int iterations = 0;
  /// Max interior residual before each Newton step and after the last one.
  std::vector<double> residual_history;
  /// Non-empty when the solver stopped early.
  std::string failure;
};

/// Damped Newton on toda_operator(f) - s = 0 over the interior nodes, with a
/// matrix-free preconditioned BiCGSTAB for the linear systems and Armijo
/// backtracking (halving up to 30 times). Stops once the max interior
/// residual is below tol; otherwise returns the best iterate.
TodaResult toda_solve(const TodaProblem& problem, int max_iter, double tol);

}  // namespace weyl
