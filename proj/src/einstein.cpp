#include "weyl/einstein.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "weyl/errors.hpp"

namespace weyl {

double toda_residual(const ScalarExpr& f, std::span<const double> p) {
  const auto [l12, l34] = partial_laplacians(f);
  return std::exp(2.0 * f.eval(p)) * l12.eval(p) + l34.eval(p);
}

std::pair<double, double> biharmonic_defect(const ScalarExpr& f, std::span<const double> p) {
  const auto [l12, l34] = partial_laplacians(f);
  return {std::abs(l12.eval(p)), std::abs(l34.eval(p))};
}

namespace {

struct SymmetricRicci {
  Eigen::MatrixXd sym;
  Eigen::MatrixXd ginv;
  Eigen::MatrixXd g;
};

SymmetricRicci symmetric_ricci(const WeylChart& W, std::span<const double> p) {
  const Eigen::MatrixXd ric = weyl_ricci(W, p);
  const MetricValue g = W.metric(p);
  return {0.5 * (ric + ric.transpose()), g.inverse(), g.matrix()};
}

}  // namespace

double einstein_weyl_defect(const WeylChart& W, std::span<const double> p) {
  const SymmetricRicci s = symmetric_ricci(W, p);
  const double scal = (s.ginv * s.sym).trace();
  const Eigen::MatrixXd tf = s.sym - scal / W.dim() * s.g;
  return std::sqrt(std::max(0.0, (s.ginv * tf * s.ginv * tf).trace()));
}

double weyl_scalar_curvature(const WeylChart& W, std::span<const double> p) {
  const SymmetricRicci s = symmetric_ricci(W, p);
  return (s.ginv * s.sym).trace();
}

// ---------------------------------------------------------------------------

namespace {

void validate_spec(const GridSpec& spec) {
  for (int a = 0; a < 4; ++a) {
    if (spec.n[static_cast<std::size_t>(a)] < 5 || spec.n[static_cast<std::size_t>(a)] > 33) {
      throw InvalidArgument("grid sizes must be within 5..33 per axis");
    }
    if (!(spec.h[static_cast<std::size_t>(a)] > 0.0) || !std::isfinite(spec.x0[static_cast<std::size_t>(a)])) {
      throw InvalidArgument("grid spacing must be positive and the origin finite");
    }
  }
}

std::size_t node_count(const GridSpec& spec) {
  std::size_t total = 1;
  for (int v : spec.n) total *= static_cast<std::size_t>(v);
  return total;
}

}  // namespace

GridField::GridField(GridSpec spec, double fill) : spec_(spec) {
  validate_spec(spec_);
  values_.assign(node_count(spec_), fill);
}

GridField::GridField(GridSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
  validate_spec(spec_);
  if (values_.size() != node_count(spec_)) throw InvalidArgument("grid value count does not match its sizes");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("grid values must be finite");
  }
}

GridSpec GridField::cube(int nodes, double lo, double hi) {
  GridSpec s;
  s.n.fill(nodes);
  s.x0.fill(lo);
  s.h.fill((hi - lo) / (nodes - 1));
  return s;
}

GridField GridField::sample(GridSpec spec, const ScalarExpr& f) {
  GridField g(spec);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.coordinates(i);
    g.values_[i] = f.eval(std::span<const double>(x.data(), x.size()));
  }
  return g;
}

std::size_t GridField::flat(const std::array<int, 4>& idx) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < 4; ++a) f = f * static_cast<std::size_t>(spec_.n[a]) + static_cast<std::size_t>(idx[a]);
  return f;
}

std::array<int, 4> GridField::index(std::size_t flat) const {
  std::array<int, 4> idx{};
  for (int a = 3; a >= 0; --a) {
    const auto na = static_cast<std::size_t>(spec_.n[static_cast<std::size_t>(a)]);
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % na);
    flat /= na;
  }
  return idx;
}

std::array<double, 4> GridField::coordinates(std::size_t flat) const {
  const auto idx = index(flat);
  std::array<double, 4> x{};
  for (std::size_t a = 0; a < 4; ++a) x[a] = spec_.x0[a] + idx[a] * spec_.h[a];
  return x;
}

bool GridField::is_interior(std::size_t flat) const {
  const auto idx = index(flat);
  for (std::size_t a = 0; a < 4; ++a) {
    if (idx[a] == 0 || idx[a] == spec_.n[a] - 1) return false;
  }
  return true;
}

void write_grid(std::ostream& out, const GridField& f) {
  const GridSpec& s = f.spec();
  char buf[64];
  out << "toda-grid v1";
  for (int v : s.n) out << ' ' << v;
  for (double v : s.x0) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out << buf;
  }
  for (double v : s.h) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out << buf;
  }
  out << '\n';
  for (double v : f.values()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
}

GridField read_grid(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidArgument("empty grid file");
  std::istringstream hs(header);
  std::string magic, version;
  GridSpec s;
  hs >> magic >> version;
  if (magic != "toda-grid" || version != "v1") throw InvalidArgument("not a toda-grid v1 file");
  for (int& v : s.n) hs >> v;
  for (double& v : s.x0) hs >> v;
  for (double& v : s.h) hs >> v;
  if (!hs) throw InvalidArgument("malformed toda-grid header");
  validate_spec(s);
  std::vector<double> values(node_count(s));
  for (double& v : values) {
    if (!(in >> v)) throw InvalidArgument("toda-grid file has too few values");
  }
  double extra;
  if (in >> extra) throw InvalidArgument("toda-grid file has trailing values");
  return GridField(s, std::move(values));
}

// ---------------------------------------------------------------------------

namespace {

std::array<std::size_t, 4> strides(const GridSpec& s) {
  std::array<std::size_t, 4> st{};
  st[3] = 1;
  for (int a = 2; a >= 0; --a) {
    st[static_cast<std::size_t>(a)] = st[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(s.n[static_cast<std::size_t>(a + 1)]);
  }
  return st;
}

double second_difference(std::span<const double> v, std::size_t i, std::size_t stride, double h) {
  return (v[i + stride] - 2.0 * v[i] + v[i - stride]) / (h * h);
}

// Interior nodes and the discrete operator pieces at a field state.
struct Discretization {
  GridSpec spec;
  std::array<std::size_t, 4> stride;
  std::vector<std::size_t> interior;  // grid flat index per unknown
  std::vector<long> unknown;          // unknown index per grid node, -1 on the boundary

  explicit Discretization(const GridField& g) : spec(g.spec()), stride(strides(g.spec())) {
    unknown.assign(g.size(), -1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.is_interior(i)) {
        unknown[i] = static_cast<long>(interior.size());
        interior.push_back(i);
      }
    }
  }

  double l12(std::span<const double> v, std::size_t i) const {
    return second_difference(v, i, stride[0], spec.h[0]) + second_difference(v, i, stride[1], spec.h[1]);
  }
  double l34(std::span<const double> v, std::size_t i) const {
    return second_difference(v, i, stride[2], spec.h[2]) + second_difference(v, i, stride[3], spec.h[3]);
  }
};

// Jacobian of the discrete Toda operator at a fixed state, applied matrix-free.
class TodaJacobian;

}  // namespace
}  // namespace weyl

namespace Eigen::internal {
template <>
struct traits<weyl::TodaJacobian> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace weyl {
namespace {

class TodaJacobian : public Eigen::EigenBase<TodaJacobian> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  TodaJacobian(const Discretization& d, std::span<const double> state) : d_(d), state_(state), work_(state.size(), 0.0) {
    const std::size_t m = d.interior.size();
    e2f_.resize(m);
    diag_term_.resize(m);
    for (std::size_t u = 0; u < m; ++u) {
      const std::size_t i = d.interior[u];
      e2f_[u] = std::exp(2.0 * state[i]);
      diag_term_[u] = 2.0 * e2f_[u] * d.l12(state, i);
    }
  }

  Eigen::Index rows() const { return static_cast<Eigen::Index>(d_.interior.size()); }
  Eigen::Index cols() const { return rows(); }

  template <typename Rhs>
  Eigen::Product<TodaJacobian, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<TodaJacobian, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  template <typename Vec>
  void apply(const Vec& v, Eigen::VectorXd& out) const {
    // Scatter to a grid-shaped buffer with zero boundary values.
    for (std::size_t u = 0; u < d_.interior.size(); ++u) work_[d_.interior[u]] = v(static_cast<Eigen::Index>(u));
    out.resize(rows());
    for (std::size_t u = 0; u < d_.interior.size(); ++u) {
      const std::size_t i = d_.interior[u];
      out(static_cast<Eigen::Index>(u)) =
          e2f_[u] * d_.l12(work_, i) + diag_term_[u] * work_[i] + d_.l34(work_, i);
    }
  }

  Eigen::VectorXd diagonal() const {
    const auto& h = d_.spec.h;
    const double c12 = -2.0 / (h[0] * h[0]) - 2.0 / (h[1] * h[1]);
    const double c34 = -2.0 / (h[2] * h[2]) - 2.0 / (h[3] * h[3]);
    Eigen::VectorXd dg(rows());
    for (std::size_t u = 0; u < d_.interior.size(); ++u) {
      dg(static_cast<Eigen::Index>(u)) = e2f_[u] * c12 + diag_term_[u] + c34;
    }
    return dg;
  }

 private:
  const Discretization& d_;
  std::span<const double> state_;
  mutable std::vector<double> work_;
  std::vector<double> e2f_;
  std::vector<double> diag_term_;
};

// Jacobi preconditioner with an externally supplied diagonal.
class FixedDiagonalPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  FixedDiagonalPreconditioner() = default;
  template <typename M>
  explicit FixedDiagonalPreconditioner(const M&) {}

  void set_diagonal(const Eigen::VectorXd& d) { inv_ = d.cwiseInverse(); }
  template <typename M>
  FixedDiagonalPreconditioner& analyzePattern(const M&) { return *this; }
  template <typename M>
  FixedDiagonalPreconditioner& factorize(const M&) { return *this; }
  template <typename M>
  FixedDiagonalPreconditioner& compute(const M&) { return *this; }

  template <typename Rhs>
  Eigen::VectorXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    return inv_.cwiseProduct(b.derived());
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  Eigen::VectorXd inv_;
};

}  // namespace
}  // namespace weyl

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<weyl::TodaJacobian, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<weyl::TodaJacobian, Rhs, generic_product_impl<weyl::TodaJacobian, Rhs>> {
  using Scalar = typename Product<weyl::TodaJacobian, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const weyl::TodaJacobian& lhs, const Rhs& rhs, const Scalar& alpha) {
    Eigen::VectorXd y;
    lhs.apply(rhs, y);
    dst += alpha * y;
  }
};
}  // namespace Eigen::internal

namespace weyl {

GridField toda_operator(const GridField& f) {
  const Discretization d(f);
  GridField out(f.spec());
  for (std::size_t i : d.interior) out[i] = std::exp(2.0 * f[i]) * d.l12(f.values(), i) + d.l34(f.values(), i);
  return out;
}

namespace {

Eigen::VectorXd residual_vector(const Discretization& d, const GridField& f, const GridField* source) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(d.interior.size()));
  for (std::size_t u = 0; u < d.interior.size(); ++u) {
    const std::size_t i = d.interior[u];
    double v = std::exp(2.0 * f[i]) * d.l12(f.values(), i) + d.l34(f.values(), i);
    if (source) v -= (*source)[i];
    r(static_cast<Eigen::Index>(u)) = v;
  }
  return r;
}

bool same_grid(const GridSpec& a, const GridSpec& b) { return a.n == b.n && a.x0 == b.x0 && a.h == b.h; }

}  // namespace

TodaResult toda_solve(const TodaProblem& problem, int max_iter, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  const GridSpec& spec = problem.boundary.spec();
  if (problem.source && !same_grid(problem.source->spec(), spec)) throw InvalidArgument("source grid mismatch");
  if (problem.initial_guess && !same_grid(problem.initial_guess->spec(), spec)) {
    throw InvalidArgument("initial guess grid mismatch");
  }

  const Discretization d(problem.boundary);
  GridField f = problem.boundary;
  for (std::size_t i : d.interior) f[i] = problem.initial_guess ? (*problem.initial_guess)[i] : 0.0;
  const GridField* source = problem.source ? &*problem.source : nullptr;

  TodaResult result{f, false, 0, {}, {}};
  Eigen::VectorXd r = residual_vector(d, f, source);
  double phi = 0.5 * r.squaredNorm();
  double best = r.lpNorm<Eigen::Infinity>();
  result.residual_history.push_back(best);
  if (best < tol) {
    result.converged = true;
    return result;
  }

  for (int it = 0; it < max_iter; ++it) {
    const TodaJacobian J(d, f.values());
    Eigen::BiCGSTAB<TodaJacobian, FixedDiagonalPreconditioner> solver;
    solver.preconditioner().set_diagonal(J.diagonal());
    solver.compute(J);
    solver.setTolerance(1e-13);
    solver.setMaxIterations(4 * static_cast<int>(J.rows()) + 100);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(J.rows());
    // Restart from the current iterate if BiCGSTAB stagnates or breaks down.
    for (int restart = 0; restart < 4; ++restart) {
      step = solver.solveWithGuess(-r, step);
      if (solver.info() == Eigen::Success) break;
    }
    if (!step.allFinite()) {
      result.failure = "linear solve produced non-finite values";
      break;
    }

    // Armijo backtracking on phi = |r|^2 / 2; the Newton direction has slope -2 phi.
    double t = 1.0;
    bool accepted = false;
    GridField trial = f;
    Eigen::VectorXd r_trial;
    for (int halving = 0; halving <= 30; ++halving) {
      for (std::size_t u = 0; u < d.interior.size(); ++u) {
        trial[d.interior[u]] = f[d.interior[u]] + t * step(static_cast<Eigen::Index>(u));
      }
      r_trial = residual_vector(d, trial, source);
      const double phi_trial = 0.5 * r_trial.squaredNorm();
      if (std::isfinite(phi_trial) && phi_trial <= (1.0 - 2e-4 * t) * phi) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      result.failure = "line search failed";
      break;
    }
    f = trial;
    r = r_trial;
    phi = 0.5 * r.squaredNorm();
    result.iterations = it + 1;
    const double res = r.lpNorm<Eigen::Infinity>();
    result.residual_history.push_back(res);
    if (res < best) {
      best = res;
      result.solution = f;
    }
    if (res < tol) {
      result.converged = true;
      return result;
    }
  }
  if (result.failure.empty()) result.failure = "no convergence within the iteration limit";
  return result;
}

}  // namespace weyl
