#include "setmaps/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "setmaps/errors.hpp"

namespace setmaps {

namespace {

Eigen::MatrixXd int_power(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Minv,
                          std::int64_t e) {
  const auto n = M.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd base = e >= 0 ? M : Minv;
  std::uint64_t k = static_cast<std::uint64_t>(e >= 0 ? e : -e);
  while (k) {
    if (k & 1) result = result * base;
    base = base * base;
    k >>= 1;
  }
  return result;
}

double operator_norm(const Eigen::MatrixXd& M, NormKind norm) {
  if (norm == NormKind::kSup) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) m = std::max(m, M.row(i).lpNorm<1>());
    return m;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

bool is_isometry_exact(const Eigen::MatrixXd& M, NormKind norm) {
  if (norm == NormKind::kEuclidean) {
    return (M.transpose() * M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).norm() < 1e-12;
  }
  // Sup norm: signed permutation matrices are exactly isometric.
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    int nonzero = 0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double a = std::abs(M(i, j));
      if (a > 1e-14) {
        ++nonzero;
        if (std::abs(a - 1.0) > 1e-14) return false;
      }
    }
    if (nonzero != 1) return false;
  }
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    int nonzero = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      if (std::abs(M(i, j)) > 1e-14) ++nonzero;
    if (nonzero != 1) return false;
  }
  return true;
}

}  // namespace

Representation Representation::matrix(std::vector<Eigen::MatrixXd> generators, NormKind norm) {
  if (generators.empty() || generators.size() > GroupElement::kMaxDim)
    throw ConfigError("matrix rep needs 1..4 generator matrices");
  const Eigen::Index n = generators.front().rows();
  for (const auto& M : generators)
    if (M.rows() != n || M.cols() != n) throw ConfigError("generator matrices must be square, equal size");
  Representation rep;
  rep.group_dim_ = static_cast<int>(generators.size());
  rep.space_ = FiniteDimSpace{static_cast<int>(n), norm};
  rep.gens_ = std::move(generators);
  for (const auto& M : rep.gens_) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) throw ConfigError("generator matrix is singular");
    rep.gen_invs_.push_back(lu.inverse());
  }
  for (std::size_t a = 0; a < rep.gens_.size(); ++a)
    for (std::size_t b = a + 1; b < rep.gens_.size(); ++b)
      if ((rep.gens_[a] * rep.gens_[b] - rep.gens_[b] * rep.gens_[a]).norm() > 1e-10)
        throw ConfigError("generator matrices must commute (Z^d is abelian)");
  rep.estimate_uniform_bound();
  return rep;
}

Representation Representation::identity(int group_dim, int space_dim, NormKind norm) {
  std::vector<Eigen::MatrixXd> gens(static_cast<std::size_t>(group_dim),
                                    Eigen::MatrixXd::Identity(space_dim, space_dim));
  return matrix(std::move(gens), norm);
}

Representation Representation::koopman(std::shared_ptr<const Subshift> shift,
                                       FiniteSubset window) {
  if (!shift) throw ConfigError("koopman representation needs a subshift");
  if (window.dim() != shift->dimension())
    throw ConfigError("window dimension does not match the subshift");
  Representation rep;
  rep.group_dim_ = shift->dimension();
  rep.space_ = LocallyConstantSpace{std::move(shift), std::move(window)};
  rep.c_pi_ = 1.0;  // sup norms are shift invariant
  rep.c_pi_estimated_ = false;
  return rep;
}

void Representation::estimate_uniform_bound() {
  const NormKind norm = finite_space().norm;
  bool exact_isometric = true;
  for (const auto& M : gens_) exact_isometric = exact_isometric && is_isometry_exact(M, norm);
  for (const auto& M : gen_invs_) exact_isometric = exact_isometric && is_isometry_exact(M, norm);
  if (exact_isometric) {
    c_pi_ = 1.0;
    c_pi_estimated_ = false;
    return;
  }
  // Lower bound: max operator norm over the word ball of radius 8 (4 when
  // the group dimension is large). Words collapse to lattice points.
  const std::int64_t radius = group_dim_ <= 2 ? 8 : 4;
  double best = 1.0;
  std::vector<std::int64_t> g(static_cast<std::size_t>(group_dim_), -radius);
  while (true) {
    Eigen::MatrixXd op = Eigen::MatrixXd::Identity(gens_[0].rows(), gens_[0].cols());
    for (int a = 0; a < group_dim_; ++a)
      op = op * int_power(gens_[static_cast<std::size_t>(a)], gen_invs_[static_cast<std::size_t>(a)],
                          g[static_cast<std::size_t>(a)]);
    best = std::max(best, operator_norm(op, norm));
    int a = 0;
    for (; a < group_dim_; ++a) {
      if (++g[static_cast<std::size_t>(a)] <= radius) break;
      g[static_cast<std::size_t>(a)] = -radius;
    }
    if (a == group_dim_) break;
  }
  c_pi_ = best;
  c_pi_estimated_ = true;
}

double uniform_norm(const Subshift& X, const Potential& f) {
  if (X.is_full()) {
    double m = 0.0;
    for (double v : f.table) m = std::max(m, std::abs(v));
    return m;
  }
  double m = 0.0;
  const int k = X.alphabet_size();
  for_each_pattern(X, f.window, [&](const std::vector<int>& s) {
    m = std::max(m, std::abs(f.table[pattern_code(Pattern(f.window, s), k)]));
  });
  return m;
}

namespace {

// Iterates all assignments of `sites` (base-A odometer, first site most
// significant) and fills `out[code] = eval(symbols)`.
void tabulate(int alphabet_size, std::size_t nsites, std::vector<double>& out,
              const std::function<double(const std::vector<int>&)>& eval) {
  std::vector<int> symbols(nsites, 0);
  const std::size_t total = out.size();
  for (std::size_t code = 0; code < total; ++code) {
    out[code] = eval(symbols);
    // increment, least significant digit last
    for (std::size_t i = nsites; i-- > 0;) {
      if (++symbols[i] < alphabet_size) break;
      symbols[i] = 0;
    }
  }
}

std::uint64_t table_size_for(const Subshift& X, const FiniteSubset& window) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (n > kDefaultPatternCap / static_cast<std::uint64_t>(X.alphabet_size()))
      throw CapacityError("window of size " + std::to_string(window.size()) +
                          " exceeds the table cap");
    n *= static_cast<std::uint64_t>(X.alphabet_size());
  }
  return n;
}

}  // namespace

Potential align_add(const Subshift& X, const Potential& a, double cb, const Potential& b) {
  const int k = X.alphabet_size();
  if (a.window == b.window) {
    std::vector<double> t(a.table.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = a.table[i] + cb * b.table[i];
    return Potential(a.window, std::move(t), k);
  }
  const FiniteSubset U = set_union(a.window, b.window);
  const std::uint64_t n = table_size_for(X, U);
  const auto pa = detail::subindex(U, a.window);
  const auto pb = detail::subindex(U, b.window);
  std::vector<double> t(n);
  tabulate(k, U.size(), t, [&](const std::vector<int>& s) {
    return a.table[detail::subcode(s, pa, k)] + cb * b.table[detail::subcode(s, pb, k)];
  });
  return Potential(U, std::move(t), k);
}

double Representation::norm(const Vec& v) const {
  if (is_finite_dim()) {
    return finite_space().norm == NormKind::kEuclidean ? v.coords().norm()
                                                       : v.coords().lpNorm<Eigen::Infinity>();
  }
  return uniform_norm(*local_space().shift, v.local_fn());
}

Vec Representation::zero() const {
  if (is_finite_dim()) return Vec(Eigen::VectorXd::Zero(finite_space().dim));
  return Vec(zero_potential(*local_space().shift, local_space().window));
}

Eigen::MatrixXd Representation::operator_at(const GroupElement& g) const {
  if (!is_finite_dim()) throw PreconditionError("operator_at requires a finite-dimensional rep");
  if (g.dim() != group_dim_) throw ConfigError("group element dimension mismatch");
  Eigen::MatrixXd op = Eigen::MatrixXd::Identity(gens_[0].rows(), gens_[0].cols());
  for (int a = 0; a < group_dim_; ++a)
    op = op * int_power(gens_[static_cast<std::size_t>(a)], gen_invs_[static_cast<std::size_t>(a)], g[a]);
  return op;
}

Vec Representation::apply(const GroupElement& g, const Vec& v) const {
  if (is_finite_dim()) return Vec(operator_at(g) * v.coords());
  // Koopman: pi(g) phi reads x on window - g; the table is unchanged because
  // a uniform shift preserves the sorted site order.
  const Potential& p = v.local_fn();
  return Vec(Potential(translate(p.window, g), p.table,
                       local_space().shift->alphabet_size()));
}

Eigen::MatrixXd Representation::sum_operator(const FiniteSubset& F) const {
  if (!is_finite_dim()) throw PreconditionError("sum_operator requires a finite-dimensional rep");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(gens_[0].rows(), gens_[0].cols());
  for (const auto& g : F.elements()) s += operator_at(-g);
  return s;
}

Eigen::MatrixXd Representation::average_operator(const FiniteSubset& F) const {
  return sum_operator(F) / static_cast<double>(F.size());
}

Vec Representation::ergodic_sum(const FiniteSubset& F, const Vec& v) const {
  if (is_finite_dim()) {
    if (v.coords().size() != finite_space().dim) throw ConfigError("vector dimension mismatch");
    return Vec(sum_operator(F) * v.coords());
  }
  const Subshift& X = *local_space().shift;
  const Potential& p = v.local_fn();
  if (p.window.dim() != F.dim()) throw ConfigError("window dimension mismatch");
  // S_F v is locally constant on U = union over g in F of (window + g).
  const FiniteSubset U = sumset(p.window, F);
  const std::uint64_t n = table_size_for(X, U);
  std::vector<std::vector<std::size_t>> positions;
  positions.reserve(F.size());
  for (const auto& g : F.elements())
    positions.push_back(detail::subindex(U, translate(p.window, -g)));
  const int k = X.alphabet_size();
  std::vector<double> t(n);
  tabulate(k, U.size(), t, [&](const std::vector<int>& s) {
    double sum = 0.0;
    for (const auto& pos : positions) sum += p.table[detail::subcode(s, pos, k)];
    return sum;
  });
  return Vec(Potential(U, std::move(t), k));
}

Vec Representation::ergodic_average(const FiniteSubset& F, const Vec& v) const {
  return scale(1.0 / static_cast<double>(F.size()), ergodic_sum(F, v));
}

Vec Representation::add(const Vec& a, const Vec& b) const {
  if (is_finite_dim()) return Vec(Eigen::VectorXd(a.coords() + b.coords()));
  return Vec(align_add(*local_space().shift, a.local_fn(), 1.0, b.local_fn()));
}

Vec Representation::subtract(const Vec& a, const Vec& b) const {
  if (is_finite_dim()) return Vec(Eigen::VectorXd(a.coords() - b.coords()));
  return Vec(align_add(*local_space().shift, a.local_fn(), -1.0, b.local_fn()));
}

Vec Representation::scale(double c, const Vec& v) const {
  if (is_finite_dim()) return Vec(Eigen::VectorXd(c * v.coords()));
  Potential p = v.local_fn();
  for (double& x : p.table) x *= c;
  return Vec(std::move(p));
}

Eigen::VectorXd CoboundarySpace::project_out(const Eigen::VectorXd& v) const {
  if (basis.cols() == 0) return v;
  return v - basis * (basis.transpose() * v);
}

CoboundarySpace coboundary_space(const Representation& rep,
                                 const std::vector<Eigen::VectorXd>& W,
                                 const std::vector<GroupElement>& gens) {
  if (!rep.is_finite_dim())
    throw PreconditionError("coboundary_space requires a finite-dimensional rep");
  if (W.empty() || gens.empty()) throw ConfigError("coboundary_space needs W and gens");
  CoboundarySpace U;
  for (const auto& w : W) {
    for (const auto& g : gens) {
      Eigen::VectorXd u = w - rep.operator_at(g) * w;
      U.generators.push_back({u, w, g});
    }
  }
  // Modified Gram-Schmidt in generator order; deterministic.
  const Eigen::Index dim = W.front().size();
  std::vector<Eigen::VectorXd> basis;
  for (const auto& gen : U.generators) {
    Eigen::VectorXd u = gen.vec;
    const double scale = std::max(1.0, u.norm());
    for (const auto& b : basis) u -= b.dot(u) * b;
    for (const auto& b : basis) u -= b.dot(u) * b;  // second pass for stability
    if (u.norm() > 1e-10 * scale) basis.push_back(u.normalized());
  }
  U.basis.resize(dim, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) U.basis.col(static_cast<Eigen::Index>(i)) = basis[i];
  return U;
}

CoboundarySpace full_coboundary_space(const Representation& rep) {
  const int dim = rep.finite_space().dim;
  std::vector<Eigen::VectorXd> W;
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e(i) = 1.0;
    W.push_back(e);
  }
  std::vector<GroupElement> gens;
  for (int a = 0; a < rep.group_dim(); ++a) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(rep.group_dim()), 0);
    c[static_cast<std::size_t>(a)] = 1;
    gens.push_back(GroupElement(c));
  }
  return coboundary_space(rep, W, gens);
}

namespace {

// max c.x subject to A x <= b, x >= 0, via a dense two-phase simplex with
// Bland's rule. Small instances only.
struct SimplexResult {
  double value;
  Eigen::VectorXd x;
};

SimplexResult simplex_solve(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::VectorXd c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  constexpr double kTol = 1e-11;

  // Equality form A x + s = b; flip rows with negative b and add artificials.
  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0) {
      A.row(i) *= -1.0;
      b(i) *= -1.0;
      art_rows.push_back(i);
    }
  }
  const Eigen::Index na = static_cast<Eigen::Index>(art_rows.size());
  const Eigen::Index total = n + m + na;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, total + 1);
  T.block(0, 0, m, n) = A;
  for (Eigen::Index i = 0; i < m; ++i) T(i, n + i) = 1.0;
  for (Eigen::Index k = 0; k < na; ++k) {
    const Eigen::Index i = art_rows[static_cast<std::size_t>(k)];
    T(i, n + i) = -1.0;  // flipped slack
    T(i, n + m + k) = 1.0;
  }
  T.col(total) = b;

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  for (Eigen::Index k = 0; k < na; ++k)
    basis[static_cast<std::size_t>(art_rows[static_cast<std::size_t>(k)])] = n + m + k;

  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    T.row(row) /= T(row, col);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = T(i, col);
      if (f != 0.0) T.row(i) -= f * T.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  };

  auto run_phase = [&](const Eigen::VectorXd& obj, Eigen::Index ncols) {
    while (true) {
      // Reduced costs z_j - c_j for the maximization of obj.
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        bool basic = false;
        for (auto bcol : basis)
          if (bcol == j) basic = true;
        if (basic) continue;
        double red = obj(j);
        for (Eigen::Index i = 0; i < m; ++i) red -= obj(basis[static_cast<std::size_t>(i)]) * T(i, j);
        if (red > kTol) {  // Bland: first improving index
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;  // optimal
      Eigen::Index leave = -1;
      double best_ratio = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (T(i, enter) > kTol) {
          const double ratio = T(i, total) / T(i, enter);
          if (leave < 0 || ratio < best_ratio - kTol ||
              (ratio < best_ratio + kTol && basis[static_cast<std::size_t>(i)] <
                                               basis[static_cast<std::size_t>(leave)])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
  };

  if (na > 0) {
    Eigen::VectorXd obj1 = Eigen::VectorXd::Zero(total);
    for (Eigen::Index k = 0; k < na; ++k) obj1(n + m + k) = -1.0;
    if (!run_phase(obj1, total)) throw PreconditionError("simplex: phase-1 unbounded");
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (basis[static_cast<std::size_t>(i)] >= n + m) infeas += T(i, total);
    if (infeas > 1e-8) throw PreconditionError("simplex: infeasible");
    // Pivot remaining artificials (at zero level) out of the basis.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] >= n + m) {
        for (Eigen::Index j = 0; j < n + m; ++j) {
          if (std::abs(T(i, j)) > kTol) {
            pivot(i, j);
            break;
          }
        }
      }
    }
  }

  Eigen::VectorXd obj2 = Eigen::VectorXd::Zero(total);
  obj2.head(n) = c;
  if (!run_phase(obj2, n + m)) throw PreconditionError("simplex: unbounded objective");

  SimplexResult res;
  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n) res.x(basis[static_cast<std::size_t>(i)]) = T(i, total);
  res.value = c.dot(res.x);
  return res;
}

}  // namespace

double chebyshev_distance_to_span(const Eigen::MatrixXd& B, const Eigen::VectorXd& v) {
  const Eigen::Index m = v.size();
  const Eigen::Index k = B.cols();
  if (k == 0) return v.lpNorm<Eigen::Infinity>();
  // min t  s.t.  B c - t 1 <= v,  -B c - t 1 <= -v;  c = cp - cm, all >= 0.
  const Eigen::Index n = 2 * k + 1;
  Eigen::MatrixXd A(2 * m, n);
  Eigen::VectorXd b(2 * m);
  A.block(0, 0, m, k) = B;
  A.block(0, k, m, k) = -B;
  A.block(m, 0, m, k) = -B;
  A.block(m, k, m, k) = B;
  A.col(2 * k).setConstant(-1.0);
  b.head(m) = v;
  b.tail(m) = -v;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  c(2 * k) = -1.0;  // maximize -t
  const SimplexResult res = simplex_solve(A, b, c);
  return -res.value;
}

double quotient_seminorm(const Representation& rep, const CoboundarySpace& U,
                         const Eigen::VectorXd& v) {
  if (!rep.is_finite_dim())
    throw PreconditionError("quotient_seminorm requires a finite-dimensional rep");
  if (rep.finite_space().norm == NormKind::kEuclidean) return U.project_out(v).norm();
  return chebyshev_distance_to_span(U.basis, v);
}

WeakCoboundaryReport test_weak_coboundary(const Representation& rep, const Vec& v,
                                          const FolnerSchedule& schedule, double tol) {
  WeakCoboundaryReport out;
  std::vector<ConvergenceReport::Entry> entries;
  for (auto n : schedule.points()) {
    const FiniteSubset F = schedule.set_at(n);
    entries.push_back({n, F.size(), rep.norm(rep.ergodic_average(F, v))});
  }
  TailOptions opts;
  opts.tolerance = tol;
  out.series = analyze_series(std::move(entries), opts);
  out.passed = out.series.tail_sup <= tol;
  if (rep.is_finite_dim()) {
    out.algebra_checked = true;
    out.quotient_distance = quotient_seminorm(rep, full_coboundary_space(rep), v.coords());
    const bool algebra_in = out.quotient_distance <= tol;
    out.algebra_agrees = algebra_in == out.passed;
  }
  return out;
}

}  // namespace setmaps
