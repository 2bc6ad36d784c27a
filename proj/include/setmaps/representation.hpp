#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "setmaps/group.hpp"
#include "setmaps/subshift.hpp"

namespace setmaps {

enum class NormKind { kEuclidean, kSup };

struct FiniteDimSpace {
  int dim;
  NormKind norm;
};

/// Locally constant functions on a subshift with the uniform norm. The
/// window is the coordinate chart used by solvers; vectors produced by
/// ergodic sums may live on larger windows.
struct LocallyConstantSpace {
  std::shared_ptr<const Subshift> shift;
  FiniteSubset window;
};

using SpaceModel = std::variant<FiniteDimSpace, LocallyConstantSpace>;

/// A vector of one of the two concrete space kinds.
class Vec {
 public:
  Vec() : data_(Eigen::VectorXd()) {}
  explicit Vec(Eigen::VectorXd v) : data_(std::move(v)) {}
  explicit Vec(Potential p) : data_(std::move(p)) {}

  bool is_finite_dim() const { return std::holds_alternative<Eigen::VectorXd>(data_); }
  const Eigen::VectorXd& coords() const { return std::get<Eigen::VectorXd>(data_); }
  Eigen::VectorXd& coords() { return std::get<Eigen::VectorXd>(data_); }
  const Potential& local_fn() const { return std::get<Potential>(data_); }
  Potential& local_fn() { return std::get<Potential>(data_); }

 private:
  std::variant<Eigen::VectorXd, Potential> data_;
};

/// Uniformly bounded representation pi: Z^d -> Isom(V) on a concrete space:
/// commuting invertible matrices on R^m, or the Koopman action on locally
/// constant functions (pi(g) phi (x) = phi(g^{-1} x), an isometry).
class Representation {
 public:
  /// Matrix rep from one generator matrix per group dimension. Matrices must
  /// be invertible and commute.
  static Representation matrix(std::vector<Eigen::MatrixXd> generators, NormKind norm);
  static Representation identity(int group_dim, int space_dim,
                                 NormKind norm = NormKind::kEuclidean);
  static Representation koopman(std::shared_ptr<const Subshift> shift, FiniteSubset window);

  const SpaceModel& space() const { return space_; }
  bool is_finite_dim() const { return std::holds_alternative<FiniteDimSpace>(space_); }
  const FiniteDimSpace& finite_space() const { return std::get<FiniteDimSpace>(space_); }
  const LocallyConstantSpace& local_space() const { return std::get<LocallyConstantSpace>(space_); }
  int group_dim() const { return group_dim_; }

  /// C_pi. Exact 1 for Koopman; for matrix reps, the max operator norm over
  /// words of length <= 8 in the generators, a lower bound.
  double uniform_bound() const { return c_pi_; }
  bool uniform_bound_is_estimate() const { return c_pi_estimated_; }

  double norm(const Vec& v) const;
  Vec zero() const;
  Vec apply(const GroupElement& g, const Vec& v) const;  // pi(g) v
  Vec ergodic_sum(const FiniteSubset& F, const Vec& v) const;
  Vec ergodic_average(const FiniteSubset& F, const Vec& v) const;

  /// Finite-dimensional pi(g) as a matrix.
  Eigen::MatrixXd operator_at(const GroupElement& g) const;
  Eigen::MatrixXd sum_operator(const FiniteSubset& F) const;
  Eigen::MatrixXd average_operator(const FiniteSubset& F) const;

  Vec add(const Vec& a, const Vec& b) const;
  Vec subtract(const Vec& a, const Vec& b) const;
  Vec scale(double c, const Vec& v) const;

 private:
  Representation() = default;
  void estimate_uniform_bound();

  SpaceModel space_ = FiniteDimSpace{0, NormKind::kEuclidean};
  int group_dim_ = 1;
  std::vector<Eigen::MatrixXd> gens_;
  std::vector<Eigen::MatrixXd> gen_invs_;
  double c_pi_ = 1.0;
  bool c_pi_estimated_ = false;
};

/// Uniform norm of a locally constant function: max |value| over the locally
/// admissible patterns of its window (exact on full shifts and 1D intervals).
double uniform_norm(const Subshift& X, const Potential& f);

/// Aligns two locally constant functions to a common window and combines.
Potential align_add(const Subshift& X, const Potential& a, double cb, const Potential& b);

/// Span of {w - pi(g) w : w in W, g in gens}, with provenance, plus a
/// deterministically orthonormalized basis. Finite-dimensional reps only.
struct CoboundarySpace {
  struct Generator {
    Eigen::VectorXd vec;  // w - pi(g) w
    Eigen::VectorXd w;
    GroupElement g;
  };
  std::vector<Generator> generators;
  Eigen::MatrixXd basis;  // orthonormal columns; 0 columns for the zero space

  int rank() const { return static_cast<int>(basis.cols()); }
  /// Euclidean projection onto the orthogonal complement of the span.
  Eigen::VectorXd project_out(const Eigen::VectorXd& v) const;
};

CoboundarySpace coboundary_space(const Representation& rep,
                                 const std::vector<Eigen::VectorXd>& W,
                                 const std::vector<GroupElement>& gens);

/// L for W = standard basis and gens = the group generators of Z^d; equals
/// the closure of the coboundary space in finite dimensions.
CoboundarySpace full_coboundary_space(const Representation& rep);

/// ||v + U||_U = inf_{u in U} ||v + u||. Orthogonal projection for the
/// euclidean norm; a small Chebyshev linear program for the sup norm.
double quotient_seminorm(const Representation& rep, const CoboundarySpace& U,
                         const Eigen::VectorXd& v);

/// min_c ||v - B c||_inf via a dense two-phase simplex. Exposed for tests.
double chebyshev_distance_to_span(const Eigen::MatrixXd& B, const Eigen::VectorXd& v);

struct WeakCoboundaryReport {
  bool passed = false;              // tail-sup estimate of ||A_F v|| <= tol
  ConvergenceReport series;         // ||A_{F_n} v|| along the schedule
  double quotient_distance = 0.0;   // distance to the full coboundary space
  bool algebra_checked = false;     // cross-check ran (finite-dim only)
  bool algebra_agrees = true;
};

/// Weak-coboundary test: v is a weak coboundary iff limsup ||A_F v|| = 0;
/// cross-checked against the quotient seminorm when finite-dimensional.
WeakCoboundaryReport test_weak_coboundary(const Representation& rep, const Vec& v,
                                          const FolnerSchedule& schedule, double tol);

}  // namespace setmaps
