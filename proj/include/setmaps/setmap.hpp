#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "setmaps/group.hpp"
#include "setmaps/representation.hpp"

namespace setmaps {

/// |KF delta F|, the unnormalized boundary count.
std::size_t boundary_count(const FiniteSubset& K, const FiniteSubset& F);

/// Bounded G-equivariant set map phi: F(G) -> V, stored as generator data
/// plus an evaluation rule. Built-in rules are equivariant by construction
/// (boundary_perturbed requires a pi-fixed bump vector for that to hold).
class SetMap {
 public:
  using Evaluator = std::function<Vec(const FiniteSubset&)>;

  struct Additive {
    Vec v;
  };
  struct AdditiveSequence {
    std::function<Vec(std::size_t)> v_of_size;  // size |F| -> generator
  };
  struct BoundaryPerturbed {
    Vec v;
    Vec u;
    FiniteSubset K;
  };
  struct Stitched {
    std::vector<InvariancePair> pairs;                    // strictly increasing
    std::vector<std::shared_ptr<const SetMap>> pieces;    // pieces.size() == pairs.size() + 1
  };
  struct Custom {
    Evaluator fn;
    std::string label;
  };
  using Rule = std::variant<Additive, AdditiveSequence, BoundaryPerturbed, Stitched, Custom>;

  static SetMap additive(Representation rep, Vec v);
  static SetMap additive_sequence(Representation rep, std::function<Vec(std::size_t)> v_of_size);
  static SetMap boundary_perturbed(Representation rep, Vec v, Vec u, FiniteSubset K);
  static SetMap custom(Representation rep, Evaluator fn, std::string label = "custom");

  Vec eval(const FiniteSubset& F) const;  // phi(F)
  const Representation& rep() const { return rep_; }
  const Rule& rule() const { return rule_; }

 private:
  SetMap(Representation rep, Rule rule) : rep_(std::move(rep)), rule_(std::move(rule)) {}

  friend SetMap stitch(std::vector<std::shared_ptr<const SetMap>> pieces,
                       std::vector<InvariancePair> pairs);

  Representation rep_;
  Rule rule_;
};

/// phi = sum_n 1_{I_n} phi_n over the invariance-level partition induced by
/// the pairs: level n holds the sets (K_n, delta_n)-invariant but not
/// (K_{n+1}, delta_{n+1})-invariant; level 0 the sets invariant for no pair.
/// pieces[n] serves level n, so pieces.size() must equal pairs.size() + 1.
SetMap stitch(std::vector<std::shared_ptr<const SetMap>> pieces,
              std::vector<InvariancePair> pairs);

/// Invariance level of F for the given pairs (largest n with F at level n).
std::size_t stitch_level(const std::vector<InvariancePair>& pairs, const FiniteSubset& F);

struct EquivarianceReport {
  double max_defect = 0.0;  // max ||phi(g.F) - pi(g) phi(F)|| / |F|
  bool passed = false;      // max_defect <= 1e-9
  std::size_t samples = 0;
};

EquivarianceReport check_equivariance(const SetMap& phi, const FolnerSchedule& schedule,
                                      std::size_t samples = 32, std::uint64_t seed = 1);

/// Window estimate of sup_F ||phi(F)|| / |F| (includes sampled translates).
double vert_sup(const SetMap& phi, const FolnerSchedule& schedule);

/// Series ||phi(F_n)|| / |F_n| with tail-sup estimate: single-schedule
/// stand-in for the asymptotic semi-norm.
ConvergenceReport vert_g(const SetMap& phi, const FolnerSchedule& schedule);

struct SolverOptions {
  int iteration_cap = 10000;   // subgradient + polish evaluations
  double solver_tol = 1e-3;    // J-optimality the solver is trusted to
  double tail_fraction = 0.25;
};

struct AdditivityResult {
  bool passed = false;
  Vec best;
  double gap = 0.0;                  // minimized J over the window tail
  ConvergenceReport residual_series;  // residuals at `best` over the window
};

/// Minimizes J(v) = max over the window tail of ||phi(F_n)/|F_n| - A_{F_n} v||
/// (convex) by deterministic subgradient descent from v0 = phi({1_G}).
AdditivityResult test_asymptotically_additive(const SetMap& phi, const FolnerSchedule& schedule,
                                              double tol, const SolverOptions& opts = {});

struct RealizationResult {
  Vec v;                          // quotient-orthogonal representative
  ConvergenceReport residual_series;
  double residual_estimate = 0.0;  // tail-sup of the residual series
  std::vector<std::pair<double, Vec>> epsilon_schedule;  // (achieved eps, approximant)
  bool cauchy_ok = false;
};

/// Additive realization following the dyadic-approximant construction:
/// epsilon-level minimizers on shrinking window tails, Cauchy-checked in the
/// coboundary quotient, with the stable component refined by a 1/|F| fit of
/// the projected value series.
RealizationResult realize(const SetMap& phi, const FolnerSchedule& schedule,
                          std::vector<double> eps_levels = {}, const SolverOptions& opts = {});

struct MembershipReport {
  bool member = false;        // quotient distance to the realized class <= tol
  bool direct_member = false;  // residual series at the candidate also small
  bool agree = true;
  double quotient_distance = 0.0;
  double residual_tail = 0.0;
};

MembershipReport realization_set_membership(const SetMap& phi, const RealizationResult& realized,
                                            const Vec& candidate, const FolnerSchedule& schedule,
                                            double tol, const SolverOptions& opts = {});

/// Target set W for relative asymptotic additivity.
struct SubsetDescriptor {
  enum class Kind { kSubspace, kAffine, kFiniteList };
  Kind kind = Kind::kSubspace;
  Eigen::MatrixXd basis;   // columns span the subspace / affine directions
  Eigen::VectorXd point;   // affine base point
  std::vector<Vec> list;   // finite list

  static SubsetDescriptor subspace(Eigen::MatrixXd basis);
  static SubsetDescriptor affine(Eigen::VectorXd point, Eigen::MatrixXd basis);
  static SubsetDescriptor finite_list(std::vector<Vec> list);
};

struct RelativeResult {
  bool passed = false;
  Vec best;
  double gap = 0.0;
};

/// J minimized over w constrained to W (projected subgradient for subspaces
/// and affine sets, exhaustive for finite lists). Finite-dimensional reps.
RelativeResult test_relative_aa(const SetMap& phi, const SubsetDescriptor& W,
                                const FolnerSchedule& schedule, double tol,
                                const SolverOptions& opts = {});

enum class DichotomyCase { kB1, kB2, kOutOfHypothesis };

struct DichotomyResult {
  DichotomyCase verdict = DichotomyCase::kOutOfHypothesis;
  Vec witness;                      // w in W for B1; realized v for B2
  double relative_gap = 0.0;        // J gap of the relative test
  double membership_residual = 0.0; // lsq distance of realized v to W + L
  bool flagged_inconsistent = false; // B2 for a subspace W in finite dims
};

/// B1/B2 dichotomy for subspace targets: realizes phi and decides membership
/// of the realized class in W + L by linear algebra. `tol` bounds the
/// linear-algebra membership residual; `hypothesis_tol` gates the
/// relative-additivity hypothesis (its gap is O(1/n) on finite windows even
/// for maps that satisfy the hypothesis exactly).
DichotomyResult dichotomy_classify(const SetMap& phi, const Eigen::MatrixXd& W_basis,
                                   const FolnerSchedule& schedule, double tol,
                                   double hypothesis_tol = 0.1, const SolverOptions& opts = {});

}  // namespace setmaps
