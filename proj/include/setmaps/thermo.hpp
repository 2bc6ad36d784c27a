#pragma once

#include <optional>

#include "setmaps/setmap.hpp"
#include "setmaps/subshift.hpp"

namespace setmaps {

/// Computable sub-family of the invariant measures: 1D Markov chains and
/// i.i.d. products (any dimension).
class MarkovMeasure {
 public:
  MarkovMeasure() = default;  // empty placeholder; factories build real ones

  static MarkovMeasure iid(Eigen::VectorXd weights);
  /// Stationary pair (p, P); validates p P = p within 1e-12.
  static MarkovMeasure markov(Eigen::VectorXd p, Eigen::MatrixXd P);
  /// Computes the stationary distribution of an irreducible row-stochastic P.
  static MarkovMeasure from_transition(Eigen::MatrixXd P);

  bool is_iid() const { return iid_; }
  int alphabet_size() const { return static_cast<int>(p_.size()); }
  const Eigen::VectorXd& stationary() const { return p_; }
  const Eigen::MatrixXd& transition() const;

  /// -sum p_i P_ij log P_ij for chains, -sum p_a log p_a for products.
  double entropy_rate() const;

  /// Exact cylinder probability; gaps in a 1D Markov support are summed out
  /// by the forward algorithm.
  double pattern_probability(const Subshift& X, const Pattern& w) const;

  /// Rejects measures whose support leaves the subshift (Markov chains with
  /// mass on forbidden transitions; i.i.d. products on proper SFTs).
  void validate_support(const Subshift& X) const;

 private:
  bool iid_ = true;
  Eigen::VectorXd p_;
  Eigen::MatrixXd P_;
};

/// log of the partition function Z_F(phi) = sum over X_F of exp(cylinder sup
/// of phi(F)); computed by grouped enumeration with running rescaling.
double log_partition_function(const Subshift& X, const SetMap& phi, const FiniteSubset& F,
                              std::uint64_t cap = kDefaultPatternCap);
double partition_function(const Subshift& X, const SetMap& phi, const FiniteSubset& F,
                          std::uint64_t cap = kDefaultPatternCap);

enum class PressureMethod { kEnumeration, kTransferMatrix };

struct PressureEstimate {
  ConvergenceReport series;  // (n, |F_n|, log Z / |F_n|) by enumeration
  std::optional<ConvergenceReport> transfer_series;  // same, via the transfer matrix
  double limit_estimate = 0.0;
  PressureMethod method = PressureMethod::kEnumeration;
  std::optional<double> log_spectral_radius;
  bool methods_agree = true;  // within 1e-9 on every n where both ran
  bool stabilized = false;
  /// 2D (and non-interval SFT) enumerations count locally admissible
  /// patterns, an upper bound on |X_F|; the estimate is labeled accordingly.
  bool locally_admissible_bound = false;
};

PressureEstimate pressure(const Subshift& X, const SetMap& phi, const FolnerSchedule& schedule,
                          std::uint64_t cap = kDefaultPatternCap);

struct PressureTransferReport {
  RealizationResult realization;
  PressureEstimate pressure_phi;
  PressureEstimate pressure_realized;
  std::vector<double> eps_series;  // ||phi(F)/|F| - A_F v||_inf per window point
  std::vector<double> gap_series;  // |log Z_F(phi) - log Z_F(S v)| / |F|
  bool sandwich_ok = false;        // gap_n <= eps_n pointwise
};

/// Realizes phi and checks the pointwise pressure sandwich between phi and
/// its additive realization.
PressureTransferReport pressure_of_realization(const Subshift& X, const SetMap& phi,
                                               const FolnerSchedule& schedule,
                                               const SolverOptions& opts = {},
                                               std::uint64_t cap = kDefaultPatternCap);

struct EntropyReport {
  ConvergenceReport series;  // H_mu(F_n) / |F_n|
  double closed_form = 0.0;  // entropy rate
};

EntropyReport ks_entropy(const Subshift& X, const MarkovMeasure& mu,
                         const FolnerSchedule& schedule);

/// integral of a locally constant function against mu.
double integral_of_potential(const Subshift& X, const Potential& f, const MarkovMeasure& mu,
                             std::uint64_t cap = std::uint64_t{1} << 18);

struct IntegralReport {
  ConvergenceReport series;  // integral of phi(F_n) d mu / |F_n|
  std::optional<double> realized_integral;
};

IntegralReport integral_of_setmap(const Subshift& X, const SetMap& phi, const MarkovMeasure& mu,
                                  const FolnerSchedule& schedule,
                                  const std::optional<Potential>& realized = std::nullopt,
                                  std::uint64_t cap = std::uint64_t{1} << 18);

struct EquilibriumResult {
  MarkovMeasure measure;
  double pressure = 0.0;  // log of the Perron root
  double certificate_gap = 0.0;  // |h + integral - pressure|
  Eigen::VectorXd perron_right;
  double lambda = 0.0;
};

/// Ruelle transfer-matrix Gibbs construction for a 1D nearest-neighbor SFT
/// and a potential with window inside {0, 1}; requires irreducibility.
EquilibriumResult equilibrium_state_1d(const Subshift& X, const Potential& phi);

enum class MeasureFamily { kBernoulli, kMarkov };

struct VariationalOptions {
  double bernoulli_step = 1e-4;
  int markov_restarts = 20;
  int markov_iterations = 300;
  std::uint64_t seed = 12345;
  double one_sided_tol = 1e-9;
  double certificate_tol = 1e-6;
  SolverOptions solver;
};

struct VariationalReport {
  double pressure_estimate = 0.0;
  double family_sup = 0.0;
  MarkovMeasure argmax;
  double gap = 0.0;           // pressure - family sup (>= -one_sided_tol)
  bool one_sided_ok = false;  // no family member exceeded the pressure
  bool certificate_ok = false;
  double argmax_integral = 0.0;       // integral of realized potential at argmax
  double argmax_series_integral = 0.0;  // tail of the set-map integral series
};

/// Variational-principle certificate: sup over the family of h(mu) plus the
/// limit of the normalized integrals, compared against the pressure.
VariationalReport variational_certificate(const Subshift& X, const SetMap& phi,
                                          MeasureFamily family, const FolnerSchedule& schedule,
                                          const VariationalOptions& opts = {});

namespace detail {
/// Lifts a potential with window inside {0, 1} to the pair table t(i, j),
/// and builds M_ij = A_ij exp(t(i, j)) plus the boundary column
/// c_j = max_{a : A_{ja} = 1} exp(t(j, a)).
struct TransferData {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
  Eigen::MatrixXd t;
};
std::optional<TransferData> transfer_data(const Subshift& X, const Potential& phi);

/// log(1^T M^{L-1} c), rescaled.
double transfer_log_partition(const TransferData& td, std::size_t L);

/// Perron root and right eigenvector of a nonnegative irreducible matrix
/// (power iteration on M + I; deterministic uniform start, tol 1e-13).
std::pair<double, Eigen::VectorXd> perron(const Eigen::MatrixXd& M);
}  // namespace detail

}  // namespace setmaps
