#include "setmaps/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "setmaps/errors.hpp"

namespace setmaps {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }
}  // namespace

MarkovMeasure MarkovMeasure::iid(Eigen::VectorXd weights) {
  if (weights.size() == 0) throw ConfigError("i.i.d. weights must be non-empty");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) < 0) throw ConfigError("i.i.d. weights must be nonnegative");
    sum += weights(i);
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("i.i.d. weights must sum to 1");
  MarkovMeasure mu;
  mu.iid_ = true;
  mu.p_ = std::move(weights);
  return mu;
}

MarkovMeasure MarkovMeasure::markov(Eigen::VectorXd p, Eigen::MatrixXd P) {
  const Eigen::Index k = p.size();
  if (P.rows() != k || P.cols() != k) throw ConfigError("transition matrix size mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (p(i) < -1e-15) throw ConfigError("stationary distribution must be nonnegative");
    sum += p(i);
    double row = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (P(i, j) < -1e-15) throw ConfigError("transition matrix must be nonnegative");
      row += P(i, j);
    }
    if (std::abs(row - 1.0) > 1e-10) throw ConfigError("transition matrix must be row-stochastic");
  }
  if (std::abs(sum - 1.0) > 1e-10) throw ConfigError("stationary distribution must sum to 1");
  if ((p.transpose() * P - p.transpose()).lpNorm<Eigen::Infinity>() > 1e-12)
    throw ConfigError("p P = p fails beyond 1e-12");
  MarkovMeasure mu;
  mu.iid_ = false;
  mu.p_ = std::move(p);
  mu.P_ = std::move(P);
  return mu;
}

MarkovMeasure MarkovMeasure::from_transition(Eigen::MatrixXd P) {
  const Eigen::Index k = P.rows();
  if (P.cols() != k || k == 0) throw ConfigError("transition matrix must be square");
  // Damped power iteration on P^T; the lazy chain is aperiodic, the
  // stationary vector is unchanged.
  Eigen::VectorXd p = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd next = 0.5 * (P.transpose() * p) + 0.5 * p;
    next /= next.sum();
    const double delta = (next - p).lpNorm<Eigen::Infinity>();
    p = next;
    if (delta < 1e-15) break;
  }
  // Clean tiny negatives and renormalize before validation.
  for (Eigen::Index i = 0; i < k; ++i) p(i) = std::max(p(i), 0.0);
  p /= p.sum();
  return markov(std::move(p), std::move(P));
}

const Eigen::MatrixXd& MarkovMeasure::transition() const {
  if (iid_) throw PreconditionError("i.i.d. measure has no transition matrix");
  return P_;
}

double MarkovMeasure::entropy_rate() const {
  if (iid_) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p_.size(); ++i) h -= xlogx(p_(i));
    return h;
  }
  double h = 0.0;
  for (Eigen::Index i = 0; i < p_.size(); ++i)
    for (Eigen::Index j = 0; j < p_.size(); ++j) h -= p_(i) * xlogx(P_(i, j));
  return h;
}

double MarkovMeasure::pattern_probability(const Subshift& X, const Pattern& w) const {
  if (iid_) {
    double prob = 1.0;
    for (int s : w.symbols) prob *= p_(s);
    return prob;
  }
  if (X.dimension() != 1)
    throw PreconditionError("Markov chain probabilities require dimension 1");
  // Forward algorithm across the hull; gaps are summed out.
  const auto& sites = w.support.elements();
  const std::int64_t lo = sites.front()[0];
  const std::int64_t hi = sites.back()[0];
  const Eigen::Index k = p_.size();
  Eigen::VectorXd alpha = p_;
  std::size_t next_site = 0;
  auto clamp_to = [&](std::int64_t pos) {
    if (next_site < sites.size() && sites[next_site][0] == pos) {
      const int s = w.symbols[next_site];
      for (Eigen::Index i = 0; i < k; ++i)
        if (i != s) alpha(i) = 0.0;
      ++next_site;
    }
  };
  clamp_to(lo);
  for (std::int64_t pos = lo + 1; pos <= hi; ++pos) {
    alpha = (alpha.transpose() * P_).transpose();
    clamp_to(pos);
  }
  return alpha.sum();
}

void MarkovMeasure::validate_support(const Subshift& X) const {
  if (alphabet_size() != X.alphabet_size())
    throw ConfigError("measure alphabet size does not match the subshift");
  if (iid_) {
    if (!X.is_full())
      throw ConfigError("i.i.d. product measures are supported on full shifts only");
    return;
  }
  if (X.dimension() != 1) throw ConfigError("Markov measures require dimension 1");
  for (int i = 0; i < alphabet_size(); ++i)
    for (int j = 0; j < alphabet_size(); ++j)
      if (P_(i, j) > 1e-15 && !X.allows(0, i, j))
        throw ConfigError("Markov measure puts mass on a forbidden transition");
}

namespace {

struct LogSum {
  double max = kNegInf;
  double sum = 0.0;  // sum of exp(value - max)
  std::uint64_t count = 0;

  void add(double value) {
    ++count;
    if (value == kNegInf) return;
    if (value > max) {
      sum = max == kNegInf ? 1.0 : sum * std::exp(max - value) + 1.0;
      max = value;
    } else {
      sum += std::exp(value - max);
    }
  }

  double log_value() const {
    if (max == kNegInf) return kNegInf;
    return max + std::log(sum);
  }

  double value() const {
    if (max == kNegInf) return 0.0;
    return std::exp(max) * sum;  // exact when max = 0 (counting case)
  }
};

}  // namespace

namespace {

LogSum partition_sum(const Subshift& X, const SetMap& phi, const FiniteSubset& F,
                     std::uint64_t cap) {
  if (phi.rep().is_finite_dim())
    throw PreconditionError("partition function needs a set map over locally constant functions");
  const Potential phiF = phi.eval(F).local_fn();
  const FiniteSubset joint = set_union(F, phiF.window);
  const auto pos_f = detail::subindex(joint, phiF.window);
  const auto pos_F = detail::subindex(joint, F);
  const int k = X.alphabet_size();

  // Grouped enumeration: completions of each F-pattern arrive consecutively,
  // so the cylinder sup is folded on the fly.
  LogSum Z;
  bool have_current = false;
  std::uint64_t current_code = 0;
  double current_sup = kNegInf;
  for_each_pattern_grouped(
      X, joint, F,
      [&](const std::vector<int>& s) {
        const std::uint64_t code = detail::subcode(s, pos_F, k);
        if (!have_current || code != current_code) {
          if (have_current) Z.add(current_sup);
          have_current = true;
          current_code = code;
          current_sup = kNegInf;
        }
        current_sup = std::max(current_sup, phiF.table[detail::subcode(s, pos_f, k)]);
      },
      cap);
  if (have_current) Z.add(current_sup);
  return Z;
}

}  // namespace

double log_partition_function(const Subshift& X, const SetMap& phi, const FiniteSubset& F,
                              std::uint64_t cap) {
  return partition_sum(X, phi, F, cap).log_value();
}

double partition_function(const Subshift& X, const SetMap& phi, const FiniteSubset& F,
                          std::uint64_t cap) {
  return partition_sum(X, phi, F, cap).value();
}

namespace detail {

std::optional<TransferData> transfer_data(const Subshift& X, const Potential& phi) {
  if (X.dimension() != 1) return std::nullopt;
  const int k = X.alphabet_size();
  const GroupElement zero{0}, one{1};
  for (const auto& g : phi.window.elements())
    if (!(g == zero || g == one)) return std::nullopt;

  // Lift the table to the pair window {0, 1}.
  Eigen::MatrixXd t(k, k);
  const FiniteSubset pair_w(std::vector<GroupElement>{zero, one});
  const auto pos = [&]() -> std::vector<std::size_t> {
    std::vector<std::size_t> out;
    for (const auto& g : phi.window.elements()) out.push_back(*pair_w.index_of(g));
    return out;
  }();
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      std::vector<int> pairsym{i, j};
      std::uint64_t code = 0;
      for (std::size_t p : pos)
        code = code * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(pairsym[p]);
      t(i, j) = phi.table[code];
    }
  }

  TransferData td;
  td.t = t;
  td.M.resize(k, k);
  td.c.resize(k);
  for (int i = 0; i < k; ++i) {
    double best = kNegInf;
    for (int j = 0; j < k; ++j) {
      td.M(i, j) = X.allows(0, i, j) ? std::exp(t(i, j)) : 0.0;
      if (X.allows(0, i, j)) best = std::max(best, t(i, j));
    }
    td.c(i) = best == kNegInf ? 0.0 : std::exp(best);
  }
  return td;
}

double transfer_log_partition(const TransferData& td, std::size_t L) {
  if (L == 0) throw ConfigError("partition function needs a non-empty set");
  Eigen::VectorXd y = td.c;
  double logscale = 0.0;
  for (std::size_t step = 1; step < L; ++step) {
    y = td.M * y;
    const double m = y.maxCoeff();
    if (m <= 0.0) return kNegInf;
    y /= m;
    logscale += std::log(m);
  }
  return logscale + std::log(y.sum());
}

std::pair<double, Eigen::VectorXd> perron(const Eigen::MatrixXd& M) {
  const Eigen::Index k = M.rows();
  // Power iteration on M + I: primitive whenever M is irreducible, same
  // Perron vector, root shifted by one.
  Eigen::VectorXd x = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd y = M * x + x;
    const double norm1 = y.lpNorm<1>();
    if (norm1 <= 0) throw PreconditionError("transfer matrix is not irreducible");
    y /= norm1;
    const double delta = (y - x).lpNorm<Eigen::Infinity>();
    lambda = norm1 - 1.0;
    x = y;
    if (delta < 1e-13 && it > 3) break;
  }
  return {lambda, x};
}

}  // namespace detail

namespace {

// Transfer route applies to additive maps whose generating potential has
// window inside {0, 1} on a 1D shift, evaluated on interval windows.
std::optional<detail::TransferData> transfer_for(const Subshift& X, const SetMap& phi) {
  if (phi.rep().is_finite_dim()) return std::nullopt;
  const auto* additive = std::get_if<SetMap::Additive>(&phi.rule());
  if (!additive) return std::nullopt;
  return detail::transfer_data(X, additive->v.local_fn());
}

bool is_interval(const FiniteSubset& F) {
  if (F.dim() != 1) return false;
  const auto& e = F.elements();
  for (std::size_t i = 1; i < e.size(); ++i)
    if (e[i][0] != e[i - 1][0] + 1) return false;
  return true;
}

}  // namespace

PressureEstimate pressure(const Subshift& X, const SetMap& phi, const FolnerSchedule& schedule,
                          std::uint64_t cap) {
  PressureEstimate out;
  const auto td = transfer_for(X, phi);

  std::vector<ConvergenceReport::Entry> entries;
  std::vector<ConvergenceReport::Entry> transfer_entries;
  for (auto n : schedule.points()) {
    const FiniteSubset F = schedule.set_at(n);
    const double volume = static_cast<double>(F.size());
    const double logZ = log_partition_function(X, phi, F, cap);
    entries.push_back({n, F.size(), logZ / volume});
    if (td && is_interval(F))
      transfer_entries.push_back({n, F.size(), detail::transfer_log_partition(*td, F.size()) / volume});
    if (!enumeration_is_exact(X, F)) out.locally_admissible_bound = true;
  }
  out.series = analyze_series(entries);
  out.stabilized = out.series.stabilized;

  if (td) {
    const auto [lambda, vec] = detail::perron(td->M);
    (void)vec;
    out.log_spectral_radius = std::log(lambda);
    out.method = PressureMethod::kTransferMatrix;
    out.limit_estimate = *out.log_spectral_radius;
    if (!transfer_entries.empty()) {
      out.transfer_series = analyze_series(transfer_entries);
      for (std::size_t i = 0, j = 0; i < entries.size() && j < transfer_entries.size(); ++i) {
        if (entries[i].n != transfer_entries[j].n) continue;
        if (std::abs(entries[i].value - transfer_entries[j].value) > 1e-9)
          out.methods_agree = false;
        ++j;
      }
    }
  } else {
    out.method = PressureMethod::kEnumeration;
    out.limit_estimate = out.series.extrapolated_limit;
  }
  return out;
}

PressureTransferReport pressure_of_realization(const Subshift& X, const SetMap& phi,
                                               const FolnerSchedule& schedule,
                                               const SolverOptions& opts, std::uint64_t cap) {
  PressureTransferReport out;
  out.realization = realize(phi, schedule, {}, opts);
  const Representation& rep = phi.rep();
  const SetMap realized = SetMap::additive(rep, out.realization.v);

  out.pressure_phi = pressure(X, phi, schedule, cap);
  out.pressure_realized = pressure(X, realized, schedule, cap);

  out.sandwich_ok = true;
  std::size_t i = 0;
  for (auto n : schedule.points()) {
    const FiniteSubset F = schedule.set_at(n);
    const double volume = static_cast<double>(F.size());
    const Vec diff = rep.subtract(rep.scale(1.0 / volume, phi.eval(F)),
                                  rep.ergodic_average(F, out.realization.v));
    const double eps = rep.norm(diff);
    const double gap =
        std::abs(out.pressure_phi.series.series[i].value - out.pressure_realized.series.series[i].value);
    out.eps_series.push_back(eps);
    out.gap_series.push_back(gap);
    if (gap > eps + 1e-9) out.sandwich_ok = false;
    ++i;
  }
  return out;
}

EntropyReport ks_entropy(const Subshift& X, const MarkovMeasure& mu,
                         const FolnerSchedule& schedule) {
  mu.validate_support(X);
  EntropyReport out;
  out.closed_form = mu.entropy_rate();
  std::vector<ConvergenceReport::Entry> entries;
  const double h_site = [&] {  // Shannon entropy of one site
    double h = 0.0;
    for (Eigen::Index i = 0; i < mu.stationary().size(); ++i) h -= xlogx(mu.stationary()(i));
    return h;
  }();
  for (auto n : schedule.points()) {
    const FiniteSubset F = schedule.set_at(n);
    const double volume = static_cast<double>(F.size());
    double H = 0.0;
    if (mu.is_iid()) {
      H = volume * h_site;  // independence makes the block entropy exact
    } else if (is_interval(F)) {
      H = h_site + (volume - 1.0) * mu.entropy_rate();  // chain rule
    } else {
      const double count = count_patterns(X, F, std::uint64_t{1} << 18);
      if (count > static_cast<double>(std::uint64_t{1} << 18))
        throw CapacityError("entropy enumeration too large on a non-interval support");
      for_each_pattern(
          X, F,
          [&](const std::vector<int>& s) {
            H -= xlogx(mu.pattern_probability(X, Pattern(F, s)));
          },
          std::uint64_t{1} << 18);
    }
    entries.push_back({n, F.size(), H / volume});
  }
  out.series = analyze_series(std::move(entries));
  return out;
}

double integral_of_potential(const Subshift& X, const Potential& f, const MarkovMeasure& mu,
                             std::uint64_t cap) {
  mu.validate_support(X);
  const int k = X.alphabet_size();
  double total = 0.0;
  for_each_pattern(
      X, f.window,
      [&](const std::vector<int>& s) {
        const Pattern w(f.window, s);
        total += mu.pattern_probability(X, w) * f.table[pattern_code(w, k)];
      },
      cap);
  return total;
}

IntegralReport integral_of_setmap(const Subshift& X, const SetMap& phi, const MarkovMeasure& mu,
                                  const FolnerSchedule& schedule,
                                  const std::optional<Potential>& realized, std::uint64_t cap) {
  mu.validate_support(X);
  IntegralReport out;
  std::vector<ConvergenceReport::Entry> entries;
  for (auto n : schedule.points()) {
    const FiniteSubset F = schedule.set_at(n);
    const Potential phiF = phi.eval(F).local_fn();
    entries.push_back(
        {n, F.size(), integral_of_potential(X, phiF, mu, cap) / static_cast<double>(F.size())});
  }
  out.series = analyze_series(std::move(entries));
  if (realized) out.realized_integral = integral_of_potential(X, *realized, mu, cap);
  return out;
}

EquilibriumResult equilibrium_state_1d(const Subshift& X, const Potential& phi) {
  if (X.dimension() != 1)
    throw PreconditionError("equilibrium_state_1d requires a one-dimensional subshift");
  if (!X.irreducible())
    throw PreconditionError("transfer matrix is reducible; the Perron vector is not unique");
  const auto td = detail::transfer_data(X, phi);
  if (!td) throw PreconditionError("potential window must be inside {0, 1}");

  const auto [lambda, r] = detail::perron(td->M);
  const auto [lambda_left, l] = detail::perron(Eigen::MatrixXd(td->M.transpose()));
  (void)lambda_left;
  const int k = X.alphabet_size();

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) P(i, j) = td->M(i, j) * r(j) / (lambda * r(i));
  Eigen::VectorXd p(k);
  for (int i = 0; i < k; ++i) p(i) = l(i) * r(i);
  p /= p.sum();

  EquilibriumResult out{MarkovMeasure::markov(p, P), std::log(lambda), 0.0, r, lambda};
  double integral = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) integral += p(i) * P(i, j) * td->t(i, j);
  out.certificate_gap = std::abs(out.measure.entropy_rate() + integral - out.pressure);
  return out;
}

namespace {

// Objective h(mu) + integral of the realized potential.
double family_objective(const Subshift& X, const MarkovMeasure& mu, const Potential& realized) {
  return mu.entropy_rate() + integral_of_potential(X, realized, mu);
}

// Row-wise softmax over the allowed transitions.
Eigen::MatrixXd softmax_rows(const Subshift& X, const Eigen::MatrixXd& theta) {
  const int k = X.alphabet_size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    double mx = kNegInf;
    for (int j = 0; j < k; ++j)
      if (X.allows(0, i, j)) mx = std::max(mx, theta(i, j));
    double denom = 0.0;
    for (int j = 0; j < k; ++j)
      if (X.allows(0, i, j)) denom += std::exp(theta(i, j) - mx);
    for (int j = 0; j < k; ++j)
      if (X.allows(0, i, j)) P(i, j) = std::exp(theta(i, j) - mx) / denom;
  }
  return P;
}

}  // namespace

VariationalReport variational_certificate(const Subshift& X, const SetMap& phi,
                                          MeasureFamily family, const FolnerSchedule& schedule,
                                          const VariationalOptions& opts) {
  VariationalReport out;
  const PressureEstimate pe = pressure(X, phi, schedule);
  out.pressure_estimate = pe.limit_estimate;

  const RealizationResult realized = realize(phi, schedule, {}, opts.solver);
  const Potential& pot = realized.v.local_fn();

  double best = kNegInf;
  std::optional<MarkovMeasure> argmax;
  bool one_sided = true;
  auto consider = [&](const MarkovMeasure& mu) {
    const double value = family_objective(X, mu, pot);
    if (value > out.pressure_estimate + opts.one_sided_tol) one_sided = false;
    if (value > best) {
      best = value;
      argmax = mu;
    }
  };

  if (family == MeasureFamily::kBernoulli) {
    if (X.alphabet_size() != 2)
      throw ConfigError("the Bernoulli grid family is implemented for 2-letter alphabets");
    if (!X.is_full()) throw ConfigError("Bernoulli measures need the full shift");
    const double step = opts.bernoulli_step;
    const auto steps = static_cast<std::int64_t>(std::llround(1.0 / step));
    for (std::int64_t i = 0; i <= steps; ++i) {
      const double q = std::min(1.0, static_cast<double>(i) * step);
      Eigen::VectorXd w(2);
      w << 1.0 - q, q;
      consider(MarkovMeasure::iid(w));
    }
  } else {
    if (X.dimension() != 1) throw ConfigError("the Markov family requires dimension 1");
    const int k = X.alphabet_size();
    std::mt19937_64 rng(opts.seed);
    auto gaussian_ish = [&]() {
      // sum of uniforms; deterministic and platform-stable
      double s = 0.0;
      for (int i = 0; i < 6; ++i)
        s += std::ldexp(static_cast<double>(rng() >> 11), -53);
      return (s - 3.0);
    };
    auto objective_theta = [&](const Eigen::MatrixXd& theta) {
      return family_objective(X, MarkovMeasure::from_transition(softmax_rows(X, theta)), pot);
    };
    for (int restart = 0; restart < opts.markov_restarts; ++restart) {
      Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(k, k);
      if (restart > 0)
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) theta(i, j) = gaussian_ish();
      double f = objective_theta(theta);
      double step_size = 0.5;
      for (int it = 0; it < opts.markov_iterations; ++it) {
        // numeric gradient over the allowed entries
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(k, k);
        const double h = 1e-6;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            if (!X.allows(0, i, j)) continue;
            Eigen::MatrixXd tp = theta, tm = theta;
            tp(i, j) += h;
            tm(i, j) -= h;
            grad(i, j) = (objective_theta(tp) - objective_theta(tm)) / (2 * h);
          }
        }
        const double gn = grad.norm();
        if (gn < 1e-10) break;
        bool improved = false;
        while (step_size > 1e-12) {
          Eigen::MatrixXd cand = theta + (step_size / gn) * grad;
          const double fc = objective_theta(cand);
          if (fc > f + 1e-15) {
            theta = cand;
            f = fc;
            improved = true;
            step_size *= 1.5;
            break;
          }
          step_size *= 0.5;
        }
        if (!improved) break;
      }
      consider(MarkovMeasure::from_transition(softmax_rows(X, theta)));
    }
  }

  if (!argmax) throw PreconditionError("variational family produced no admissible measure");
  out.family_sup = best;
  out.argmax = *argmax;
  out.gap = out.pressure_estimate - out.family_sup;
  out.one_sided_ok = one_sided;
  out.certificate_ok = std::abs(out.gap) <= opts.certificate_tol;
  out.argmax_integral = integral_of_potential(X, pot, out.argmax);
  const IntegralReport ir = integral_of_setmap(X, phi, out.argmax, schedule, pot);
  out.argmax_series_integral = ir.series.extrapolated_limit;
  return out;
}

}  // namespace setmaps
