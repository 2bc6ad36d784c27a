#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "setmaps/errors.hpp"
#include "setmaps/thermo.hpp"

using namespace setmaps;

namespace {

std::shared_ptr<const Subshift> full2() {
  return std::make_shared<Subshift>(Subshift::full_shift({"0", "1"}, 1));
}

std::shared_ptr<const Subshift> golden() {
  return std::make_shared<Subshift>(
      Subshift::nearest_neighbor({"0", "1"}, 1, {{{1, 1}, {1, 0}}}));
}

SetMap additive_potential(std::shared_ptr<const Subshift> X, const Potential& phi) {
  const Representation koop = Representation::koopman(X, phi.window);
  return SetMap::additive(koop, Vec(phi));
}

FolnerSchedule intervals(std::int64_t lo, std::int64_t hi) {
  return FolnerSchedule::corner_boxes(1, lo, hi);
}

const double kGoldenRatio = (1.0 + std::sqrt(5.0)) / 2.0;

double fib(int n) {
  double a = 1, b = 1;
  for (int i = 2; i < n; ++i) {
    const double c = a + b;
    a = b;
    b = c;
  }
  return n <= 2 ? 1 : b;
}

}  // namespace

TEST_CASE("partition function: zero potential counts patterns exactly") {
  auto X = full2();
  const SetMap zero = additive_potential(X, zero_potential(*X, FiniteSubset::singleton(GroupElement{0})));
  for (int n = 1; n <= 16; ++n)
    CHECK(partition_function(*X, zero, FiniteSubset::interval(0, n)) == std::pow(2.0, n));

  auto G = golden();
  const SetMap zg = additive_potential(G, zero_potential(*G, FiniteSubset::singleton(GroupElement{0})));
  for (int n = 1; n <= 16; ++n)
    CHECK(partition_function(*G, zg, FiniteSubset::interval(0, n)) ==
          doctest::Approx(fib(n + 2)).epsilon(1e-12));
}

TEST_CASE("partition function: single-site factorization oracle") {
  auto X = full2();
  for (double beta : {-1.0, 0.5, 1.0, 2.0}) {
    const SetMap phi = additive_potential(X, single_site_potential(*X, {0.0, beta}));
    for (int n = 1; n <= 12; ++n) {
      const double expect = std::pow(1.0 + std::exp(beta), n);  // factorized closed form
      CHECK(partition_function(*X, phi, FiniteSubset::interval(0, n)) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("partition function is translation invariant") {
  auto G = golden();
  const SetMap phi = additive_potential(G, pair_potential(*G, {{0.3, -0.2}, {1.1, 0.0}}));
  const FiniteSubset F = FiniteSubset::interval(0, 6);
  const double base = log_partition_function(*G, phi, F);
  for (std::int64_t g : {-4, 3, 11})
    CHECK(log_partition_function(*G, phi, translate(F, GroupElement{g})) ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("partition function is monotone in the potential") {
  auto X = full2();
  const SetMap lo = additive_potential(X, pair_potential(*X, {{0.1, 0.4}, {-0.5, 0.2}}));
  const SetMap hi = additive_potential(X, pair_potential(*X, {{0.2, 0.4}, {-0.1, 0.9}}));
  for (int n : {2, 5, 9}) {
    const FiniteSubset F = FiniteSubset::interval(0, n);
    CHECK(log_partition_function(*X, lo, F) <= log_partition_function(*X, hi, F) + 1e-12);
  }
}

TEST_CASE("pressure: full 2-shift gives log 2 at every n by both methods") {
  auto X = full2();
  const SetMap zero = additive_potential(X, zero_potential(*X, FiniteSubset::singleton(GroupElement{0})));
  const PressureEstimate pe = pressure(*X, zero, intervals(1, 16));
  CHECK(pe.method == PressureMethod::kTransferMatrix);
  CHECK(pe.limit_estimate == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (const auto& e : pe.series.series)
    CHECK(e.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(pe.methods_agree);
  CHECK_FALSE(pe.locally_admissible_bound);
}

TEST_CASE("pressure: golden mean eigenvalue and decreasing enumeration series") {
  auto G = golden();
  const SetMap zero = additive_potential(G, zero_potential(*G, FiniteSubset::singleton(GroupElement{0})));
  const PressureEstimate pe = pressure(*G, zero, intervals(1, 16));
  REQUIRE(pe.log_spectral_radius.has_value());
  CHECK(*pe.log_spectral_radius == doctest::Approx(std::log(kGoldenRatio)).epsilon(1e-9));
  CHECK(pe.methods_agree);
  for (std::size_t i = 1; i < pe.series.series.size(); ++i)
    CHECK(pe.series.series[i].value <= pe.series.series[i - 1].value + 1e-12);
  CHECK(pe.series.series.back().value - std::log(kGoldenRatio) <= 0.02);
  CHECK(pe.series.series.back().value >= std::log(kGoldenRatio));
}

TEST_CASE("pressure: single-site beta potential hits log(1 + e^beta)") {
  auto X = full2();
  for (double beta : {-1.0, 0.0, 1.0, 2.0}) {
    const SetMap phi = additive_potential(X, single_site_potential(*X, {0.0, beta}));
    const PressureEstimate pe = pressure(*X, phi, intervals(1, 12));
    CHECK(pe.limit_estimate == doctest::Approx(std::log(1.0 + std::exp(beta))).epsilon(1e-9));
    CHECK(pe.methods_agree);
  }
}

TEST_CASE("transfer matrix and enumeration agree term by term") {
  auto G = golden();
  const Potential phi = pair_potential(*G, {{0.2, -0.7}, {0.5, 0.0}});
  const SetMap map = additive_potential(G, phi);
  const PressureEstimate pe = pressure(*G, map, intervals(1, 12));
  REQUIRE(pe.transfer_series.has_value());
  REQUIRE(pe.transfer_series->series.size() == pe.series.series.size());
  for (std::size_t i = 0; i < pe.series.series.size(); ++i)
    CHECK(pe.series.series[i].value ==
          doctest::Approx(pe.transfer_series->series[i].value).epsilon(1e-12));
  CHECK(pe.methods_agree);
}

TEST_CASE("markov measures: construction, stationarity, probabilities") {
  Eigen::MatrixXd P(2, 2);
  P << 1.0 / kGoldenRatio, 1.0 / (kGoldenRatio * kGoldenRatio), 1.0, 0.0;
  const MarkovMeasure parry = MarkovMeasure::from_transition(P);
  const double phi2 = kGoldenRatio * kGoldenRatio;
  CHECK(parry.stationary()(0) == doctest::Approx(phi2 / (1 + phi2)).epsilon(1e-10));
  CHECK(parry.entropy_rate() == doctest::Approx(std::log(kGoldenRatio)).epsilon(1e-10));

  auto G = golden();
  parry.validate_support(*G);
  const Pattern w10(FiniteSubset::interval(0, 2), {1, 0});
  CHECK(parry.pattern_probability(*G, w10) ==
        doctest::Approx(parry.stationary()(1) * 1.0).epsilon(1e-10));

  // gapped support: forward algorithm vs brute middle-site sum
  const FiniteSubset gapped(std::vector<GroupElement>{GroupElement{0}, GroupElement{2}});
  const Pattern wg(gapped, {0, 0});
  double brute = 0.0;
  for (int mid : {0, 1}) {
    const Pattern full(FiniteSubset::interval(0, 3), {0, mid, 0});
    brute += parry.pattern_probability(*G, full);
  }
  CHECK(parry.pattern_probability(*G, wg) == doctest::Approx(brute).epsilon(1e-12));

  // support validation rejects mass on forbidden transitions
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(MarkovMeasure::from_transition(bad).validate_support(*G), ConfigError);
}

TEST_CASE("ks entropy: Bernoulli and Parry") {
  auto X = full2();
  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  const EntropyReport uniform = ks_entropy(*X, MarkovMeasure::iid(half), intervals(1, 20));
  for (const auto& e : uniform.series.series)
    CHECK(e.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const double p = 0.7311;
  Eigen::VectorXd w(2);
  w << 1 - p, p;
  const EntropyReport bern = ks_entropy(*X, MarkovMeasure::iid(w), intervals(1, 10));
  const double expect = -p * std::log(p) - (1 - p) * std::log(1 - p);
  CHECK(expect == doctest::Approx(0.5830).epsilon(1e-3));
  CHECK(bern.closed_form == doctest::Approx(expect).epsilon(1e-12));
  CHECK(bern.series.series.back().value == doctest::Approx(expect).epsilon(1e-12));

  auto G = golden();
  const EquilibriumResult parry = equilibrium_state_1d(
      *G, zero_potential(*G, FiniteSubset::singleton(GroupElement{0})));
  const EntropyReport pe = ks_entropy(*G, parry.measure, intervals(1, 14));
  CHECK(pe.closed_form == doctest::Approx(std::log(kGoldenRatio)).epsilon(1e-9));
  // the chain-rule series approaches the closed form
  CHECK(std::abs(pe.series.series.back().value - pe.closed_form) <= 0.05);
  CHECK(std::abs(pe.series.extrapolated_limit - pe.closed_form) <= 1e-6);
}

TEST_CASE("ks entropy: enumeration matches the chain rule on small intervals") {
  auto G = golden();
  const EquilibriumResult parry = equilibrium_state_1d(
      *G, zero_potential(*G, FiniteSubset::singleton(GroupElement{0})));
  for (int n : {2, 4, 6}) {
    const FiniteSubset F = FiniteSubset::interval(0, n);
    double H = 0.0;
    for_each_pattern(*G, F, [&](const std::vector<int>& s) {
      const double q = parry.measure.pattern_probability(*G, Pattern(F, s));
      if (q > 0) H -= q * std::log(q);
    });
    const double p0 = parry.measure.stationary()(0);
    const double hsite = -p0 * std::log(p0) -
                         (1 - p0) * std::log(1 - p0);
    CHECK(H == doctest::Approx(hsite + (n - 1) * parry.measure.entropy_rate()).epsilon(1e-10));
  }
}

TEST_CASE("integral of set maps against invariant measures") {
  auto X = full2();
  const double p = 0.3;
  Eigen::VectorXd w(2);
  w << 1 - p, p;
  const MarkovMeasure mu = MarkovMeasure::iid(w);

  const Potential x0 = single_site_potential(*X, {0.0, 1.0});
  const SetMap phi = additive_potential(X, x0);
  const IntegralReport r = integral_of_setmap(*X, phi, mu, intervals(1, 10), x0);
  for (const auto& e : r.series.series) CHECK(e.value == doctest::Approx(p).epsilon(1e-12));
  REQUIRE(r.realized_integral.has_value());
  CHECK(*r.realized_integral == doctest::Approx(p).epsilon(1e-12));

  // boundary perturbation decays like the defect
  const Representation koop = Representation::koopman(X, x0.window);
  const SetMap bp = SetMap::boundary_perturbed(koop, Vec(x0), Vec(constant_potential(*X, 1.0)),
                                               FiniteSubset::interval(0, 2));
  const IntegralReport rb = integral_of_setmap(*X, bp, mu, intervals(2, 12), x0);
  for (const auto& e : rb.series.series)
    CHECK(std::abs(e.value - p) <= 1.0 / static_cast<double>(e.set_size) + 1e-12);
  CHECK(std::abs(rb.series.extrapolated_limit - p) <= 1e-9);
}

TEST_CASE("equilibrium states: full shift, golden mean, beta potential") {
  auto X = full2();
  const EquilibriumResult flat = equilibrium_state_1d(
      *X, zero_potential(*X, FiniteSubset::singleton(GroupElement{0})));
  CHECK(flat.pressure == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(flat.measure.stationary()(0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(flat.certificate_gap <= 1e-9);

  auto G = golden();
  const EquilibriumResult parry = equilibrium_state_1d(
      *G, zero_potential(*G, FiniteSubset::singleton(GroupElement{0})));
  CHECK(parry.pressure == doctest::Approx(std::log(kGoldenRatio)).epsilon(1e-9));
  CHECK(parry.certificate_gap <= 1e-9);
  const double phi2 = kGoldenRatio * kGoldenRatio;
  CHECK(parry.measure.stationary()(0) == doctest::Approx(phi2 / (1 + phi2)).epsilon(1e-9));

  const double beta = 1.0;
  const EquilibriumResult eb =
      equilibrium_state_1d(*X, single_site_potential(*X, {0.0, beta}));
  CHECK(eb.pressure == doctest::Approx(std::log(1.0 + std::exp(beta))).epsilon(1e-9));
  const double pstar = std::exp(beta) / (1.0 + std::exp(beta));
  CHECK(eb.measure.stationary()(1) == doctest::Approx(pstar).epsilon(1e-9));
  CHECK(eb.certificate_gap <= 1e-9);

  // brute 1D grid over Bernoulli measures confirms the variational value
  double best = -1e300;
  for (int i = 1; i < 2000; ++i) {
    const double q = i / 2000.0;
    best = std::max(best, -q * std::log(q) - (1 - q) * std::log(1 - q) + beta * q);
  }
  CHECK(best <= eb.pressure + 1e-9);
  CHECK(best >= eb.pressure - 1e-5);

  // reducible chains abort
  auto R = std::make_shared<Subshift>(
      Subshift::nearest_neighbor({"a", "b"}, 1, {{{1, 0}, {0, 1}}}));
  CHECK_THROWS_AS(
      equilibrium_state_1d(*R, zero_potential(*R, FiniteSubset::singleton(GroupElement{0}))),
      PreconditionError);
}

TEST_CASE("pressure transfer: the epsilon sandwich holds pointwise") {
  auto X = full2();
  const Potential x0 = single_site_potential(*X, {0.0, 1.0});
  const Representation koop = Representation::koopman(X, x0.window);

  const SetMap exact = SetMap::additive(koop, Vec(x0));
  const PressureTransferReport r1 = pressure_of_realization(*X, exact, intervals(2, 12));
  CHECK(r1.sandwich_ok);
  for (double g : r1.gap_series) CHECK(g <= 1e-9);

  const SetMap bp = SetMap::boundary_perturbed(
      koop, Vec(x0), Vec(constant_potential(*X, 0.4)), FiniteSubset::interval(0, 2));
  const PressureTransferReport r2 = pressure_of_realization(*X, bp, intervals(2, 12));
  CHECK(r2.sandwich_ok);
  CHECK(r2.gap_series.back() <= r2.gap_series.front());
  CHECK(r2.gap_series.back() <= 0.1);
}

TEST_CASE("variational certificate: Bernoulli grid at beta = 1") {
  auto X = full2();
  const double beta = 1.0;
  const SetMap phi = additive_potential(X, single_site_potential(*X, {0.0, beta}));
  VariationalOptions opts;
  opts.bernoulli_step = 1e-4;
  const VariationalReport r =
      variational_certificate(*X, phi, MeasureFamily::kBernoulli, intervals(1, 12), opts);
  const double expect = std::log(1.0 + std::exp(beta));
  CHECK(r.pressure_estimate == doctest::Approx(expect).epsilon(1e-9));
  CHECK(std::abs(r.family_sup - expect) <= 1e-6);
  CHECK(r.one_sided_ok);
  CHECK(r.certificate_ok);
  const double pstar = std::exp(beta) / (1.0 + std::exp(beta));
  CHECK(std::abs(r.argmax.stationary()(1) - pstar) <= 1e-4);
  CHECK(r.argmax_integral == doctest::Approx(r.argmax.stationary()(1)).epsilon(1e-9));
}

TEST_CASE("variational certificate: Markov family finds the Parry measure") {
  auto G = golden();
  const SetMap zero = additive_potential(G, zero_potential(*G, FiniteSubset::singleton(GroupElement{0})));
  VariationalOptions opts;
  opts.markov_restarts = 8;
  const VariationalReport r =
      variational_certificate(*G, zero, MeasureFamily::kMarkov, intervals(1, 12), opts);
  CHECK(std::abs(r.family_sup - std::log(kGoldenRatio)) <= 1e-6);
  CHECK(r.one_sided_ok);
  CHECK(std::abs(r.argmax.transition()(0, 0) - 1.0 / kGoldenRatio) <= 1e-3);
}

TEST_CASE("2D pressure: full shift exact, SFT flagged as an upper bound") {
  auto X2 = std::make_shared<Subshift>(Subshift::full_shift({"0", "1"}, 2));
  const SetMap zero = additive_potential(
      X2, zero_potential(*X2, FiniteSubset::singleton(GroupElement{0, 0})));
  const FolnerSchedule boxes = FolnerSchedule::corner_boxes(2, 1, 4);
  const PressureEstimate pe = pressure(*X2, zero, boxes);
  for (const auto& e : pe.series.series)
    CHECK(e.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_FALSE(pe.locally_admissible_bound);
  CHECK(pe.method == PressureMethod::kEnumeration);

  const std::vector<std::vector<int>> no11{{1, 1}, {1, 0}};
  auto H = std::make_shared<Subshift>(Subshift::nearest_neighbor({"0", "1"}, 2, {no11, no11}));
  const SetMap zh = additive_potential(
      H, zero_potential(*H, FiniteSubset::singleton(GroupElement{0, 0})));
  const PressureEstimate ph = pressure(*H, zh, boxes);
  CHECK(ph.locally_admissible_bound);  // counts locally admissible patterns only
  // hard-square entropy is log(1.50304...) = 0.40749; the series bounds it
  // from above and decreases toward it
  for (const auto& e : ph.series.series) CHECK(e.value >= 0.40749);
  for (std::size_t i = 1; i < ph.series.series.size(); ++i)
    CHECK(ph.series.series[i].value <= ph.series.series[i - 1].value + 1e-12);
}

TEST_CASE("ks entropy of iid products on the 2D full shift") {
  auto X2 = std::make_shared<Subshift>(Subshift::full_shift({"0", "1"}, 2));
  Eigen::VectorXd w(2);
  w << 0.25, 0.75;
  const EntropyReport r =
      ks_entropy(*X2, MarkovMeasure::iid(w), FolnerSchedule::corner_boxes(2, 1, 5));
  const double expect = -0.25 * std::log(0.25) - 0.75 * std::log(0.75);
  for (const auto& e : r.series.series) CHECK(e.value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(r.closed_form == doctest::Approx(expect).epsilon(1e-12));
}
