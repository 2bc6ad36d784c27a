#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "setmaps/errors.hpp"
#include "setmaps/representation.hpp"

using namespace setmaps;

namespace {

Eigen::MatrixXd rotation(double theta) {
  Eigen::MatrixXd R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

Representation rotation_rep(double theta) {
  return Representation::matrix({rotation(theta)}, NormKind::kEuclidean);
}

Representation diag_rep() {
  Eigen::MatrixXd D(2, 2);
  D << 1, 0, 0, -1;
  return Representation::matrix({D}, NormKind::kEuclidean);
}

std::shared_ptr<const Subshift> full2() {
  return std::make_shared<Subshift>(Subshift::full_shift({"0", "1"}, 1));
}

}  // namespace

TEST_CASE("ergodic sums: identity, cancellation, Koopman table") {
  const Representation id = Representation::identity(1, 1);
  const FiniteSubset F = FiniteSubset::interval(-2, 3);
  const Vec c(Eigen::VectorXd::Constant(1, 2.5));
  CHECK(id.ergodic_sum(F, c).coords()(0) == doctest::Approx(5 * 2.5));
  CHECK(id.ergodic_average(F, c).coords()(0) == doctest::Approx(2.5));

  const Representation half_turn = rotation_rep(M_PI);
  Eigen::VectorXd e1(2);
  e1 << 1, 0;
  const Vec s = half_turn.ergodic_sum(FiniteSubset::interval(0, 2), Vec(e1));
  CHECK(s.coords().norm() == doctest::Approx(0.0).epsilon(1e-12));

  auto X = full2();
  const Representation koop = Representation::koopman(X, FiniteSubset::singleton(GroupElement{0}));
  const Vec phi(single_site_potential(*X, {0.0, 1.0}));  // x -> x_0
  const Potential sum = koop.ergodic_sum(FiniteSubset::interval(0, 2), phi).local_fn();
  CHECK(sum.window == FiniteSubset::interval(0, 2));
  // codes: "00" -> 0, "01" -> 1, "10" -> 1, "11" -> 2
  CHECK(sum.table[0] == doctest::Approx(0.0));
  CHECK(sum.table[1] == doctest::Approx(1.0));
  CHECK(sum.table[2] == doctest::Approx(1.0));
  CHECK(sum.table[3] == doctest::Approx(2.0));
}

TEST_CASE("full rotation cycle averages to zero") {
  const Representation rep = rotation_rep(2.0 * M_PI / 5.0);
  // oracle: sum the five rotation matrices directly
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2, 2);
  for (int k = 0; k < 5; ++k) S += rotation(-2.0 * M_PI * k / 5.0);
  CHECK(S.norm() == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::VectorXd v(2);
  v << 0.3, -1.7;
  const Vec a = rep.ergodic_average(FiniteSubset::interval(0, 5), Vec(v));
  CHECK(a.coords().norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("averaging operators are bounded and equivariant") {
  const Representation rep = rotation_rep(0.7);
  std::mt19937_64 rng(7);
  auto u01 = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(2);
    v << 2 * u01() - 1, 2 * u01() - 1;
    const std::int64_t a = static_cast<std::int64_t>(rng() % 9) - 4;
    const std::int64_t b = a + 1 + static_cast<std::int64_t>(rng() % 6);
    const FiniteSubset F = FiniteSubset::interval(a, b);
    const GroupElement g{static_cast<std::int64_t>(rng() % 7) - 3};

    CHECK(rep.norm(rep.ergodic_average(F, Vec(v))) <= rep.uniform_bound() * rep.norm(Vec(v)) + 1e-12);
    // A_{g.F} v = pi(g) A_F v
    const Eigen::VectorXd lhs = rep.ergodic_average(translate(F, g), Vec(v)).coords();
    const Eigen::VectorXd rhs = (rep.operator_at(g) * rep.ergodic_average(F, Vec(v)).coords());
    CHECK((lhs - rhs).norm() == doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("uniform bound: exact for isometries, flagged lower bound otherwise") {
  CHECK(rotation_rep(1.1).uniform_bound() == 1.0);
  CHECK_FALSE(rotation_rep(1.1).uniform_bound_is_estimate());
  CHECK(diag_rep().uniform_bound() == 1.0);

  Eigen::MatrixXd M(2, 2);
  M << 2, 0, 0, 0.5;
  const Representation growing = Representation::matrix({M}, NormKind::kEuclidean);
  CHECK(growing.uniform_bound_is_estimate());
  CHECK(growing.uniform_bound() == doctest::Approx(256.0));  // word length 8

  auto X = full2();
  const Representation koop = Representation::koopman(X, FiniteSubset::singleton(GroupElement{0}));
  CHECK(koop.uniform_bound() == 1.0);
  CHECK_FALSE(koop.uniform_bound_is_estimate());
}

TEST_CASE("Koopman action translates windows and preserves the sup norm") {
  auto X = full2();
  const Representation koop = Representation::koopman(X, FiniteSubset::singleton(GroupElement{0}));
  const Vec phi(single_site_potential(*X, {0.5, -2.0}));
  const Vec shifted = koop.apply(GroupElement{1}, phi);
  CHECK(shifted.local_fn().window == FiniteSubset::singleton(GroupElement{-1}));
  CHECK(koop.norm(shifted) == koop.norm(phi));
  const Vec zero = koop.apply(GroupElement{1}, Vec(zero_potential(*X, FiniteSubset::singleton(GroupElement{0}))));
  CHECK(koop.norm(zero) == 0.0);
}

TEST_CASE("coboundary spaces: identity, rotation, reflection") {
  const Representation id = Representation::identity(1, 3);
  CHECK(full_coboundary_space(id).rank() == 0);

  const Representation quarter = rotation_rep(M_PI / 2.0);
  CHECK(full_coboundary_space(quarter).rank() == 2);  // I - R_90 invertible

  const CoboundarySpace L = full_coboundary_space(diag_rep());
  REQUIRE(L.rank() == 1);
  CHECK(std::abs(L.basis(0, 0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(L.basis(1, 0)) == doctest::Approx(1.0));
}

TEST_CASE("quotient seminorm: euclidean projections") {
  const Representation id = Representation::identity(1, 2);
  const CoboundarySpace zero = full_coboundary_space(id);
  Eigen::VectorXd v(2);
  v << 3, 4;
  CHECK(quotient_seminorm(id, zero, v) == doctest::Approx(5.0));

  const Representation d = diag_rep();
  const CoboundarySpace L = full_coboundary_space(d);  // span{e2}
  CHECK(quotient_seminorm(d, L, v) == doctest::Approx(3.0));
  Eigen::VectorXd in(2);
  in << 0, 7;
  CHECK(quotient_seminorm(d, L, in) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("chebyshev distance: hand oracles and grid cross-check") {
  Eigen::MatrixXd B(2, 1);
  B << 0, 1;
  Eigen::VectorXd v(2);
  v << 3, 4;
  CHECK(chebyshev_distance_to_span(B, v) == doctest::Approx(3.0).epsilon(1e-9));

  B << 1, 1;
  v << 1, -1;
  CHECK(chebyshev_distance_to_span(B, v) == doctest::Approx(1.0).epsilon(1e-9));

  const Eigen::MatrixXd empty(2, 0);
  CHECK(chebyshev_distance_to_span(empty, v) == doctest::Approx(1.0));

  std::mt19937_64 rng(13);
  auto u01 = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::MatrixXd B3(3, 1);
    Eigen::VectorXd v3(3);
    for (int i = 0; i < 3; ++i) {
      B3(i, 0) = 2 * u01() - 1;
      v3(i) = 2 * u01() - 1;
    }
    const double lp = chebyshev_distance_to_span(B3, v3);
    // brute 1-parameter scan
    double brute = 1e300;
    for (int i = -4000; i <= 4000; ++i) {
      const double c = i * 1e-3;
      brute = std::min(brute, (v3 - c * B3.col(0)).lpNorm<Eigen::Infinity>());
    }
    CHECK(lp <= brute + 1e-6);
    const double euclid = (v3 - B3.col(0) * (B3.col(0).dot(v3) / B3.col(0).squaredNorm())).norm();
    CHECK(lp <= euclid + 1e-9);
    CHECK(lp >= euclid / std::sqrt(3.0) - 1e-9);
  }
}

TEST_CASE("averages of coboundary generators obey the displayed bound") {
  // ||A_F (w - pi(g) w)|| <= C_pi ||w|| |g^{-1} F delta F| / |F| at every n
  for (const Representation& rep : {rotation_rep(2.0 * M_PI / 5.0), diag_rep()}) {
    std::mt19937_64 rng(101);
    auto u01 = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd w(2);
      w << 2 * u01() - 1, 2 * u01() - 1;
      const GroupElement g{static_cast<std::int64_t>(rng() % 5) - 2};
      const Vec u(Eigen::VectorXd(w - rep.operator_at(g) * w));
      for (std::int64_t n = 1; n <= 40; n += 3) {
        const FiniteSubset F = FiniteSubset::interval(0, n);
        const double lhs = rep.norm(rep.ergodic_average(F, u));
        const double defect = static_cast<double>(symmetric_difference_size(translate(F, g), F)) /
                              static_cast<double>(F.size());
        CHECK(lhs <= rep.uniform_bound() * w.norm() * defect + 1e-12);
      }
    }
  }
}

TEST_CASE("weak coboundary test agrees with the algebra") {
  const auto geometric = FolnerSchedule::corner_boxes(1, 1, 4096)
                             .with_points({1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096});

  const Representation id = Representation::identity(1, 2);
  Eigen::VectorXd v(2);
  v << 0.5, 0.1;
  const auto rid = test_weak_coboundary(id, Vec(v), geometric, 1e-2);
  CHECK_FALSE(rid.passed);
  CHECK(rid.algebra_agrees);
  CHECK(rid.quotient_distance == doctest::Approx(v.norm()));

  const Representation rot = rotation_rep(2.0 * M_PI / 5.0);
  const auto rrot = test_weak_coboundary(rot, Vec(v), geometric, 1e-2);
  CHECK(rrot.passed);
  CHECK(rrot.algebra_agrees);
  CHECK(rrot.quotient_distance == doctest::Approx(0.0).epsilon(1e-10));

  Eigen::VectorXd ones(2);
  ones << 1, 1;
  const auto rdiag = test_weak_coboundary(diag_rep(), Vec(ones), geometric, 1e-2);
  CHECK_FALSE(rdiag.passed);
  CHECK(rdiag.algebra_agrees);
  CHECK(rdiag.series.tail_sup == doctest::Approx(1.0).epsilon(0.05));  // e1 component survives
}

TEST_CASE("representation construction validates inputs") {
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(Representation::matrix({singular}, NormKind::kEuclidean), ConfigError);

  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << 1, 1, 0, 1;
  B << 1, 0, 1, 1;  // does not commute with A
  CHECK_THROWS_AS(Representation::matrix({A, B}, NormKind::kEuclidean), ConfigError);
}

TEST_CASE("quotient seminorm in the sup norm goes through the linear program") {
  Eigen::MatrixXd D(2, 2);
  D << 1, 0, 0, -1;
  const Representation rep = Representation::matrix({D}, NormKind::kSup);
  const CoboundarySpace L = full_coboundary_space(rep);  // span{e2}
  Eigen::VectorXd v(2);
  v << 3, 4;
  // inf over c of ||(3, 4 - c)||_inf = 3
  CHECK(quotient_seminorm(rep, L, v) == doctest::Approx(3.0).epsilon(1e-9));
  Eigen::VectorXd inside(2);
  inside << 0, -9;
  CHECK(quotient_seminorm(rep, L, inside) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("quotient bounds vs averaged norms for a non-isometric involution") {
  // M is an involution with operator norm (3 + sqrt 5)/2 under the square
  // root, so C_pi = ||M|| > 1 and the word-ball estimate is exact here.
  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 0, -1;
  const Representation rep = Representation::matrix({M}, NormKind::kEuclidean);
  const double cpi = rep.uniform_bound();
  CHECK(cpi > 1.0);

  const CoboundarySpace L = full_coboundary_space(rep);
  std::mt19937_64 rng(55);
  auto u01 = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd v(2);
    v << 2 * u01() - 1, 2 * u01() - 1;
    const double quotient = quotient_seminorm(rep, L, v);

    std::vector<ConvergenceReport::Entry> entries;
    double min_window = 1e300;
    for (int n = 1; n <= 256; ++n) {
      const double a = rep.norm(rep.ergodic_average(FiniteSubset::interval(0, n), Vec(v)));
      entries.push_back({n, static_cast<std::size_t>(n), a});
      min_window = std::min(min_window, a);
    }
    const ConvergenceReport series = analyze_series(std::move(entries));
    // Prop cob1: limsup estimate <= C_pi * quotient (plus stabilization slack)
    CHECK(series.tail_sup <= cpi * quotient + 5e-3);
    // Prop cob2: quotient <= inf over the window (exact inequality)
    CHECK(quotient <= min_window + 1e-12);
  }
}

TEST_CASE("cob2 holds for generated subsets W, not just the full space") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 0, -1;
  const Representation rep = Representation::matrix({M}, NormKind::kEuclidean);
  std::vector<Eigen::VectorXd> W;
  Eigen::VectorXd w1(2), w2(2);
  w1 << 1, 0.5;
  w2 << -0.25, 1;
  W.push_back(w1);
  W.push_back(w2);
  const CoboundarySpace U = coboundary_space(rep, W, {GroupElement{1}});
  for (double a : {1.0, -2.0}) {
    for (double b : {0.0, 3.0}) {
      const Eigen::VectorXd w = a * w1 + b * w2;  // w in span(W)
      double min_window = 1e300;
      for (int n = 1; n <= 64; ++n)
        min_window = std::min(
            min_window, rep.norm(rep.ergodic_average(FiniteSubset::interval(0, n), Vec(w))));
      CHECK(quotient_seminorm(rep, U, w) <= min_window + 1e-12);
    }
  }
}
