#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "setmaps/errors.hpp"
#include "setmaps/subshift.hpp"

using namespace setmaps;

namespace {

Subshift full2(int dim = 1) { return Subshift::full_shift({"0", "1"}, dim); }

Subshift golden_mean() {
  // forbid adjacent 1s
  return Subshift::nearest_neighbor({"0", "1"}, 1, {{{1, 1}, {1, 0}}});
}

double fib(int n) {  // F(1) = F(2) = 1
  double a = 1, b = 1;
  for (int i = 2; i < n; ++i) {
    const double c = a + b;
    a = b;
    b = c;
  }
  return n <= 2 ? 1 : b;
}

}  // namespace

TEST_CASE("pattern counts on full shifts and the golden mean") {
  const Subshift X = full2();
  CHECK(count_patterns(X, FiniteSubset::interval(0, 3)) == 8.0);
  CHECK(enumerate_patterns(X, FiniteSubset::interval(0, 3)).patterns.size() == 8);

  const Subshift G = golden_mean();
  CHECK(count_patterns(G, FiniteSubset::interval(0, 4)) == 8.0);  // F(6)
  for (int n = 1; n <= 20; ++n)
    CHECK(count_patterns(G, FiniteSubset::interval(0, n)) == doctest::Approx(fib(n + 2)));

  const Subshift X2 = full2(2);
  CHECK(count_patterns(X2, FiniteSubset::corner_box(2, 2)) == 16.0);
}

TEST_CASE("enumeration is exact on 1D intervals, flagged elsewhere") {
  const Subshift G = golden_mean();
  CHECK(enumerate_patterns(G, FiniteSubset::interval(0, 5)).exact);
  const FiniteSubset gap(std::vector<GroupElement>{GroupElement{0}, GroupElement{2}});
  CHECK_FALSE(enumerate_patterns(G, gap).exact);
  // counts multiply across runs separated by gaps
  CHECK(count_patterns(G, gap) == 4.0);

  const Subshift F2 = full2(2);
  CHECK(enumerate_patterns(F2, FiniteSubset::corner_box(2, 1)).exact);  // full shift
}

TEST_CASE("enumeration respects the cap") {
  const Subshift X = full2();
  CHECK_THROWS_AS(enumerate_patterns(X, FiniteSubset::interval(0, 8), 100), CapacityError);
}

TEST_CASE("patterns enumerate in lexicographic code order") {
  const Subshift G = golden_mean();
  const auto res = enumerate_patterns(G, FiniteSubset::interval(0, 3));
  REQUIRE(res.patterns.size() == 5);
  std::uint64_t prev = 0;
  bool first = true;
  for (const auto& p : res.patterns) {
    CHECK(locally_admissible(G, p));
    const std::uint64_t code = pattern_code(p, 2);
    if (!first) CHECK(code > prev);
    prev = code;
    first = false;
  }
  CHECK(pattern_string(G, res.patterns.front()) == "000");
  CHECK(pattern_string(G, res.patterns.back()) == "101");
}

TEST_CASE("stranded symbols are rejected") {
  // symbol 1 has no outgoing edge
  CHECK_THROWS_AS(Subshift::nearest_neighbor({"0", "1"}, 1, {{{1, 1}, {0, 0}}}), ConfigError);
}

TEST_CASE("sup_on_cylinder: single-site potentials have no collar") {
  const Subshift X = full2();
  const Potential phi = single_site_potential(X, {0.25, 1.5});
  const FiniteSubset F = FiniteSubset::interval(0, 4);
  for (const auto& w : enumerate_patterns(X, F).patterns) {
    double interior = 0.0;
    for (int s : w.symbols) interior += phi.table[static_cast<std::size_t>(s)];
    CHECK(sup_on_cylinder(X, phi, F, w) == doctest::Approx(interior).epsilon(1e-15));
  }
}

TEST_CASE("sup_on_cylinder: pair potential maximizes over the collar") {
  const Subshift X = full2();
  const Potential phi = pair_potential(X, {{0.0, 0.0}, {0.0, 1.0}});  // x0 * x1
  const FiniteSubset F = FiniteSubset::interval(0, 2);
  const Pattern w11(F, {1, 1});
  // interior term t(1,1) = 1 plus max over x2 of t(1, x2) = 1
  CHECK(sup_on_cylinder(X, phi, F, w11) == doctest::Approx(2.0));

  const Subshift G = golden_mean();
  const Potential psi = pair_potential(G, {{0.0, 0.0}, {0.0, 1.0}});
  const Pattern w10(F, {1, 0});
  // completions of "10" on site 2: both 0 and 1 admissible, both give 0
  CHECK(sup_on_cylinder(G, psi, F, w10) == doctest::Approx(0.0));
  // "11" is not admissible in the golden mean shift
  const Pattern w11g(F, {1, 1});
  CHECK(sup_on_cylinder(G, psi, F, w11g) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("sup_on_cylinder respects constrained collars") {
  const Subshift G = golden_mean();
  const Potential phi = pair_potential(G, {{0.0, 1.0}, {2.0, -5.0}});
  const FiniteSubset F = FiniteSubset::interval(0, 2);
  const Pattern w(F, {0, 1});
  // value = t(0,1) + t(1, x2) with x2 = 0 forced (11 forbidden): 1 + 2
  CHECK(sup_on_cylinder(G, phi, F, w) == doctest::Approx(3.0));
}

TEST_CASE("pattern enumeration is translation covariant") {
  const Subshift G = golden_mean();
  const FiniteSubset F = FiniteSubset::interval(0, 6);
  const FiniteSubset Ft = translate(F, GroupElement{-3});
  const auto a = enumerate_patterns(G, F);
  const auto b = enumerate_patterns(G, Ft);
  REQUIRE(a.patterns.size() == b.patterns.size());
  for (std::size_t i = 0; i < a.patterns.size(); ++i)
    CHECK(a.patterns[i].symbols == b.patterns[i].symbols);
}

TEST_CASE("grouped enumeration keeps outer patterns contiguous") {
  const Subshift G = golden_mean();
  const FiniteSubset F = FiniteSubset::interval(0, 3);
  const FiniteSubset joint = FiniteSubset::interval(-1, 4);  // collar on both sides
  const auto posF = detail::subindex(joint, F);
  std::vector<std::uint64_t> outer_codes;
  for_each_pattern_grouped(G, joint, F, [&](const std::vector<int>& s) {
    outer_codes.push_back(detail::subcode(s, posF, 2));
  });
  CHECK(outer_codes.size() == count_patterns(G, joint));
  // each outer code appears in exactly one contiguous run
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < outer_codes.size(); ++i) {
    if (i == 0 || outer_codes[i] != outer_codes[i - 1]) {
      CHECK(seen.count(outer_codes[i]) == 0);
      seen.insert(outer_codes[i]);
    }
  }
  CHECK(seen.size() == count_patterns(G, F));
}

TEST_CASE("oscillation and exp-summability of potentials") {
  const Subshift X = full2();
  CHECK(oscillation(X, single_site_potential(X, {2.0, -1.0})) == 0.0);
  const Potential pair = pair_potential(X, {{0.0, 3.0}, {1.0, 1.0}});
  // fixing x0 = 0 leaves spread |3 - 0| = 3; fixing x0 = 1 leaves 0
  CHECK(oscillation(X, pair) == doctest::Approx(3.0));

  const double es = exp_summability(X, single_site_potential(X, {0.0, 1.0}));
  CHECK(es == doctest::Approx(1.0 + std::exp(1.0)));
}

TEST_CASE("metric and exhaustion") {
  const Subshift X = full2();
  CHECK(X.exhaustion(1) == FiniteSubset::singleton(GroupElement{0}));
  CHECK(X.exhaustion(3) == FiniteSubset::interval(-2, 3));

  const FiniteSubset S = FiniteSubset::interval(-4, 5);
  Pattern x(S, std::vector<int>(9, 0));
  Pattern y(S, std::vector<int>(9, 0));
  y.symbols[6] = 1;  // site +2 differs -> first disagreement at E_3
  CHECK(metric_distance(X, x, y, 4) == doctest::Approx(std::ldexp(1.0, -3)));
  CHECK(metric_distance(X, x, x, 4) == doctest::Approx(std::ldexp(1.0, -5)));
}

TEST_CASE("irreducibility of the transition graph") {
  CHECK(golden_mean().irreducible());
  CHECK(full2().irreducible());
  const Subshift two_comp =
      Subshift::nearest_neighbor({"a", "b"}, 1, {{{1, 0}, {0, 1}}});  // two loops
  CHECK_FALSE(two_comp.irreducible());
}

TEST_CASE("koopman bridge keeps the table and window") {
  const Subshift X = full2();
  const Potential phi = single_site_potential(X, {0.0, 2.5});
  const Potential k = koopman(X, phi);
  CHECK(k.window == phi.window);
  CHECK(k.table == phi.table);
  const Potential z = koopman(X, zero_potential(X, phi.window));
  for (double v : z.table) CHECK(v == 0.0);
}

TEST_CASE("2D nearest-neighbor enumerations are flagged locally admissible") {
  // hard squares: no two adjacent 1s along either axis
  const std::vector<std::vector<int>> no11{{1, 1}, {1, 0}};
  const Subshift H = Subshift::nearest_neighbor({"0", "1"}, 2, {no11, no11});
  const auto res = enumerate_patterns(H, FiniteSubset::corner_box(2, 2));
  CHECK_FALSE(res.exact);
  // independent sets of the 4-cycle: 7
  CHECK(res.patterns.size() == 7);
  for (const auto& p : res.patterns) CHECK(locally_admissible(H, p));
}
