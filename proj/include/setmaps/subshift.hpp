#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "setmaps/group.hpp"

namespace setmaps {

/// Finite-alphabet subshift over Z or Z^2: the full shift or a
/// nearest-neighbor SFT given by 0/1 transition matrices per axis.
/// Constraints are position-independent, so X is shift-invariant.
class Subshift {
 public:
  static Subshift full_shift(std::vector<std::string> alphabet, int dimension);
  /// allowed_per_axis[a] is a k x k 0/1 matrix; entry (i, j) permits symbol j
  /// at position h + e_a when symbol i sits at h. Symbols with no admissible
  /// left or right continuation are rejected (they occur in no point of X).
  static Subshift nearest_neighbor(std::vector<std::string> alphabet, int dimension,
                                   std::vector<std::vector<std::vector<int>>> allowed_per_axis);

  int dimension() const { return dimension_; }
  int alphabet_size() const { return static_cast<int>(alphabet_.size()); }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  int symbol_index(const std::string& s) const;

  bool is_full() const { return full_; }
  bool allows(int axis, int from, int to) const;
  /// Irreducibility of the 1D transition graph (requires dimension 1).
  bool irreducible() const;
  std::vector<std::vector<int>> transition_matrix(int axis) const;

  /// Exhaustion sets E_m behind the shift metric; E_1 = {1_G}, centered
  /// boxes afterwards (matching the default Følner schedule).
  FiniteSubset exhaustion(int m) const;

 private:
  Subshift() = default;

  std::vector<std::string> alphabet_;
  int dimension_ = 1;
  bool full_ = true;
  std::vector<std::vector<std::vector<int>>> allowed_;  // per axis
};

/// A symbol assignment on a finite support; symbols are alphabet indices
/// aligned with the sorted support elements.
struct Pattern {
  FiniteSubset support;
  std::vector<int> symbols;

  Pattern(FiniteSubset support_, std::vector<int> symbols_);
};

/// Code of a pattern: base-A digits over the sorted support, first site most
/// significant, so numeric order equals lexicographic order of the symbol row.
std::uint64_t pattern_code(const Pattern& p, int alphabet_size);
Pattern pattern_from_code(const FiniteSubset& support, std::uint64_t code, int alphabet_size);
std::string pattern_string(const Subshift& X, const Pattern& p);

/// No forbidden adjacent pair inside the support.
bool locally_admissible(const Subshift& X, const Pattern& p);

/// Shift metric d(x, y) = 2^{-inf{m >= 1 : x_{E_m} != y_{E_m}}} evaluated on
/// two patterns whose supports must cover the compared exhaustion sets.
double metric_distance(const Subshift& X, const Pattern& x, const Pattern& y, int m_max = 16);

struct EnumerationResult {
  std::vector<Pattern> patterns;
  /// True when the list is exactly X_F (full shifts; 1D intervals). Otherwise
  /// the list is the locally admissible superset of X_F and this is false.
  bool exact;
};

inline constexpr std::uint64_t kDefaultPatternCap = std::uint64_t{1} << 24;

/// Visits the locally admissible patterns on F in lexicographic order.
/// Aborts via CapacityError after `cap` patterns.
void for_each_pattern(const Subshift& X, const FiniteSubset& F,
                      const std::function<void(const std::vector<int>&)>& visit,
                      std::uint64_t cap = kDefaultPatternCap);

EnumerationResult enumerate_patterns(const Subshift& X, const FiniteSubset& F,
                                     std::uint64_t cap = kDefaultPatternCap);

/// Visits the locally admissible assignments of `joint` (symbol row indexed
/// by the sorted joint support) with the sites of `outer` advancing slowest:
/// all completions of a fixed outer pattern arrive consecutively. `outer`
/// must be a subset of `joint`. The cap bounds total leaf visits.
void for_each_pattern_grouped(const Subshift& X, const FiniteSubset& joint,
                              const FiniteSubset& outer,
                              const std::function<void(const std::vector<int>&)>& visit,
                              std::uint64_t cap = kDefaultPatternCap);

/// Number of locally admissible patterns on F. Exact transfer-matrix count
/// for full shifts and 1D supports; enumeration (cap-guarded) otherwise.
double count_patterns(const Subshift& X, const FiniteSubset& F,
                      std::uint64_t cap = kDefaultPatternCap);

/// Whether enumeration on F is exactly X_F (full shift or 1D interval).
bool enumeration_is_exact(const Subshift& X, const FiniteSubset& F);

/// Locally constant function: a dense value table over the assignments of a
/// finite window, indexed by pattern code. Doubles as the potential type.
struct Potential {
  FiniteSubset window;
  std::vector<double> table;  // size A^{|window|}

  Potential(FiniteSubset window_, std::vector<double> table_, int alphabet_size);

  double at(std::uint64_t code) const { return table[code]; }
};

Potential zero_potential(const Subshift& X, const FiniteSubset& window);
Potential constant_potential(const Subshift& X, double c);
/// Single-site potential on window {1_G} with value per symbol.
Potential single_site_potential(const Subshift& X, const std::vector<double>& values);
/// Pair potential on window {0, 1} (1D) with values t(i, j).
Potential pair_potential(const Subshift& X, const std::vector<std::vector<double>>& t);

/// sup over x in [w] of S_F(phi)(x), computed exactly: interior contributions
/// read from w, the collar (union of translated windows minus F) is maximized
/// over admissible completions. Returns -infinity when w has no admissible
/// completion on the collar.
double sup_on_cylinder(const Subshift& X, const Potential& phi, const FiniteSubset& F,
                       const Pattern& w, std::uint64_t cap = kDefaultPatternCap);

/// sup over [w] of an arbitrary locally constant function f (window may
/// overlap the support of w in any way).
double cylinder_sup(const Subshift& X, const Potential& f, const Pattern& w,
                    std::uint64_t cap = kDefaultPatternCap);

/// Bridges a potential into the Koopman representation's vector space:
/// the same table, viewed as a locally constant vector.
Potential koopman(const Subshift& X, const Potential& phi);

/// delta(phi) = sup{|phi(x)-phi(y)| : x(1_G) = y(1_G)}, exact from the table.
double oscillation(const Subshift& X, const Potential& phi);

/// sum_a exp(sup{phi(x) : x(1_G) = a}); finite for finite alphabets.
double exp_summability(const Subshift& X, const Potential& phi);

namespace detail {
/// Positions (indices into the sorted joint support) of `window` inside
/// `joint`; throws if not contained.
std::vector<std::size_t> subindex(const FiniteSubset& joint, const FiniteSubset& window);

/// Reads the code of the sub-pattern at the given positions.
std::uint64_t subcode(const std::vector<int>& joint_symbols,
                      const std::vector<std::size_t>& positions, int alphabet_size);
}  // namespace detail

}  // namespace setmaps
