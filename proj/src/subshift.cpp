#include "setmaps/subshift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "setmaps/errors.hpp"

namespace setmaps {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t checked_table_size(int alphabet_size, std::size_t window_size) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < window_size; ++i) {
    if (n > (std::uint64_t{1} << 32) / static_cast<std::uint64_t>(alphabet_size))
      throw CapacityError("locally constant window too large to tabulate");
    n *= static_cast<std::uint64_t>(alphabet_size);
  }
  return n;
}

}  // namespace

Subshift Subshift::full_shift(std::vector<std::string> alphabet, int dimension) {
  if (alphabet.empty()) throw ConfigError("alphabet must be non-empty");
  if (dimension != 1 && dimension != 2) throw ConfigError("subshift dimension must be 1 or 2");
  Subshift X;
  X.alphabet_ = std::move(alphabet);
  X.dimension_ = dimension;
  X.full_ = true;
  return X;
}

Subshift Subshift::nearest_neighbor(std::vector<std::string> alphabet, int dimension,
                                    std::vector<std::vector<std::vector<int>>> allowed_per_axis) {
  if (alphabet.empty()) throw ConfigError("alphabet must be non-empty");
  if (dimension != 1 && dimension != 2) throw ConfigError("subshift dimension must be 1 or 2");
  if (allowed_per_axis.size() != static_cast<std::size_t>(dimension))
    throw ConfigError("need one transition matrix per axis");
  const std::size_t k = alphabet.size();
  for (const auto& A : allowed_per_axis) {
    if (A.size() != k) throw ConfigError("transition matrix size mismatch");
    for (const auto& row : A) {
      if (row.size() != k) throw ConfigError("transition matrix size mismatch");
      for (int v : row)
        if (v != 0 && v != 1) throw ConfigError("transition matrices must be 0/1");
    }
    // A stranded symbol occurs in no point of X; reject it up front so that
    // locally admissible interval patterns coincide with X_F in 1D.
    for (std::size_t i = 0; i < k; ++i) {
      bool out = false, in = false;
      for (std::size_t j = 0; j < k; ++j) {
        out = out || A[i][j] != 0;
        in = in || A[j][i] != 0;
      }
      if (!out || !in)
        throw ConfigError("symbol '" + alphabet[i] + "' has no admissible continuation");
    }
  }
  Subshift X;
  X.alphabet_ = std::move(alphabet);
  X.dimension_ = dimension;
  X.full_ = false;
  X.allowed_ = std::move(allowed_per_axis);
  return X;
}

int Subshift::symbol_index(const std::string& s) const {
  for (std::size_t i = 0; i < alphabet_.size(); ++i)
    if (alphabet_[i] == s) return static_cast<int>(i);
  throw ConfigError("unknown symbol '" + s + "'");
}

bool Subshift::allows(int axis, int from, int to) const {
  if (full_) return true;
  return allowed_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(from)]
                 [static_cast<std::size_t>(to)] != 0;
}

std::vector<std::vector<int>> Subshift::transition_matrix(int axis) const {
  if (full_) return std::vector<std::vector<int>>(alphabet_.size(),
                                                  std::vector<int>(alphabet_.size(), 1));
  return allowed_.at(static_cast<std::size_t>(axis));
}

bool Subshift::irreducible() const {
  if (dimension_ != 1) throw PreconditionError("irreducibility check requires dimension 1");
  const int k = alphabet_size();
  std::vector<std::vector<int>> reach(static_cast<std::size_t>(k),
                                      std::vector<int>(static_cast<std::size_t>(k), 0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) reach[i][j] = allows(0, i, j) ? 1 : 0;
  for (int m = 0; m < k; ++m)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (reach[i][m] && reach[m][j]) reach[i][j] = 1;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (!reach[i][j]) return false;
  return true;
}

FiniteSubset Subshift::exhaustion(int m) const {
  if (m < 1) throw ConfigError("exhaustion index must be >= 1");
  return FiniteSubset::box(dimension_, m - 1);
}

Pattern::Pattern(FiniteSubset support_, std::vector<int> symbols_)
    : support(std::move(support_)), symbols(std::move(symbols_)) {
  if (symbols.size() != support.size())
    throw ConfigError("pattern symbols/support size mismatch");
}

std::uint64_t pattern_code(const Pattern& p, int alphabet_size) {
  std::uint64_t code = 0;
  for (int s : p.symbols) {
    if (s < 0 || s >= alphabet_size) throw ConfigError("symbol index out of range");
    code = code * static_cast<std::uint64_t>(alphabet_size) + static_cast<std::uint64_t>(s);
  }
  return code;
}

Pattern pattern_from_code(const FiniteSubset& support, std::uint64_t code, int alphabet_size) {
  std::vector<int> symbols(support.size());
  for (std::size_t i = support.size(); i-- > 0;) {
    symbols[i] = static_cast<int>(code % static_cast<std::uint64_t>(alphabet_size));
    code /= static_cast<std::uint64_t>(alphabet_size);
  }
  return Pattern(support, std::move(symbols));
}

std::string pattern_string(const Subshift& X, const Pattern& p) {
  bool single = true;
  for (const auto& s : X.alphabet()) single = single && s.size() == 1;
  std::string out;
  for (std::size_t i = 0; i < p.symbols.size(); ++i) {
    if (!single && i) out += ',';
    out += X.alphabet()[static_cast<std::size_t>(p.symbols[i])];
  }
  return out;
}

namespace detail {

std::vector<std::size_t> subindex(const FiniteSubset& joint, const FiniteSubset& window) {
  std::vector<std::size_t> pos;
  pos.reserve(window.size());
  for (const auto& g : window.elements()) {
    auto idx = joint.index_of(g);
    if (!idx) throw ConfigError("window site missing from joint support");
    pos.push_back(*idx);
  }
  return pos;
}

std::uint64_t subcode(const std::vector<int>& joint_symbols,
                      const std::vector<std::size_t>& positions, int alphabet_size) {
  std::uint64_t code = 0;
  for (std::size_t p : positions)
    code = code * static_cast<std::uint64_t>(alphabet_size) +
           static_cast<std::uint64_t>(joint_symbols[p]);
  return code;
}

}  // namespace detail

namespace {

// Adjacency hooks for backtracking: for each site, the earlier-or-fixed
// neighbors it must be checked against, with the transition direction.
struct NeighborCheck {
  std::size_t other;  // index in the joint support
  int axis;
  bool other_is_source;  // true: transition other -> this; false: this -> other
};

std::vector<std::vector<NeighborCheck>> neighbor_table(const Subshift& X,
                                                       const FiniteSubset& sites) {
  const int d = X.dimension();
  std::vector<std::vector<NeighborCheck>> table(sites.size());
  if (X.is_full()) return table;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const GroupElement& g = sites.elements()[i];
    for (int a = 0; a < d; ++a) {
      std::vector<std::int64_t> e(static_cast<std::size_t>(g.dim()), 0);
      e[static_cast<std::size_t>(a)] = 1;
      const GroupElement step(e);
      if (auto j = sites.index_of(g - step)) table[i].push_back({*j, a, true});
      if (auto j = sites.index_of(g + step)) table[i].push_back({*j, a, false});
    }
  }
  return table;
}

// Backtracking over the unassigned sites of `symbols` (marked -1), visiting
// every locally admissible completion. Fixed sites are validated against
// each other by the caller. Returns false when the visit count hits `cap`.
bool complete_patterns(const Subshift& X, const std::vector<std::vector<NeighborCheck>>& nbr,
                       std::vector<int>& symbols, const std::vector<std::size_t>& free_sites,
                       std::uint64_t cap, std::uint64_t& visited,
                       const std::function<void(const std::vector<int>&)>& visit) {
  const int k = X.alphabet_size();
  std::size_t depth = 0;
  std::vector<int> choice(free_sites.size(), -1);
  while (true) {
    if (depth == free_sites.size()) {
      if (visited >= cap) return false;
      ++visited;
      visit(symbols);
      if (depth == 0) return true;  // nothing free: single completion
      --depth;
    }
    // Advance the symbol at the current depth.
    bool advanced = false;
    while (!advanced) {
      const std::size_t site = free_sites[depth];
      int s = choice[depth] + 1;
      symbols[site] = -1;
      for (; s < k; ++s) {
        bool ok = true;
        for (const auto& c : nbr[site]) {
          const int other = symbols[c.other];
          if (other < 0) continue;
          if (c.other_is_source ? !X.allows(c.axis, other, s) : !X.allows(c.axis, s, other)) {
            ok = false;
            break;
          }
        }
        if (ok) break;
      }
      if (s < k) {
        choice[depth] = s;
        symbols[site] = s;
        ++depth;
        advanced = true;
      } else {
        choice[depth] = -1;
        if (depth == 0) return true;
        --depth;
      }
    }
  }
}

bool fixed_sites_admissible(const Subshift& X, const std::vector<std::vector<NeighborCheck>>& nbr,
                            const std::vector<int>& symbols) {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] < 0) continue;
    for (const auto& c : nbr[i]) {
      const int other = symbols[c.other];
      if (other < 0) continue;
      if (c.other_is_source ? !X.allows(c.axis, other, symbols[i])
                            : !X.allows(c.axis, symbols[i], other))
        return false;
    }
  }
  return true;
}

}  // namespace

bool locally_admissible(const Subshift& X, const Pattern& p) {
  for (int s : p.symbols)
    if (s < 0 || s >= X.alphabet_size()) return false;
  const auto nbr = neighbor_table(X, p.support);
  return fixed_sites_admissible(X, nbr, p.symbols);
}

double metric_distance(const Subshift& X, const Pattern& x, const Pattern& y, int m_max) {
  for (int m = 1; m <= m_max; ++m) {
    const FiniteSubset Em = X.exhaustion(m);
    for (const auto& g : Em.elements()) {
      auto ix = x.support.index_of(g);
      auto iy = y.support.index_of(g);
      if (!ix || !iy) throw PreconditionError("patterns do not cover exhaustion set E_" +
                                              std::to_string(m));
      if (x.symbols[*ix] != y.symbols[*iy]) return std::ldexp(1.0, -m);
    }
  }
  return std::ldexp(1.0, -(m_max + 1));  // agree on every compared set
}

void for_each_pattern(const Subshift& X, const FiniteSubset& F,
                      const std::function<void(const std::vector<int>&)>& visit,
                      std::uint64_t cap) {
  const auto nbr = neighbor_table(X, F);
  std::vector<int> symbols(F.size(), -1);
  std::vector<std::size_t> free_sites(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) free_sites[i] = i;
  std::uint64_t visited = 0;
  if (!complete_patterns(X, nbr, symbols, free_sites, cap, visited, visit))
    throw CapacityError("pattern enumeration on |F| = " + std::to_string(F.size()) +
                        " exceeds cap " + std::to_string(cap) + " (upper bound " +
                        std::to_string(std::pow(double(X.alphabet_size()), double(F.size()))) +
                        ")");
}

void for_each_pattern_grouped(const Subshift& X, const FiniteSubset& joint,
                              const FiniteSubset& outer,
                              const std::function<void(const std::vector<int>&)>& visit,
                              std::uint64_t cap) {
  const auto nbr = neighbor_table(X, joint);
  std::vector<int> symbols(joint.size(), -1);
  std::vector<std::size_t> order;
  order.reserve(joint.size());
  std::vector<bool> is_outer(joint.size(), false);
  for (const auto& g : outer.elements()) {
    auto idx = joint.index_of(g);
    if (!idx) throw ConfigError("outer set must be contained in the joint support");
    order.push_back(*idx);
    is_outer[*idx] = true;
  }
  for (std::size_t i = 0; i < joint.size(); ++i)
    if (!is_outer[i]) order.push_back(i);
  std::uint64_t visited = 0;
  if (!complete_patterns(X, nbr, symbols, order, cap, visited, visit))
    throw CapacityError("grouped enumeration on |joint| = " + std::to_string(joint.size()) +
                        " exceeds cap " + std::to_string(cap));
}

bool enumeration_is_exact(const Subshift& X, const FiniteSubset& F) {
  if (X.is_full()) return true;
  if (X.dimension() != 1) return false;
  const auto& e = F.elements();
  for (std::size_t i = 1; i < e.size(); ++i)
    if (e[i][0] != e[i - 1][0] + 1) return false;
  return true;
}

EnumerationResult enumerate_patterns(const Subshift& X, const FiniteSubset& F,
                                     std::uint64_t cap) {
  EnumerationResult out;
  out.exact = enumeration_is_exact(X, F);
  for_each_pattern(
      X, F, [&](const std::vector<int>& symbols) { out.patterns.emplace_back(F, symbols); }, cap);
  return out;
}

double count_patterns(const Subshift& X, const FiniteSubset& F, std::uint64_t cap) {
  const int k = X.alphabet_size();
  if (X.is_full()) return std::pow(static_cast<double>(k), static_cast<double>(F.size()));
  if (X.dimension() == 1) {
    // Split into maximal runs of consecutive sites; constraints act only
    // inside a run, so counts multiply across runs.
    const auto& e = F.elements();
    double total = 1.0;
    std::size_t i = 0;
    while (i < e.size()) {
      std::size_t j = i;
      while (j + 1 < e.size() && e[j + 1][0] == e[j][0] + 1) ++j;
      std::vector<double> cnt(static_cast<std::size_t>(k), 1.0);
      for (std::size_t step = i; step < j; ++step) {
        std::vector<double> nxt(static_cast<std::size_t>(k), 0.0);
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b)
            if (X.allows(0, a, b)) nxt[static_cast<std::size_t>(a)] += cnt[static_cast<std::size_t>(b)];
        cnt.swap(nxt);
      }
      double run = 0.0;
      for (double c : cnt) run += c;
      total *= run;
      i = j + 1;
    }
    return total;
  }
  std::uint64_t n = 0;
  for_each_pattern(X, F, [&](const std::vector<int>&) { ++n; }, cap);
  return static_cast<double>(n);
}

Potential::Potential(FiniteSubset window_, std::vector<double> table_, int alphabet_size)
    : window(std::move(window_)), table(std::move(table_)) {
  const std::uint64_t expected = checked_table_size(alphabet_size, window.size());
  if (table.size() != expected)
    throw ConfigError("potential table size " + std::to_string(table.size()) +
                      " does not match window (expected " + std::to_string(expected) + ")");
}

Potential zero_potential(const Subshift& X, const FiniteSubset& window) {
  return Potential(window,
                   std::vector<double>(checked_table_size(X.alphabet_size(), window.size()), 0.0),
                   X.alphabet_size());
}

Potential constant_potential(const Subshift& X, double c) {
  const FiniteSubset w = FiniteSubset::singleton(GroupElement::zero(X.dimension()));
  return Potential(w, std::vector<double>(static_cast<std::size_t>(X.alphabet_size()), c),
                   X.alphabet_size());
}

Potential single_site_potential(const Subshift& X, const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(X.alphabet_size()))
    throw ConfigError("single-site potential needs one value per symbol");
  const FiniteSubset w = FiniteSubset::singleton(GroupElement::zero(X.dimension()));
  return Potential(w, values, X.alphabet_size());
}

Potential pair_potential(const Subshift& X, const std::vector<std::vector<double>>& t) {
  if (X.dimension() != 1) throw ConfigError("pair potential requires dimension 1");
  const int k = X.alphabet_size();
  if (t.size() != static_cast<std::size_t>(k))
    throw ConfigError("pair potential table must be k x k");
  std::vector<double> table(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    if (t[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(k))
      throw ConfigError("pair potential table must be k x k");
    for (int j = 0; j < k; ++j)
      table[static_cast<std::size_t>(i * k + j)] = t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const FiniteSubset w(std::vector<GroupElement>{GroupElement{0}, GroupElement{1}});
  return Potential(w, std::move(table), k);
}

namespace {

// Shared maximization over admissible completions of partially fixed symbols.
double max_over_completions(const Subshift& X, const FiniteSubset& joint,
                            std::vector<int>& symbols,
                            const std::function<double(const std::vector<int>&)>& value,
                            std::uint64_t cap) {
  const auto nbr = neighbor_table(X, joint);
  if (!fixed_sites_admissible(X, nbr, symbols)) return kNegInf;
  std::vector<std::size_t> free_sites;
  for (std::size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i] < 0) free_sites.push_back(i);
  double best = kNegInf;
  std::uint64_t visited = 0;
  const bool done = complete_patterns(
      X, nbr, symbols, free_sites, cap, visited,
      [&](const std::vector<int>& s) { best = std::max(best, value(s)); });
  if (!done)
    throw CapacityError("collar enumeration exceeds cap " + std::to_string(cap));
  return best;
}

}  // namespace

double sup_on_cylinder(const Subshift& X, const Potential& phi, const FiniteSubset& F,
                       const Pattern& w, std::uint64_t cap) {
  if (w.support != F) throw ConfigError("cylinder pattern must live on F");
  const FiniteSubset joint = set_union(F, sumset(phi.window, F));
  // Positions of each translated window W + g inside the joint support.
  std::vector<std::vector<std::size_t>> positions;
  positions.reserve(F.size());
  for (const auto& g : F.elements())
    positions.push_back(detail::subindex(joint, translate(phi.window, -g)));

  std::vector<int> symbols(joint.size(), -1);
  for (std::size_t i = 0; i < F.size(); ++i)
    symbols[*joint.index_of(F.elements()[i])] = w.symbols[i];

  const int k = X.alphabet_size();
  return max_over_completions(
      X, joint, symbols,
      [&](const std::vector<int>& s) {
        double sum = 0.0;
        for (const auto& pos : positions) sum += phi.table[detail::subcode(s, pos, k)];
        return sum;
      },
      cap);
}

double cylinder_sup(const Subshift& X, const Potential& f, const Pattern& w, std::uint64_t cap) {
  const FiniteSubset joint = set_union(f.window, w.support);
  const auto pos = detail::subindex(joint, f.window);
  std::vector<int> symbols(joint.size(), -1);
  for (std::size_t i = 0; i < w.support.size(); ++i)
    symbols[*joint.index_of(w.support.elements()[i])] = w.symbols[i];
  const int k = X.alphabet_size();
  return max_over_completions(
      X, joint, symbols,
      [&](const std::vector<int>& s) { return f.table[detail::subcode(s, pos, k)]; }, cap);
}

Potential koopman(const Subshift& X, const Potential& phi) {
  (void)X;
  return phi;  // same table, now read as a vector of the Koopman space
}

double oscillation(const Subshift& X, const Potential& phi) {
  const GroupElement origin = GroupElement::zero(X.dimension());
  const auto origin_pos = phi.window.index_of(origin);
  const int k = X.alphabet_size();
  std::vector<double> lo(static_cast<std::size_t>(k),
                         std::numeric_limits<double>::infinity());
  std::vector<double> hi(static_cast<std::size_t>(k), kNegInf);
  for_each_pattern(X, phi.window, [&](const std::vector<int>& s) {
    const std::size_t bucket = origin_pos ? static_cast<std::size_t>(s[*origin_pos]) : 0;
    const double v = phi.table[pattern_code(Pattern(phi.window, s), k)];
    lo[bucket] = std::min(lo[bucket], v);
    hi[bucket] = std::max(hi[bucket], v);
  });
  double d = 0.0;
  for (int a = 0; a < k; ++a) {
    const std::size_t b = static_cast<std::size_t>(a);
    if (hi[b] >= lo[b]) d = std::max(d, hi[b] - lo[b]);
  }
  return d;
}

double exp_summability(const Subshift& X, const Potential& phi) {
  const GroupElement origin = GroupElement::zero(X.dimension());
  const auto origin_pos = phi.window.index_of(origin);
  const int k = X.alphabet_size();
  std::vector<double> hi(static_cast<std::size_t>(k), kNegInf);
  for_each_pattern(X, phi.window, [&](const std::vector<int>& s) {
    const std::size_t bucket = origin_pos ? static_cast<std::size_t>(s[*origin_pos]) : 0;
    const double v = phi.table[pattern_code(Pattern(phi.window, s), k)];
    hi[bucket] = std::max(hi[bucket], v);
  });
  double sum = 0.0;
  for (int a = 0; a < k; ++a) {
    const std::size_t b = static_cast<std::size_t>(a);
    if (origin_pos) {
      if (hi[b] > kNegInf) sum += std::exp(hi[b]);
    } else {
      sum += std::exp(hi[0]);
    }
  }
  return sum;
}

}  // namespace setmaps
