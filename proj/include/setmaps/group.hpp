#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "setmaps/errors.hpp"

namespace setmaps {

/// Element of Z^d (d <= kMaxDim). Group law is coordinatewise addition,
/// the identity is the zero vector and the inverse is negation.
class GroupElement {
 public:
  static constexpr int kMaxDim = 4;

  GroupElement() : dim_(1) { c_.fill(0); }
  GroupElement(std::initializer_list<std::int64_t> coords);
  explicit GroupElement(const std::vector<std::int64_t>& coords);

  static GroupElement zero(int dim);

  int dim() const { return dim_; }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }

  GroupElement operator+(const GroupElement& o) const;
  GroupElement operator-(const GroupElement& o) const;
  GroupElement operator-() const;

  bool operator==(const GroupElement& o) const;
  bool operator!=(const GroupElement& o) const { return !(*this == o); }
  bool operator<(const GroupElement& o) const;  // lexicographic

  std::int64_t linf_norm() const;
  std::vector<std::int64_t> coords() const;
  std::string to_string() const;

 private:
  void check_compatible(const GroupElement& o) const;

  std::array<std::int64_t, kMaxDim> c_;
  int dim_;
};

/// Non-empty finite subset of Z^d, stored sorted and deduplicated.
class FiniteSubset {
 public:
  explicit FiniteSubset(std::vector<GroupElement> elems);

  static FiniteSubset singleton(const GroupElement& g);
  /// Integer interval [a, b) in Z. Requires a < b.
  static FiniteSubset interval(std::int64_t a, std::int64_t b);
  /// Centered box [-n, n]^d. Requires n >= 0.
  static FiniteSubset box(int dim, std::int64_t n);
  /// Corner box [0, n)^d. Requires n >= 1.
  static FiniteSubset corner_box(int dim, std::int64_t n);

  std::size_t size() const { return elems_.size(); }
  int dim() const { return elems_.front().dim(); }
  const std::vector<GroupElement>& elements() const { return elems_; }
  bool contains(const GroupElement& g) const;
  /// Index of g in the sorted element list, if present.
  std::optional<std::size_t> index_of(const GroupElement& g) const;

  bool operator==(const FiniteSubset& o) const { return elems_ == o.elems_; }
  bool operator!=(const FiniteSubset& o) const { return !(*this == o); }

 private:
  std::vector<GroupElement> elems_;
};

/// g . F = F g^{-1}; additively {f - g : f in F}.
FiniteSubset translate(const FiniteSubset& F, const GroupElement& g);

/// {k + f : k in K, f in F}.
FiniteSubset sumset(const FiniteSubset& K, const FiniteSubset& F);

FiniteSubset set_union(const FiniteSubset& a, const FiniteSubset& b);

std::size_t symmetric_difference_size(const FiniteSubset& a, const FiniteSubset& b);

/// |KF delta F| / |F|.
double invariance_defect(const FiniteSubset& K, const FiniteSubset& F);

/// A (K, delta) invariance requirement; delta must be positive.
struct InvariancePair {
  FiniteSubset K;
  double delta;

  InvariancePair(FiniteSubset K_, double delta_);
};

/// True iff |KF delta F| <= delta |F|.
bool is_invariant(const FiniteSubset& F, const InvariancePair& pair);

/// Følner schedule: a rule n -> F_n together with the index window used
/// for numerics. Built-in generators are nested and exhaust the group.
class FolnerSchedule {
 public:
  using Generator = std::function<FiniteSubset(std::int64_t)>;

  /// Centered boxes [-n, n]^d over a contiguous index range.
  static FolnerSchedule boxes(int dim, std::int64_t n_min, std::int64_t n_max);
  /// Corner boxes [0, n)^d (intervals when d = 1).
  static FolnerSchedule corner_boxes(int dim, std::int64_t n_min, std::int64_t n_max);
  /// Arbitrary generator over a contiguous range.
  static FolnerSchedule custom(Generator gen, std::int64_t n_min, std::int64_t n_max,
                               std::string name = "custom");

  /// Same generator, explicit (strictly increasing) index list, e.g. geometric.
  FolnerSchedule with_points(std::vector<std::int64_t> points) const;

  const std::vector<std::int64_t>& points() const { return points_; }
  FiniteSubset set_at(std::int64_t n) const { return gen_(n); }
  const std::string& name() const { return name_; }

  /// Materializes F_n for every n in the window, in increasing order.
  std::vector<FiniteSubset> window() const;

 private:
  FolnerSchedule(Generator gen, std::vector<std::int64_t> points, std::string name);

  Generator gen_;
  std::vector<std::int64_t> points_;
  std::string name_;
};

enum class Trend { kDecreasing, kIncreasing, kStable, kOscillating };

std::string to_string(Trend t);

/// Diagnostics for a series indexed by a Følner window. The tail estimate
/// is a single-schedule stand-in for limsup_{F->G}; reports are labeled as
/// such and flag tails that have not stabilized.
struct ConvergenceReport {
  struct Entry {
    std::int64_t n;
    std::size_t set_size;
    double value;
  };

  std::vector<Entry> series;
  std::size_t tail_begin = 0;       // first index of the tail segment
  double tail_sup = 0.0;            // max over the tail
  double tail_inf = 0.0;            // min over the tail
  double min_over_window = 0.0;     // min over the whole window
  double extrapolated_limit = 0.0;  // least-squares a + b/|F| fit over the tail
  Trend trend = Trend::kStable;
  bool stabilized = false;

  double last_value() const { return series.back().value; }
};

struct TailOptions {
  double tail_fraction = 0.25;  // last quarter of the window
  double tolerance = 1e-6;      // stabilization threshold
};

/// Tail-sup estimate of limsup along a Følner window. Requires >= 3 points.
ConvergenceReport limsup_along(const std::vector<std::pair<FiniteSubset, double>>& values,
                               const TailOptions& opts = {});

/// Same, with explicit (n, |F_n|, value) entries.
ConvergenceReport analyze_series(std::vector<ConvergenceReport::Entry> entries,
                                 const TailOptions& opts = {});

}  // namespace setmaps
