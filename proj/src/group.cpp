#include "setmaps/group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace setmaps {

GroupElement::GroupElement(std::initializer_list<std::int64_t> coords) {
  if (coords.size() == 0 || coords.size() > kMaxDim)
    throw ConfigError("group element dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  c_.fill(0);
  dim_ = static_cast<int>(coords.size());
  std::size_t i = 0;
  for (auto v : coords) c_[i++] = v;
}

GroupElement::GroupElement(const std::vector<std::int64_t>& coords) {
  if (coords.empty() || coords.size() > kMaxDim)
    throw ConfigError("group element dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  c_.fill(0);
  dim_ = static_cast<int>(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) c_[i] = coords[i];
}

GroupElement GroupElement::zero(int dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("unsupported group dimension");
  GroupElement g;
  g.dim_ = dim;
  return g;
}

void GroupElement::check_compatible(const GroupElement& o) const {
  if (dim_ != o.dim_) throw ConfigError("group elements of different dimension");
}

GroupElement GroupElement::operator+(const GroupElement& o) const {
  check_compatible(o);
  GroupElement r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[static_cast<std::size_t>(i)] += o.c_[static_cast<std::size_t>(i)];
  return r;
}

GroupElement GroupElement::operator-(const GroupElement& o) const {
  check_compatible(o);
  GroupElement r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[static_cast<std::size_t>(i)] -= o.c_[static_cast<std::size_t>(i)];
  return r;
}

GroupElement GroupElement::operator-() const {
  GroupElement r = *this;
  for (int i = 0; i < dim_; ++i) r.c_[static_cast<std::size_t>(i)] = -r.c_[static_cast<std::size_t>(i)];
  return r;
}

bool GroupElement::operator==(const GroupElement& o) const {
  if (dim_ != o.dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)]) return false;
  return true;
}

bool GroupElement::operator<(const GroupElement& o) const {
  check_compatible(o);
  for (int i = 0; i < dim_; ++i) {
    if (c_[static_cast<std::size_t>(i)] != o.c_[static_cast<std::size_t>(i)])
      return c_[static_cast<std::size_t>(i)] < o.c_[static_cast<std::size_t>(i)];
  }
  return false;
}

std::int64_t GroupElement::linf_norm() const {
  std::int64_t m = 0;
  for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(c_[static_cast<std::size_t>(i)]));
  return m;
}

std::vector<std::int64_t> GroupElement::coords() const {
  return std::vector<std::int64_t>(c_.begin(), c_.begin() + dim_);
}

std::string GroupElement::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim_; ++i) {
    if (i) os << ',';
    os << c_[static_cast<std::size_t>(i)];
  }
  os << ')';
  return os.str();
}

FiniteSubset::FiniteSubset(std::vector<GroupElement> elems) : elems_(std::move(elems)) {
  if (elems_.empty()) throw ConfigError("finite subset must be non-empty");
  const int d = elems_.front().dim();
  for (const auto& g : elems_)
    if (g.dim() != d) throw ConfigError("finite subset elements of mixed dimension");
  std::sort(elems_.begin(), elems_.end());
  elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
}

FiniteSubset FiniteSubset::singleton(const GroupElement& g) {
  return FiniteSubset(std::vector<GroupElement>{g});
}

FiniteSubset FiniteSubset::interval(std::int64_t a, std::int64_t b) {
  if (a >= b) throw ConfigError("empty interval");
  std::vector<GroupElement> v;
  v.reserve(static_cast<std::size_t>(b - a));
  for (std::int64_t x = a; x < b; ++x) v.push_back(GroupElement{x});
  return FiniteSubset(std::move(v));
}

FiniteSubset FiniteSubset::box(int dim, std::int64_t n) {
  if (n < 0) throw ConfigError("box radius must be >= 0");
  if (dim == 1) return interval(-n, n + 1);
  std::vector<GroupElement> v;
  if (dim == 2) {
    v.reserve(static_cast<std::size_t>((2 * n + 1) * (2 * n + 1)));
    for (std::int64_t x = -n; x <= n; ++x)
      for (std::int64_t y = -n; y <= n; ++y) v.push_back(GroupElement{x, y});
    return FiniteSubset(std::move(v));
  }
  throw ConfigError("boxes implemented for d in {1, 2}");
}

FiniteSubset FiniteSubset::corner_box(int dim, std::int64_t n) {
  if (n < 1) throw ConfigError("corner box side must be >= 1");
  if (dim == 1) return interval(0, n);
  if (dim == 2) {
    std::vector<GroupElement> v;
    v.reserve(static_cast<std::size_t>(n * n));
    for (std::int64_t x = 0; x < n; ++x)
      for (std::int64_t y = 0; y < n; ++y) v.push_back(GroupElement{x, y});
    return FiniteSubset(std::move(v));
  }
  throw ConfigError("corner boxes implemented for d in {1, 2}");
}

bool FiniteSubset::contains(const GroupElement& g) const {
  return std::binary_search(elems_.begin(), elems_.end(), g);
}

std::optional<std::size_t> FiniteSubset::index_of(const GroupElement& g) const {
  auto it = std::lower_bound(elems_.begin(), elems_.end(), g);
  if (it == elems_.end() || !(*it == g)) return std::nullopt;
  return static_cast<std::size_t>(it - elems_.begin());
}

FiniteSubset translate(const FiniteSubset& F, const GroupElement& g) {
  std::vector<GroupElement> v;
  v.reserve(F.size());
  for (const auto& f : F.elements()) v.push_back(f - g);
  return FiniteSubset(std::move(v));
}

FiniteSubset sumset(const FiniteSubset& K, const FiniteSubset& F) {
  std::vector<GroupElement> v;
  v.reserve(K.size() * F.size());
  for (const auto& k : K.elements())
    for (const auto& f : F.elements()) v.push_back(k + f);
  return FiniteSubset(std::move(v));
}

FiniteSubset set_union(const FiniteSubset& a, const FiniteSubset& b) {
  std::vector<GroupElement> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.elements().begin(), a.elements().end());
  v.insert(v.end(), b.elements().begin(), b.elements().end());
  return FiniteSubset(std::move(v));
}

std::size_t symmetric_difference_size(const FiniteSubset& a, const FiniteSubset& b) {
  const auto& x = a.elements();
  const auto& y = b.elements();
  std::size_t i = 0, j = 0, diff = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] == y[j]) {
      ++i;
      ++j;
    } else if (x[i] < y[j]) {
      ++diff;
      ++i;
    } else {
      ++diff;
      ++j;
    }
  }
  return diff + (x.size() - i) + (y.size() - j);
}

double invariance_defect(const FiniteSubset& K, const FiniteSubset& F) {
  const FiniteSubset KF = sumset(K, F);
  return static_cast<double>(symmetric_difference_size(KF, F)) / static_cast<double>(F.size());
}

InvariancePair::InvariancePair(FiniteSubset K_, double delta_) : K(std::move(K_)), delta(delta_) {
  if (!(delta > 0.0)) throw ConfigError("invariance delta must be positive");
}

bool is_invariant(const FiniteSubset& F, const InvariancePair& pair) {
  // Compare integer counts to avoid division noise at the boundary.
  const FiniteSubset KF = sumset(pair.K, F);
  return static_cast<double>(symmetric_difference_size(KF, F)) <=
         pair.delta * static_cast<double>(F.size());
}

FolnerSchedule::FolnerSchedule(Generator gen, std::vector<std::int64_t> points, std::string name)
    : gen_(std::move(gen)), points_(std::move(points)), name_(std::move(name)) {
  if (points_.empty()) throw ConfigError("Folner schedule window is empty");
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (points_[i] <= points_[i - 1]) throw ConfigError("Folner window must be strictly increasing");
}

static std::vector<std::int64_t> contiguous(std::int64_t a, std::int64_t b) {
  if (a > b) throw ConfigError("Folner window range is empty");
  std::vector<std::int64_t> v;
  v.reserve(static_cast<std::size_t>(b - a + 1));
  for (std::int64_t n = a; n <= b; ++n) v.push_back(n);
  return v;
}

FolnerSchedule FolnerSchedule::boxes(int dim, std::int64_t n_min, std::int64_t n_max) {
  if (n_min < 0) throw ConfigError("box schedule requires n_min >= 0");
  return FolnerSchedule([dim](std::int64_t n) { return FiniteSubset::box(dim, n); },
                        contiguous(n_min, n_max), "boxes");
}

FolnerSchedule FolnerSchedule::corner_boxes(int dim, std::int64_t n_min, std::int64_t n_max) {
  if (n_min < 1) throw ConfigError("corner box schedule requires n_min >= 1");
  return FolnerSchedule([dim](std::int64_t n) { return FiniteSubset::corner_box(dim, n); },
                        contiguous(n_min, n_max), "corner_boxes");
}

FolnerSchedule FolnerSchedule::custom(Generator gen, std::int64_t n_min, std::int64_t n_max,
                                      std::string name) {
  return FolnerSchedule(std::move(gen), contiguous(n_min, n_max), std::move(name));
}

FolnerSchedule FolnerSchedule::with_points(std::vector<std::int64_t> points) const {
  return FolnerSchedule(gen_, std::move(points), name_);
}

std::vector<FiniteSubset> FolnerSchedule::window() const {
  std::vector<FiniteSubset> out;
  out.reserve(points_.size());
  for (auto n : points_) out.push_back(gen_(n));
  return out;
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::kDecreasing: return "decreasing";
    case Trend::kIncreasing: return "increasing";
    case Trend::kStable: return "stable";
    case Trend::kOscillating: return "oscillating";
  }
  return "unknown";
}

ConvergenceReport analyze_series(std::vector<ConvergenceReport::Entry> entries,
                                 const TailOptions& opts) {
  if (entries.size() < 3) throw ConfigError("series needs at least 3 points");
  ConvergenceReport r;
  r.series = std::move(entries);

  const std::size_t count = r.series.size();
  std::size_t tail_len = static_cast<std::size_t>(
      std::ceil(opts.tail_fraction * static_cast<double>(count)));
  tail_len = std::max<std::size_t>(2, std::min(tail_len, count));
  r.tail_begin = count - tail_len;

  r.tail_sup = r.series[r.tail_begin].value;
  r.tail_inf = r.series[r.tail_begin].value;
  r.min_over_window = r.series[0].value;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = r.series[i].value;
    r.min_over_window = std::min(r.min_over_window, v);
    if (i >= r.tail_begin) {
      r.tail_sup = std::max(r.tail_sup, v);
      r.tail_inf = std::min(r.tail_inf, v);
    }
  }

  // Least-squares fit value ~ a + b / |F| over the tail.
  double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t i = r.tail_begin; i < count; ++i) {
    const double x = 1.0 / static_cast<double>(r.series[i].set_size);
    const double y = r.series[i].value;
    s1 += 1.0;
    sx += x;
    sxx += x * x;
    sy += y;
    sxy += x * y;
  }
  const double det = s1 * sxx - sx * sx;
  if (std::abs(det) > 1e-300) {
    r.extrapolated_limit = (sxx * sy - sx * sxy) / det;
  } else {
    r.extrapolated_limit = sy / s1;  // all sizes equal; fall back to the mean
  }

  // Trend over the tail.
  const double eps = 1e-12 * (1.0 + std::abs(r.tail_sup));
  bool non_inc = true, non_dec = true;
  for (std::size_t i = r.tail_begin + 1; i < count; ++i) {
    const double d = r.series[i].value - r.series[i - 1].value;
    if (d > eps) non_inc = false;
    if (d < -eps) non_dec = false;
  }
  const double spread = r.tail_sup - r.tail_inf;
  if (spread <= opts.tolerance)
    r.trend = Trend::kStable;
  else if (non_inc)
    r.trend = Trend::kDecreasing;
  else if (non_dec)
    r.trend = Trend::kIncreasing;
  else
    r.trend = Trend::kOscillating;

  r.stabilized = spread <= opts.tolerance;
  return r;
}

ConvergenceReport limsup_along(const std::vector<std::pair<FiniteSubset, double>>& values,
                               const TailOptions& opts) {
  std::vector<ConvergenceReport::Entry> entries;
  entries.reserve(values.size());
  std::int64_t i = 0;
  for (const auto& [F, v] : values) entries.push_back({i++, F.size(), v});
  return analyze_series(std::move(entries), opts);
}

}  // namespace setmaps
