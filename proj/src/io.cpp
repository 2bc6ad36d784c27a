#include "setmaps/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "setmaps/errors.hpp"

namespace setmaps::io {

namespace {

const json& require(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("missing config key '" + key + "'");
  return j.at(key);
}

double require_number(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::string require_string(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return j;
}

GroupElement parse_group_element(const json& j, int expect_dim) {
  std::vector<std::int64_t> coords;
  if (j.is_number_integer()) {
    coords.push_back(j.get<std::int64_t>());
  } else if (j.is_array()) {
    for (const auto& c : j) {
      if (!c.is_number_integer()) throw ConfigError("group element coordinates must be integers");
      coords.push_back(c.get<std::int64_t>());
    }
  } else {
    throw ConfigError("group element must be an integer or an array of integers");
  }
  if (expect_dim > 0 && static_cast<int>(coords.size()) != expect_dim)
    throw ConfigError("group element has dimension " + std::to_string(coords.size()) +
                      ", expected " + std::to_string(expect_dim));
  return GroupElement(coords);
}

FiniteSubset parse_finite_subset(const json& j, int expect_dim) {
  if (!j.is_array() || j.empty()) throw ConfigError("finite subset must be a non-empty array");
  std::vector<GroupElement> elems;
  for (const auto& e : j) elems.push_back(parse_group_element(e, expect_dim));
  return FiniteSubset(std::move(elems));
}

int parse_group_dim(const json& j) {
  if (require_string(j, "type") != "Zd") throw ConfigError("only group type 'Zd' is supported");
  const double d = require_number(j, "d");
  if (d != 1 && d != 2) throw ConfigError("group dimension must be 1 or 2");
  return static_cast<int>(d);
}

FolnerSchedule parse_folner(const json& j, int dim) {
  const std::string type = require_string(j, "type");
  const auto n_min = static_cast<std::int64_t>(require_number(j, "n_min"));
  const auto n_max = static_cast<std::int64_t>(require_number(j, "n_max"));
  if (n_min > n_max) throw ConfigError("folner window range is empty");
  FolnerSchedule schedule = [&] {
    if (type == "boxes") return FolnerSchedule::boxes(dim, n_min, n_max);
    if (type == "intervals" || type == "corner_boxes")
      return FolnerSchedule::corner_boxes(dim, n_min, n_max);
    throw ConfigError("unknown folner type '" + type + "'");
  }();
  if (j.contains("points")) {
    std::vector<std::int64_t> pts;
    for (const auto& p : j.at("points")) pts.push_back(p.get<std::int64_t>());
    schedule = schedule.with_points(std::move(pts));
  }
  return schedule;
}

Representation parse_matrix_rep(const json& j, int group_dim) {
  if (require_string(j, "type") != "matrix")
    throw ConfigError("rep type must be 'matrix' (the Koopman rep comes from a subshift block)");
  const json& gens = require(j, "generators");
  std::vector<Eigen::MatrixXd> mats;
  for (int a = 1; a <= group_dim; ++a) {
    const std::string key = std::to_string(a);
    const json& m = require(gens, key);
    if (!m.is_array() || m.empty()) throw ConfigError("generator matrix must be a 2D array");
    const std::size_t rows = m.size();
    Eigen::MatrixXd M(rows, rows);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!m.at(r).is_array() || m.at(r).size() != rows)
        throw ConfigError("generator matrix must be square");
      for (std::size_t c = 0; c < rows; ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r).at(c).get<double>();
    }
    mats.push_back(std::move(M));
  }
  const std::string norm = j.contains("norm") ? j.at("norm").get<std::string>() : "euclidean";
  if (norm != "euclidean" && norm != "sup") throw ConfigError("norm must be 'euclidean' or 'sup'");
  return Representation::matrix(std::move(mats),
                                norm == "euclidean" ? NormKind::kEuclidean : NormKind::kSup);
}

std::shared_ptr<Subshift> parse_subshift(const json& j) {
  std::vector<std::string> alphabet;
  for (const auto& a : require(j, "alphabet")) alphabet.push_back(a.get<std::string>());
  const int dim = static_cast<int>(require_number(j, "dimension"));
  const json& cons = require(j, "constraints");
  const std::string type = require_string(cons, "type");
  if (type == "full")
    return std::make_shared<Subshift>(Subshift::full_shift(std::move(alphabet), dim));
  if (type != "nn") throw ConfigError("constraints type must be 'full' or 'nn'");
  auto parse_matrix = [&](const json& m) {
    std::vector<std::vector<int>> A;
    for (const auto& row : m) {
      std::vector<int> r;
      for (const auto& v : row) r.push_back(v.get<int>());
      A.push_back(std::move(r));
    }
    return A;
  };
  std::vector<std::vector<std::vector<int>>> per_axis;
  if (cons.contains("allowed_per_axis")) {
    for (const auto& m : cons.at("allowed_per_axis")) per_axis.push_back(parse_matrix(m));
  } else {
    per_axis.push_back(parse_matrix(require(cons, "allowed")));
    if (dim == 2) per_axis.push_back(per_axis.front());
  }
  return std::make_shared<Subshift>(
      Subshift::nearest_neighbor(std::move(alphabet), dim, std::move(per_axis)));
}

Potential parse_potential(const json& j, const Subshift& X) {
  const FiniteSubset window = parse_finite_subset(require(j, "window"), X.dimension());
  const json& table = require(j, "table");
  const int k = X.alphabet_size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (total > kDefaultPatternCap / static_cast<std::uint64_t>(k))
      throw CapacityError("potential window too large");
    total *= static_cast<std::uint64_t>(k);
  }
  std::vector<double> values(total, 0.0);
  for (std::uint64_t code = 0; code < total; ++code) {
    const Pattern p = pattern_from_code(window, code, k);
    const std::string key = pattern_string(X, p);
    if (table.contains(key)) values[code] = table.at(key).get<double>();
  }
  return Potential(window, std::move(values), k);
}

Vec parse_vec(const json& j, const Representation& rep) {
  if (rep.is_finite_dim()) {
    if (!j.is_array()) throw ConfigError("finite-dimensional vector must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    if (v.size() != rep.finite_space().dim) throw ConfigError("vector dimension mismatch");
    return Vec(std::move(v));
  }
  return Vec(parse_potential(j, *rep.local_space().shift));
}

SetMap parse_setmap(const json& j, Representation rep) {
  const std::string rule = require_string(j, "rule");
  if (rule == "additive") return SetMap::additive(rep, parse_vec(require(j, "v"), rep));
  if (rule == "boundary_perturbed") {
    Vec v = parse_vec(require(j, "v"), rep);
    Vec u = parse_vec(require(j, "u"), rep);
    FiniteSubset K = parse_finite_subset(require(j, "K"), rep.group_dim());
    return SetMap::boundary_perturbed(rep, std::move(v), std::move(u), std::move(K));
  }
  if (rule == "additive_sequence") {
    // v_n = (1 + c / n) v0: the parametric family used by the CLI.
    Vec base = parse_vec(require(j, "v"), rep);
    const double c = j.contains("c") ? j.at("c").get<double>() : 1.0;
    Representation r = rep;
    return SetMap::additive_sequence(rep, [r, base, c](std::size_t size) {
      return r.scale(1.0 + c / static_cast<double>(size), base);
    });
  }
  throw ConfigError("unknown set map rule '" + rule + "'");
}

MarkovMeasure parse_measure(const json& j) {
  const std::string type = require_string(j, "type");
  if (type == "iid" || type == "bernoulli") {
    const json& w = require(j, "weights");
    Eigen::VectorXd weights(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) weights(static_cast<Eigen::Index>(i)) = w.at(i).get<double>();
    return MarkovMeasure::iid(std::move(weights));
  }
  if (type == "markov") {
    const json& P = require(j, "P");
    const std::size_t k = P.size();
    Eigen::MatrixXd M(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < k; ++c) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = P.at(i).at(c).get<double>();
    return MarkovMeasure::from_transition(std::move(M));
  }
  throw ConfigError("unknown measure type '" + type + "'");
}

json group_element_to_json(const GroupElement& g) {
  json out = json::array();
  for (auto c : g.coords()) out.push_back(c);
  return out;
}

json finite_subset_to_json(const FiniteSubset& F) {
  json out = json::array();
  for (const auto& g : F.elements()) out.push_back(group_element_to_json(g));
  return out;
}

json setmap_to_json(const SetMap& phi) {
  json out;
  if (const auto* additive = std::get_if<SetMap::Additive>(&phi.rule())) {
    out["rule"] = "additive";
    out["v"] = vec_to_json(phi.rep(), additive->v);
  } else if (const auto* bp = std::get_if<SetMap::BoundaryPerturbed>(&phi.rule())) {
    out["rule"] = "boundary_perturbed";
    out["v"] = vec_to_json(phi.rep(), bp->v);
    out["u"] = vec_to_json(phi.rep(), bp->u);
    out["K"] = finite_subset_to_json(bp->K);
  } else if (std::holds_alternative<SetMap::AdditiveSequence>(phi.rule())) {
    out["rule"] = "additive_sequence";
  } else if (std::holds_alternative<SetMap::Stitched>(phi.rule())) {
    out["rule"] = "stitched";
  } else if (const auto* custom = std::get_if<SetMap::Custom>(&phi.rule())) {
    out["rule"] = "custom";
    out["label"] = custom->label;
  }
  return out;
}

json potential_to_json(const Subshift& X, const Potential& p) {
  json out;
  out["window"] = finite_subset_to_json(p.window);
  json table = json::object();
  for (std::uint64_t code = 0; code < p.table.size(); ++code)
    table[pattern_string(X, pattern_from_code(p.window, code, X.alphabet_size()))] =
        p.table[code];
  out["table"] = table;
  return out;
}

json vec_to_json(const Representation& rep, const Vec& v) {
  if (rep.is_finite_dim()) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.coords().size(); ++i) out.push_back(v.coords()(i));
    return out;
  }
  return potential_to_json(*rep.local_space().shift, v.local_fn());
}

json report_to_json(const ConvergenceReport& r) {
  json out;
  json series = json::array();
  for (const auto& e : r.series)
    series.push_back(json{{"n", e.n}, {"size", e.set_size}, {"value", e.value}});
  out["series"] = series;
  out["tail_sup"] = r.tail_sup;
  out["extrapolated_limit"] = r.extrapolated_limit;
  out["trend"] = to_string(r.trend);
  out["stabilized"] = r.stabilized;
  return out;
}

json pressure_to_json(const PressureEstimate& p) {
  json out;
  out["series"] = report_to_json(p.series)["series"];
  out["limit"] = p.limit_estimate;
  out["method"] = p.method == PressureMethod::kTransferMatrix ? "transfer_matrix" : "enumeration";
  if (p.log_spectral_radius) out["log_spectral_radius"] = *p.log_spectral_radius;
  out["methods_agree"] = p.methods_agree;
  out["stabilized"] = p.stabilized;
  out["locally_admissible_bound"] = p.locally_admissible_bound;
  return out;
}

json measure_to_json(const MarkovMeasure& mu) {
  json out;
  out["type"] = mu.is_iid() ? "iid" : "markov";
  json p = json::array();
  for (Eigen::Index i = 0; i < mu.stationary().size(); ++i) p.push_back(mu.stationary()(i));
  out["stationary"] = p;
  if (!mu.is_iid()) {
    json P = json::array();
    for (Eigen::Index i = 0; i < mu.transition().rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j2 = 0; j2 < mu.transition().cols(); ++j2)
        row.push_back(mu.transition()(i, j2));
      P.push_back(row);
    }
    out["P"] = P;
  }
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) os << ',';
    os << header[i];
  }
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << format_double(row[i]);
    }
    os << '\n';
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  out << content;
}

std::string report_csv(const ConvergenceReport& r, const std::string& value_column) {
  std::vector<std::vector<double>> rows;
  for (const auto& e : r.series)
    rows.push_back({static_cast<double>(e.n), static_cast<double>(e.set_size), e.value});
  return csv_table({"n", "size", value_column}, rows);
}

}  // namespace setmaps::io
