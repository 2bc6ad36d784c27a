#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "setmaps/group.hpp"
#include "setmaps/representation.hpp"
#include "setmaps/setmap.hpp"
#include "setmaps/subshift.hpp"
#include "setmaps/thermo.hpp"

namespace setmaps::io {

using json = nlohmann::ordered_json;

// Parsing. Malformed input throws ConfigError.

json load_json_file(const std::string& path);

GroupElement parse_group_element(const json& j, int expect_dim);
FiniteSubset parse_finite_subset(const json& j, int expect_dim);

/// {"type": "Zd", "d": 1}
int parse_group_dim(const json& j);

/// {"type": "boxes" | "intervals", "n_min": 4, "n_max": 64, "points": [...]?}
FolnerSchedule parse_folner(const json& j, int dim);

/// {"type": "matrix", "generators": {"1": [[...]], ...}, "norm": "euclidean" | "sup"}
Representation parse_matrix_rep(const json& j, int group_dim);

/// {"alphabet": ["0","1"], "dimension": 1,
///  "constraints": {"type": "full"} | {"type": "nn", "allowed": [[...]]}
///                | {"type": "nn", "allowed_per_axis": [[[...]],[[...]]]}}
std::shared_ptr<Subshift> parse_subshift(const json& j);

/// {"window": [[0],[1]], "table": {"01": 1.0, ...}}; missing entries are 0.
Potential parse_potential(const json& j, const Subshift& X);

Vec parse_vec(const json& j, const Representation& rep);

/// {"rule": "additive" | "boundary_perturbed" | "additive_sequence", ...}
SetMap parse_setmap(const json& j, Representation rep);

MarkovMeasure parse_measure(const json& j);

// Serialization (stable key order, UTF-8).

json group_element_to_json(const GroupElement& g);
json finite_subset_to_json(const FiniteSubset& F);
/// Serializes the built-in rules (additive, boundary_perturbed); sequences
/// and custom evaluators are reported by label only.
json setmap_to_json(const SetMap& phi);
json vec_to_json(const Representation& rep, const Vec& v);
json potential_to_json(const Subshift& X, const Potential& p);
json report_to_json(const ConvergenceReport& r);
json pressure_to_json(const PressureEstimate& p);
json measure_to_json(const MarkovMeasure& mu);

// CSV: comma separated, header row, '.' decimal, no locale dependence.

std::string format_double(double x);
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);
void write_file(const std::string& path, const std::string& content);
std::string report_csv(const ConvergenceReport& r, const std::string& value_column);

}  // namespace setmaps::io
