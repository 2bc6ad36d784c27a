// Batch entry point: folner | analyze | realize | pressure | varprin.
// Exit codes: 0 success, 2 config error, 3 precondition failure, 4 resource cap.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "setmaps/errors.hpp"
#include "setmaps/io.hpp"

namespace sm = setmaps;
using sm::io::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 12345;
  std::optional<double> tol;
};

struct Wiring {
  int group_dim = 1;
  sm::FolnerSchedule schedule = sm::FolnerSchedule::boxes(1, 4, 64);
  std::shared_ptr<sm::Subshift> shift;  // null for matrix reps
  std::optional<sm::Representation> rep;
  std::optional<sm::SetMap> setmap;
};

json load_config(const CommonArgs& args) { return sm::io::load_json_file(args.config_path); }

sm::FolnerSchedule default_schedule(int dim, bool subshift_mode) {
  if (subshift_mode) {
    return dim == 1 ? sm::FolnerSchedule::corner_boxes(1, 2, 12)
                    : sm::FolnerSchedule::boxes(2, 1, 2);
  }
  return dim == 1 ? sm::FolnerSchedule::boxes(1, 4, 64) : sm::FolnerSchedule::boxes(2, 2, 12);
}

Wiring wire(const json& cfg, bool need_setmap) {
  Wiring w;
  const bool subshift_mode = cfg.contains("subshift");
  if (cfg.contains("rep") && subshift_mode)
    throw sm::ConfigError("config must contain exactly one of 'rep' or 'subshift'");

  if (subshift_mode) {
    w.shift = sm::io::parse_subshift(cfg.at("subshift"));
    w.group_dim = w.shift->dimension();
  } else if (cfg.contains("group")) {
    w.group_dim = sm::io::parse_group_dim(cfg.at("group"));
  }

  w.schedule = cfg.contains("folner") ? sm::io::parse_folner(cfg.at("folner"), w.group_dim)
                                      : default_schedule(w.group_dim, subshift_mode);

  if (subshift_mode) {
    // The solver window comes from the generating data; bare potentials wrap
    // into additive maps.
    json setmap_block;
    if (cfg.contains("setmap"))
      setmap_block = cfg.at("setmap");
    else if (cfg.contains("potential"))
      setmap_block = json{{"rule", "additive"}, {"v", cfg.at("potential")}};
    else if (need_setmap)
      throw sm::ConfigError("config needs a 'setmap' or 'potential' block");
    if (!setmap_block.is_null()) {
      const sm::Potential v = sm::io::parse_potential(setmap_block.at("v"), *w.shift);
      sm::FiniteSubset window = v.window;
      if (setmap_block.contains("u"))
        window = sm::set_union(
            window, sm::io::parse_potential(setmap_block.at("u"), *w.shift).window);
      w.rep = sm::Representation::koopman(w.shift, window);
      w.setmap = sm::io::parse_setmap(setmap_block, *w.rep);
    }
  } else if (cfg.contains("rep")) {
    w.rep = sm::io::parse_matrix_rep(cfg.at("rep"), w.group_dim);
    if (cfg.contains("setmap"))
      w.setmap = sm::io::parse_setmap(cfg.at("setmap"), *w.rep);
    else if (need_setmap)
      throw sm::ConfigError("config needs a 'setmap' block");
  } else if (need_setmap) {
    throw sm::ConfigError("config needs a 'rep' or 'subshift' block");
  }
  return w;
}

void emit(const CommonArgs& args, const std::string& name, const json& body,
          const std::vector<std::pair<std::string, std::string>>& csv_files) {
  std::filesystem::create_directories(args.out_dir);
  json out;
  out["schema"] = 1;
  for (const auto& [k, v] : body.items()) out[k] = v;
  sm::io::write_file(args.out_dir + "/" + name + ".json", out.dump(2) + "\n");
  for (const auto& [file, content] : csv_files)
    sm::io::write_file(args.out_dir + "/" + file, content);
  std::cout << name << ": wrote " << args.out_dir << "/" << name << ".json" << std::endl;
}

int cmd_folner(const CommonArgs& args) {
  const json cfg = load_config(args);
  const int dim = cfg.contains("group") ? sm::io::parse_group_dim(cfg.at("group")) : 1;
  const sm::FolnerSchedule schedule = cfg.contains("folner")
                                          ? sm::io::parse_folner(cfg.at("folner"), dim)
                                          : default_schedule(dim, false);
  std::vector<sm::GroupElement> gens;
  if (cfg.contains("generators")) {
    for (const auto& g : cfg.at("generators")) gens.push_back(sm::io::parse_group_element(g, dim));
  } else {
    for (int a = 0; a < dim; ++a) {
      std::vector<std::int64_t> c(static_cast<std::size_t>(dim), 0);
      c[static_cast<std::size_t>(a)] = 1;
      gens.push_back(sm::GroupElement(c));
    }
  }

  std::vector<std::string> header{"n", "size"};
  for (const auto& g : gens) header.push_back("defect_" + g.to_string());
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<sm::ConvergenceReport::Entry>> series(gens.size());
  for (auto n : schedule.points()) {
    const sm::FiniteSubset F = schedule.set_at(n);
    std::vector<double> row{static_cast<double>(n), static_cast<double>(F.size())};
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const double d = sm::invariance_defect(sm::FiniteSubset::singleton(gens[i]), F);
      row.push_back(d);
      series[i].push_back({n, F.size(), d});
    }
    rows.push_back(std::move(row));
  }

  bool all_decreasing = true;
  json summary = json::array();
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const sm::ConvergenceReport r = sm::analyze_series(series[i]);
    const bool ok = r.trend == sm::Trend::kDecreasing || r.trend == sm::Trend::kStable;
    all_decreasing = all_decreasing && ok;
    summary.push_back(json{{"generator", sm::io::group_element_to_json(gens[i])},
                           {"tail_sup", r.tail_sup},
                           {"extrapolated_limit", r.extrapolated_limit},
                           {"trend", sm::to_string(r.trend)},
                           {"stabilized_decrease", ok}});
  }
  emit(args, "folner", json{{"defects", summary}, {"stabilized_decrease", all_decreasing}},
       {{"folner.csv", sm::io::csv_table(header, rows)}});
  return all_decreasing ? 0 : 3;
}

int cmd_analyze(const CommonArgs& args) {
  const json cfg = load_config(args);
  const Wiring w = wire(cfg, true);
  const double tol = args.tol.value_or(cfg.contains("tol") ? cfg.at("tol").get<double>() : 0.05);

  const sm::EquivarianceReport eq = sm::check_equivariance(*w.setmap, w.schedule, 32, args.seed);
  json body;
  body["equivariant"] = json{{"passed", eq.passed}, {"max_defect", eq.max_defect}};
  body["vert_sup"] = sm::vert_sup(*w.setmap, w.schedule);
  const sm::ConvergenceReport vg = sm::vert_g(*w.setmap, w.schedule);
  body["vert_g"] = sm::io::report_to_json(vg);
  std::vector<std::pair<std::string, std::string>> csvs{
      {"analyze_vert_g.csv", sm::io::report_csv(vg, "value")}};
  if (eq.passed) {
    const sm::AdditivityResult aa = sm::test_asymptotically_additive(*w.setmap, w.schedule, tol);
    body["aa"] = json{{"passed", aa.passed},
                      {"gap", aa.gap},
                      {"tol", tol},
                      {"v", sm::io::vec_to_json(w.setmap->rep(), aa.best)}};
    csvs.emplace_back("analyze_residuals.csv", sm::io::report_csv(aa.residual_series, "residual"));
  } else {
    body["aa"] = "skipped (set map is not equivariant)";
  }
  emit(args, "analyze", body, csvs);
  return 0;
}

int cmd_realize(const CommonArgs& args) {
  const json cfg = load_config(args);
  const Wiring w = wire(cfg, true);
  const double tol = args.tol.value_or(cfg.contains("tol") ? cfg.at("tol").get<double>() : 0.05);
  std::vector<double> eps;
  if (cfg.contains("eps_levels"))
    for (const auto& e : cfg.at("eps_levels")) eps.push_back(e.get<double>());

  const sm::RealizationResult res = sm::realize(*w.setmap, w.schedule, eps);
  json body;
  body["v"] = sm::io::vec_to_json(w.setmap->rep(), res.v);
  body["residual_estimate"] = res.residual_estimate;
  body["cauchy_ok"] = res.cauchy_ok;
  json levels = json::array();
  for (const auto& [e, v] : res.epsilon_schedule) levels.push_back(json{{"achieved_eps", e}});
  body["eps_schedule"] = levels;

  if (cfg.contains("W")) {
    if (!w.setmap->rep().is_finite_dim())
      throw sm::PreconditionError("dichotomy classification needs a finite-dimensional rep");
    const json& Wb = cfg.at("W").at("basis");
    const int dim = w.setmap->rep().finite_space().dim;
    Eigen::MatrixXd basis(dim, static_cast<Eigen::Index>(Wb.size()));
    for (std::size_t c = 0; c < Wb.size(); ++c)
      for (int r = 0; r < dim; ++r) basis(r, static_cast<Eigen::Index>(c)) = Wb.at(c).at(static_cast<std::size_t>(r)).get<double>();
    const sm::DichotomyResult d = sm::dichotomy_classify(*w.setmap, basis, w.schedule, tol);
    json dj;
    dj["verdict"] = d.verdict == sm::DichotomyCase::kB1
                        ? "B1"
                        : (d.verdict == sm::DichotomyCase::kB2 ? "B2" : "out_of_hypothesis");
    dj["relative_gap"] = d.relative_gap;
    dj["membership_residual"] = d.membership_residual;
    dj["flagged_inconsistent"] = d.flagged_inconsistent;
    if (d.verdict != sm::DichotomyCase::kOutOfHypothesis)
      dj["witness"] = sm::io::vec_to_json(w.setmap->rep(), d.witness);
    body["dichotomy"] = dj;
    if (d.verdict == sm::DichotomyCase::kOutOfHypothesis) {
      emit(args, "realize", body,
           {{"realize_residuals.csv", sm::io::report_csv(res.residual_series, "residual")}});
      std::cerr << "realize: not relatively asymptotically additive (gap " << d.relative_gap
                << ")" << std::endl;
      return 3;
    }
  }
  emit(args, "realize", body,
       {{"realize_residuals.csv", sm::io::report_csv(res.residual_series, "residual")}});
  return 0;
}

int cmd_pressure(const CommonArgs& args) {
  const json cfg = load_config(args);
  const Wiring w = wire(cfg, true);
  if (!w.shift) throw sm::ConfigError("pressure needs a 'subshift' block");

  json body;
  std::vector<std::pair<std::string, std::string>> csvs;
  const bool bare_potential = cfg.contains("potential") && !cfg.contains("setmap");
  if (bare_potential) {
    const sm::PressureEstimate pe = sm::pressure(*w.shift, *w.setmap, w.schedule);
    body["pressure"] = sm::io::pressure_to_json(pe);
    csvs.emplace_back("pressure_series.csv", sm::io::report_csv(pe.series, "log_Z_over_size"));
  } else {
    const sm::PressureTransferReport rep = sm::pressure_of_realization(*w.shift, *w.setmap, w.schedule);
    body["pressure"] = sm::io::pressure_to_json(rep.pressure_phi);
    body["pressure_realized"] = sm::io::pressure_to_json(rep.pressure_realized);
    body["sandwich_ok"] = rep.sandwich_ok;
    body["realization_residual"] = rep.realization.residual_estimate;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.gap_series.size(); ++i)
      rows.push_back({static_cast<double>(rep.pressure_phi.series.series[i].n),
                      static_cast<double>(rep.pressure_phi.series.series[i].set_size),
                      rep.eps_series[i], rep.gap_series[i]});
    csvs.emplace_back("pressure_series.csv",
                      sm::io::report_csv(rep.pressure_phi.series, "log_Z_over_size"));
    csvs.emplace_back("pressure_gap.csv", sm::io::csv_table({"n", "size", "eps", "gap"}, rows));
  }
  emit(args, "pressure", body, csvs);
  return 0;
}

int cmd_varprin(const CommonArgs& args) {
  const json cfg = load_config(args);
  const Wiring w = wire(cfg, true);
  if (!w.shift) throw sm::ConfigError("varprin needs a 'subshift' block");
  const std::string family =
      cfg.contains("family") ? cfg.at("family").get<std::string>() : "bernoulli";
  sm::VariationalOptions opts;
  opts.seed = args.seed;
  if (cfg.contains("bernoulli_step")) opts.bernoulli_step = cfg.at("bernoulli_step").get<double>();
  if (args.tol) opts.certificate_tol = *args.tol;

  const sm::VariationalReport rep = sm::variational_certificate(
      *w.shift, *w.setmap,
      family == "markov" ? sm::MeasureFamily::kMarkov : sm::MeasureFamily::kBernoulli,
      w.schedule, opts);
  json body;
  body["pressure"] = rep.pressure_estimate;
  body["family"] = family;
  body["family_sup"] = rep.family_sup;
  body["argmax"] = sm::io::measure_to_json(rep.argmax);
  body["gap"] = rep.gap;
  body["one_sided_ok"] = rep.one_sided_ok;
  body["certificate_ok"] = rep.certificate_ok;
  body["argmax_integral"] = rep.argmax_integral;
  body["argmax_series_integral"] = rep.argmax_series_integral;
  emit(args, "varprin", body, {});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded G-equivariant set maps: Folner diagnostics, additive realization, "
               "pressure, and variational certificates"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string command;
  for (const auto& name : {"folner", "analyze", "realize", "pressure", "varprin"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "JSON config path")->required();
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", args.seed, "RNG seed for sampled checks");
    sub->add_option("--tol", args.tol, "tolerance override");
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (command == "folner") return cmd_folner(args);
    if (command == "analyze") return cmd_analyze(args);
    if (command == "realize") return cmd_realize(args);
    if (command == "pressure") return cmd_pressure(args);
    if (command == "varprin") return cmd_varprin(args);
    std::cerr << "unknown command" << std::endl;
    return 2;
  } catch (const sm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const sm::PreconditionError& e) {
    std::cerr << "precondition failure: " << e.what() << std::endl;
    return 3;
  } catch (const sm::CapacityError& e) {
    std::cerr << "resource cap: " << e.what() << std::endl;
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
