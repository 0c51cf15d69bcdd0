// biocif: cumulative incidence estimation for left-truncated biobank
// cohorts, plus the simulation and coverage tooling around it.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biocif/core_data.hpp"
#include "biocif/errors.hpp"
#include "biocif/estimators.hpp"
#include "biocif/harness.hpp"
#include "biocif/inference.hpp"
#include "biocif/io.hpp"
#include "biocif/simulate.hpp"

#ifndef BIOCIF_VERSION
#define BIOCIF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace biocif;

namespace {

enum ExitCode { ok = 0, usage = 1, io_failure = 2, validation = 3, numeric = 4 };

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::vector<EstimatorKind> parse_estimators(const std::vector<std::string>& names) {
  std::vector<EstimatorKind> out;
  for (const auto& name : names) {
    EstimatorKind k;
    if (name == "aj")
      k = EstimatorKind::aj;
    else if (name == "new")
      k = EstimatorKind::new_estimator;
    else if (name == "comb" || name == "combination")
      k = EstimatorKind::combination;
    else if (name == "tie_general" || name == "tie-general")
      k = EstimatorKind::tie_general;
    else
      throw std::invalid_argument("unknown estimator '" + name + "' (expected aj, new, comb, tie_general)");
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  if (out.empty()) throw std::invalid_argument("no estimators requested");
  return out;
}

// Manifest written before anything else and completed at the end.
class Manifest {
 public:
  Manifest(std::string subcommand, fs::path dir) : dir_(std::move(dir)) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["tool_version"] = BIOCIF_VERSION;
    doc_["started_at"] = timestamp();
    doc_["finished_at"] = nullptr;
    doc_["status"] = "running";
    doc_["output_dir"] = dir_.string();
  }
  json& operator[](const char* key) { return doc_[key]; }
  void write() const { write_json(dir_ / "manifest.json", doc_); }
  void finish() {
    doc_["finished_at"] = timestamp();
    doc_["status"] = "complete";
    write();
  }

 private:
  fs::path dir_;
  json doc_;
};

struct DesignFlags {
  double c_lower = 40.0;
  double c_upper = 69.0;
  double tau = 80.0;

  void add(CLI::App* app) {
    app->add_option("--c-lower", c_lower, "Minimum recruitment age c_L")->capture_default_str();
    app->add_option("--c-upper", c_upper, "Maximum recruitment age c_U")->capture_default_str();
    app->add_option("--tau", tau, "Largest age of interest")->capture_default_str();
  }
  StudyDesign design() const {
    StudyDesign d{c_lower, c_upper, tau};
    d.check();
    return d;
  }
};

struct ScenarioFlags {
  std::string code = "1111";
  std::string config;

  void add(CLI::App* app) {
    app->add_option("--scenario", code, "Four-digit scenario code d1d2d3d4")->capture_default_str();
    app->add_option("--config", config, "Scenario config file (JSON); overrides --scenario");
  }
  ScenarioConfig resolve() const {
    if (!config.empty()) return scenario_from_json(read_json(config));
    return parse_scenario_code(code);
  }
};

json counts_json(const ClassCounts& c) {
  return {{"prevalent", c.prevalent},
          {"incident", c.incident},
          {"died_disease_free", c.died_disease_free},
          {"alive_disease_free", c.alive_disease_free},
          {"prevalent_before_c_lower", c.prevalent_before_lower},
          {"total", c.total()}};
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string input;
  std::string out;
  DesignFlags design;
  // Empty means the default set aj,new,comb, where the combination is
  // skipped with a warning when the two estimands differ.
  std::vector<std::string> estimators;
  std::string transform = "arcsine-root";
  double alpha = 0.05;
  std::vector<double> band_range;
  std::size_t draws = 250;
  std::optional<std::uint64_t> seed;
  bool auxiliary = false;
  bool no_band = false;
  bool allow_mixed = false;
};

int run_estimate(const EstimateArgs& a, bool band_only) {
  const fs::path out = a.out;
  const auto design = a.design.design();
  const bool default_set = a.estimators.empty();
  const std::vector<std::string> names = default_set ? std::vector<std::string>{"aj", "new", "comb"} : a.estimators;
  auto kinds = parse_estimators(names);
  const Transform transform{parse_transform(a.transform)};
  const std::uint64_t seed = a.seed ? *a.seed : entropy_seed();
  double band_lo = design.c_lower + 10.0, band_hi = design.tau;
  if (!a.band_range.empty()) {
    if (a.band_range.size() != 2) throw std::invalid_argument("--band-range takes two ages");
    band_lo = a.band_range[0];
    band_hi = a.band_range[1];
  }
  const bool bands = band_only || !a.no_band;
  const auto terms = a.auxiliary ? InfluenceTerms::main_plus_auxiliary : InfluenceTerms::main_only;

  Manifest manifest(band_only ? "band" : "estimate", out);
  manifest["inputs"] = {a.input};
  manifest["seed"] = seed;
  manifest["seed_source"] = a.seed ? "flag" : "entropy";
  manifest["parameters"] = {{"design", {{"c_lower", design.c_lower}, {"c_upper", design.c_upper}, {"tau", design.tau}}},
                            {"estimators", names},
                            {"transform", to_string(transform.kind)},
                            {"alpha", a.alpha},
                            {"band", bands},
                            {"band_range", {band_lo, band_hi}},
                            {"B", a.draws},
                            {"terms_included", to_string(terms)},
                            {"allow_mixed_estimand", a.allow_mixed}};
  manifest.write();

  const Cohort cohort = load_cohort(a.input, design);
  json summary = {{"n", cohort.size()}, {"class_counts", counts_json(cohort.class_counts())}};

  const bool need_aj = std::find(kinds.begin(), kinds.end(), EstimatorKind::aj) != kinds.end() ||
                       std::find(kinds.begin(), kinds.end(), EstimatorKind::combination) != kinds.end();
  const bool need_new = std::any_of(kinds.begin(), kinds.end(), [](EstimatorKind k) { return k != EstimatorKind::aj; });
  CifEstimate aj, fresh;
  std::vector<const StepCurve*> curves;
  if (need_aj) {
    aj = aalen_johansen(cohort);
    curves.push_back(&aj.curve);
  }
  if (need_new) {
    fresh = new_cif(cohort);
    curves.push_back(&fresh.curve);
  }
  json warnings = json::array();
  if (need_aj && need_new)
    if (auto w = insufficient_data_warning(aj, fresh)) warnings.push_back(*w);
  if (default_set && !a.allow_mixed && fresh.curve.at_minus(design.c_lower) > 0.0) {
    kinds.erase(std::remove(kinds.begin(), kinds.end(), EstimatorKind::combination), kinds.end());
    warnings.push_back("combination skipped: the new estimate has mass below c_L, so the two estimands differ");
  }

  // Influence grid: every knot up to tau, plus the band step ages.
  std::vector<double> grid;
  for (double t : merged_knots(curves))
    if (t <= design.tau) grid.push_back(t);
  std::vector<double> band_ages;
  if (bands) {
    if (!(band_lo < band_hi && band_hi <= design.tau))
      throw std::invalid_argument("--band-range must satisfy lower < upper <= tau");
    band_ages = band_grid(curves, band_lo, band_hi);
    grid.insert(grid.end(), band_ages.begin(), band_ages.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) grid.push_back(design.tau);

  InfluenceMatrix psi_aj, psi_new;
  if (need_aj) psi_aj = influence_aj(cohort, grid, terms);
  if (need_new) psi_new = influence_new(cohort, grid, terms);
  MultiplierDraws z;
  if (bands) z = draw_multipliers(cohort.size(), a.draws, seed);

  json per_estimator = json::object();
  for (EstimatorKind kind : kinds) {
    CifEstimate est;
    InfluenceMatrix psi;
    switch (kind) {
      case EstimatorKind::aj: est = aj; psi = psi_aj; break;
      case EstimatorKind::new_estimator: est = fresh; psi = psi_new; break;
      case EstimatorKind::tie_general: est = tie_general_cif(cohort); psi = psi_new; break;
      case EstimatorKind::combination:
        est = combination_cif(aj, fresh, a.allow_mixed);
        psi = influence_combination(psi_aj, psi_new);
        break;
    }
    const fs::path dir = out / to_string(kind);
    const auto var = variance_curve(psi);
    json meta = curve_json(est);
    for (const auto& w : psi.warnings) meta["warnings"].push_back(w);
    if (!band_only) {
      write_text(dir / "curve.csv", curve_csv(est));
      write_json(dir / "curve.json", meta);
      const auto ci = pointwise_ci(est, var, transform, a.alpha);
      write_text(dir / "ci.csv", ci_csv(ci));
      write_json(dir / "ci.json", ci_json(ci));
    }
    json entry = {{"estimand_tag", to_string(est.estimand)}, {"n_used", est.n_used},
                  {"value_at_tau", est.curve.at(design.tau)}};
    if (bands) {
      const auto band = multiplier_band(psi, est, var, band_lo, band_hi, z, a.alpha, transform, seed);
      write_text(dir / "band.csv", band_csv(band));
      write_json(dir / "band.json", band_json(band));
      entry["critical_value"] = band.critical_value;
    }
    for (const auto& w : est.warnings) warnings.push_back(w);
    per_estimator[to_string(kind)] = entry;
  }
  summary["estimators"] = per_estimator;
  summary["warnings"] = warnings;
  write_json(out / "summary.json", summary);
  for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
  manifest.finish();
  return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  ScenarioFlags scenario;
  std::size_t n = 5000;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  const fs::path out = a.out;
  const auto cfg = a.scenario.resolve();
  const std::uint64_t seed = a.seed ? *a.seed : entropy_seed();
  Manifest manifest("simulate", out);
  manifest["inputs"] = a.scenario.config.empty() ? json::array() : json{a.scenario.config};
  manifest["seed"] = seed;
  manifest["seed_source"] = a.seed ? "flag" : "entropy";
  manifest["parameters"] = {{"scenario", to_json(cfg)}, {"n", a.n}};
  manifest.write();

  const Cohort cohort = sample_cohort(cfg, a.n, seed);
  std::ostringstream csv;
  write_cohort_csv(csv, cohort);
  write_text(out / "cohort.csv", csv.str());
  write_json(out / "summary.json", {{"scenario", cfg.code}, {"n", cohort.size()},
                                    {"class_counts", counts_json(cohort.class_counts())}});
  manifest.finish();
  return ok;
}

// ---------------------------------------------------------------- coverage

struct CoverageArgs {
  ScenarioFlags scenario;
  std::size_t n = 5000;
  std::size_t reps = 200;
  std::size_t draws = 250;
  double alpha = 0.05;
  std::vector<double> grid;
  std::vector<double> band_range;
  std::vector<std::string> estimators{"aj", "new", "comb"};
  std::string transform = "arcsine-root";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool auxiliary = false;
  bool no_band = false;
  bool allow_mixed = false;
  std::string out;
};

int run_coverage(const CoverageArgs& a) {
  const fs::path out = a.out;
  StudyOptions opt;
  opt.scenario = a.scenario.resolve();
  opt.n = a.n;
  opt.n_reps = a.reps;
  opt.draws = a.draws;
  opt.alpha = a.alpha;
  opt.grid = a.grid;
  const auto range = default_band_range(opt.scenario);
  opt.band_lower = range.first;
  opt.band_upper = range.second;
  if (!a.band_range.empty()) {
    if (a.band_range.size() != 2) throw std::invalid_argument("--band-range takes two ages");
    opt.band_lower = a.band_range[0];
    opt.band_upper = a.band_range[1];
  }
  opt.bands = !a.no_band;
  opt.estimators = parse_estimators(a.estimators);
  opt.transform = parse_transform(a.transform);
  opt.terms = a.auxiliary ? InfluenceTerms::main_plus_auxiliary : InfluenceTerms::main_only;
  opt.allow_mixed_estimand = a.allow_mixed;
  opt.seed = a.seed ? *a.seed : entropy_seed();
  opt.threads = a.threads;
  opt.check();

  Manifest manifest("coverage", out);
  manifest["inputs"] = a.scenario.config.empty() ? json::array() : json{a.scenario.config};
  manifest["seed"] = opt.seed;
  manifest["seed_source"] = a.seed ? "flag" : "entropy";
  manifest["parameters"] = {{"scenario", to_json(opt.scenario)},
                            {"n", opt.n},
                            {"n_reps", opt.n_reps},
                            {"B", opt.draws},
                            {"alpha", opt.alpha},
                            {"grid", opt.report_grid()},
                            {"band", opt.bands},
                            {"band_range", {opt.band_lower, opt.band_upper}},
                            {"estimators", a.estimators},
                            {"transform", to_string(opt.transform)},
                            {"terms_included", to_string(opt.terms)},
                            {"allow_mixed_estimand", opt.allow_mixed_estimand},
                            {"threads", opt.threads}};
  manifest.write();

  const auto summary = run_study(opt);
  write_json(out / "summary.json", to_json(summary));
  for (const auto& e : summary.estimators)
    write_text(out / (std::string(to_string(e.estimator)) + ".csv"), summary_csv(e));
  if (summary.find(EstimatorKind::aj) && summary.find(EstimatorKind::new_estimator))
    write_json(out / "efficiency.json", to_json(compare_estimators(summary)));
  manifest.finish();
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cumulative incidence estimation for left-truncated cohorts with prevalent cases"};
  app.set_version_flag("--version", BIOCIF_VERSION);
  app.require_subcommand(1);

  EstimateArgs est_args, band_args;
  auto add_estimate_flags = [](CLI::App* cmd, EstimateArgs& a, bool band_only) {
    cmd->add_option("--input,-i", a.input, "Cohort CSV (id,v1,v2,delta1,delta2,r)")->required();
    cmd->add_option("--out,-o", a.out, "Output directory")->required();
    a.design.add(cmd);
    cmd->add_option("--estimators,--estimator", a.estimators,
                    "Comma-separated: aj,new,comb,tie_general (default aj,new,comb)")
        ->delimiter(',');
    cmd->add_option("--transform", a.transform, "identity, log or arcsine-root")->capture_default_str();
    cmd->add_option("--alpha", a.alpha, "1 - confidence level")->capture_default_str();
    cmd->add_option("--band-range", a.band_range, "Band age range LO HI (default c_L+10 to tau)")->expected(2);
    cmd->add_option("--B", a.draws, "Multiplier draws for the band")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Seed for the multipliers (default: system entropy)");
    cmd->add_flag("--auxiliary", a.auxiliary, "Include auxiliary influence terms");
    cmd->add_flag("--allow-mixed-estimand", a.allow_mixed, "Allow the combination when onset before c_L occurs");
    if (!band_only) cmd->add_flag("--no-band", a.no_band, "Skip the simultaneous band");
  };
  auto* estimate = app.add_subcommand("estimate", "Estimate CIFs, point-wise intervals and bands from a cohort CSV");
  add_estimate_flags(estimate, est_args, false);
  auto* band = app.add_subcommand("band", "Simultaneous confidence bands only");
  add_estimate_flags(band, band_args, true);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Draw a synthetic cohort from a scenario");
  sim_args.scenario.add(simulate);
  simulate->add_option("--n", sim_args.n, "Cohort size after truncation")->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "Seed (default: system entropy)");
  simulate->add_option("--out,-o", sim_args.out, "Output directory")->required();

  CoverageArgs cov_args;
  auto* coverage = app.add_subcommand("coverage", "Replicated simulation study with coverage against the oracle");
  cov_args.scenario.add(coverage);
  coverage->add_option("--n", cov_args.n, "Cohort size per replication")->capture_default_str();
  coverage->add_option("--reps", cov_args.reps, "Replications")->capture_default_str();
  coverage->add_option("--B", cov_args.draws, "Multiplier draws per band")->capture_default_str();
  coverage->add_option("--alpha", cov_args.alpha, "1 - confidence level")->capture_default_str();
  coverage->add_option("--grid", cov_args.grid, "Comma-separated report ages (default: integer ages)")->delimiter(',');
  coverage->add_option("--band-range", cov_args.band_range, "Band age range LO HI (default per scenario)")
      ->expected(2);
  coverage->add_option("--estimators", cov_args.estimators, "Comma-separated: aj,new,comb,tie_general")
      ->delimiter(',')
      ->capture_default_str();
  coverage->add_option("--transform", cov_args.transform, "identity, log or arcsine-root")->capture_default_str();
  coverage->add_option("--seed", cov_args.seed, "Master seed (default: system entropy)");
  coverage->add_option("--threads", cov_args.threads, "Worker threads (0: all cores)")->capture_default_str();
  coverage->add_flag("--auxiliary", cov_args.auxiliary, "Include auxiliary influence terms");
  coverage->add_flag("--no-band", cov_args.no_band, "Skip simultaneous bands");
  coverage->add_flag("--allow-mixed-estimand", cov_args.allow_mixed, "Allow the combination in family 3");
  coverage->add_option("--out,-o", cov_args.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*estimate) return run_estimate(est_args, false);
    if (*band) return run_estimate(band_args, true);
    if (*simulate) return run_simulate(sim_args);
    if (*coverage) return run_coverage(cov_args);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    for (const auto& r : e.rejections()) std::cerr << "  row " << r.row << ": " << r.rule << "\n";
    return validation;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return io_failure;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return numeric;
  } catch (const ReplicationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numeric;
  }
  return usage;
}
