#include "biocif/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "biocif/io.hpp"
#include "biocif/rng.hpp"

namespace biocif {

namespace {

bool wants(const StudyOptions& opt, EstimatorKind k) {
  return std::find(opt.estimators.begin(), opt.estimators.end(), k) != opt.estimators.end();
}

}  // namespace

void StudyOptions::check() const {
  scenario.check();
  if (n < 1 || n_reps < 1) throw std::invalid_argument("study: n and n_reps must be positive");
  if (bands && draws < 2) throw std::invalid_argument("study: need at least 2 multiplier draws");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("study: alpha must lie in (0, 1)");
  if (estimators.empty()) throw std::invalid_argument("study: no estimators requested");
  const double tau = scenario.design.tau;
  if (bands && !(band_lower < band_upper && band_upper <= tau && band_lower > 0.0))
    throw std::invalid_argument("study: band range must satisfy 0 < lower < upper <= tau");
  for (double t : grid)
    if (!(t > 0.0 && t <= tau)) throw std::invalid_argument("study: report ages must lie in (0, tau]");
  if (wants(*this, EstimatorKind::combination) && scenario.t1_setting == 3 && !allow_mixed_estimand)
    throw std::invalid_argument(
        "study: the combination averages two different estimands when onset before c_L is possible; "
        "pass allow_mixed_estimand to run it anyway");
}

std::vector<double> StudyOptions::report_grid() const {
  std::vector<double> out = grid;
  if (out.empty()) {
    double start = scenario.design.c_lower;
    if (bands) start = std::min(start, band_lower);
    for (double t = std::ceil(start); t <= scenario.design.tau; t += 1.0) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t rep) {
  return derive_seed(derive_seed(master, stream::replication), rep);
}

ReplicationError::ReplicationError(std::size_t rep, std::uint64_t seed, const std::string& what)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "replication " << rep << " (seed " << seed << ") failed: " << what;
        return os.str();
      }()),
      rep_(rep),
      seed_(seed) {}

double oracle_target(EstimatorKind kind, const OracleValue& v) {
  switch (kind) {
    case EstimatorKind::aj: return v.event_free;
    case EstimatorKind::new_estimator:
    case EstimatorKind::tie_general: return v.conditional_tau;
    case EstimatorKind::combination: return 0.5 * (v.event_free + v.conditional_tau);
  }
  return v.conditional_tau;
}

namespace {

std::size_t index_of(const std::vector<double>& grid, double t) {
  return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

ReplicationOutcome run_replication(const StudyOptions& opt, const OracleFunction& oracle, std::size_t rep) {
  ReplicationOutcome out;
  out.rep = rep;
  out.seed = replication_seed(opt.seed, rep);
  const Cohort cohort = sample_cohort(opt.scenario, opt.n, out.seed);
  const auto report = opt.report_grid();

  const bool need_aj = wants(opt, EstimatorKind::aj) || wants(opt, EstimatorKind::combination);
  const bool need_new = !(opt.estimators.size() == 1 && opt.estimators[0] == EstimatorKind::aj);

  CifEstimate aj, fresh;
  std::vector<const StepCurve*> curves;
  if (need_aj) {
    aj = aalen_johansen(cohort);
    append(out.warnings, aj.warnings);
    curves.push_back(&aj.curve);
  }
  if (need_new) {
    fresh = new_cif(cohort);
    append(out.warnings, fresh.warnings);
    curves.push_back(&fresh.curve);
  }

  // One grid for every estimator: report ages plus the band step ages.
  std::vector<double> grid = report;
  std::vector<double> band_ages;
  if (opt.bands) {
    band_ages = band_grid(curves, opt.band_lower, opt.band_upper);
    grid.insert(grid.end(), band_ages.begin(), band_ages.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  InfluenceMatrix psi_aj, psi_new;
  if (need_aj) {
    psi_aj = influence_aj(cohort, grid, opt.terms);
    append(out.warnings, psi_aj.warnings);
  }
  if (need_new) {
    psi_new = influence_new(cohort, grid, opt.terms);
    append(out.warnings, psi_new.warnings);
  }

  MultiplierDraws z;
  if (opt.bands) z = draw_multipliers(opt.n, opt.draws, out.seed);

  std::vector<OracleValue> truth;
  for (double t : grid) truth.push_back(oracle(t));
  const OracleValue truth_end = oracle(opt.band_upper);

  const Transform transform{opt.transform};
  for (EstimatorKind kind : opt.estimators) {
    const CifEstimate* est = nullptr;
    const InfluenceMatrix* psi = nullptr;
    CifEstimate comb;
    InfluenceMatrix psi_comb;
    switch (kind) {
      case EstimatorKind::aj:
        est = &aj;
        psi = &psi_aj;
        break;
      case EstimatorKind::new_estimator:
        est = &fresh;
        psi = &psi_new;
        break;
      case EstimatorKind::tie_general:
        // Same estimator as new_cif for any tie pattern, so it shares the
        // influence matrix.
        comb = tie_general_cif(cohort);
        est = &comb;
        psi = &psi_new;
        break;
      case EstimatorKind::combination:
        comb = combination_cif(aj, fresh, opt.allow_mixed_estimand);
        psi_comb = influence_combination(psi_aj, psi_new);
        est = &comb;
        psi = &psi_comb;
        break;
    }
    const auto var = variance_curve(*psi);
    const auto ci = pointwise_ci(*est, var, transform, opt.alpha);

    EstimatorOutcome eo;
    eo.estimator = kind;
    for (std::size_t k = 0; k < report.size(); ++k) {
      const std::size_t g = index_of(grid, report[k]);
      const double target = oracle_target(kind, truth[g]);
      eo.estimate.push_back(ci.estimate[g]);
      eo.standard_error.push_back(ci.standard_error[g]);
      eo.covered.push_back(ci.lower[g] <= target && target <= ci.upper[g]);
      eo.ci_width.push_back(ci.upper[g] - ci.lower[g]);
    }

    if (opt.bands) {
      const auto band =
          multiplier_band(*psi, *est, var, opt.band_lower, opt.band_upper, z, opt.alpha, transform, out.seed);
      append(out.warnings, band.warnings);
      // The estimate is constant on [a_k, a_{k+1}) and the target is
      // continuous and nondecreasing, so checking both ends suffices.
      bool covered = true;
      double width = 0.0;
      for (std::size_t k = 0; k < band.ages.size(); ++k) {
        const std::size_t g = index_of(grid, band.ages[k]);
        const double left = oracle_target(kind, truth[g]);
        const double right = oracle_target(kind, k + 1 < band.ages.size() ? truth[g + 1] : truth_end);
        if (left < band.lower[k] || right > band.upper[k]) covered = false;
        width += band.upper[k] - band.lower[k];
      }
      eo.band_covered = covered;
      eo.band_width = width / static_cast<double>(band.ages.size());
      eo.critical_value = band.critical_value;
    }
    out.estimators.push_back(std::move(eo));
  }
  return out;
}

namespace {

// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double binomial_se(double p, std::size_t reps) { return std::sqrt(p * (1.0 - p) / static_cast<double>(reps)); }

EstimandTag tag_of(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::aj: return EstimandTag::aj_conditional;
    case EstimatorKind::combination: return EstimandTag::combined;
    default: return EstimandTag::new_conditional;
  }
}

}  // namespace

const EstimatorSummary* ReplicationSummary::find(EstimatorKind kind) const {
  for (const auto& e : estimators)
    if (e.estimator == kind) return &e;
  return nullptr;
}

ReplicationSummary summarize(const StudyOptions& opt, const OracleFunction& oracle,
                             const std::vector<ReplicationOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("summarize: no replications");
  ReplicationSummary s;
  s.scenario = opt.scenario.code;
  s.n = opt.n;
  s.n_reps = outcomes.size();
  s.draws = opt.draws;
  s.alpha = opt.alpha;
  s.band_lower = opt.band_lower;
  s.band_upper = opt.band_upper;
  s.bands = opt.bands;
  s.transform = opt.transform;
  s.terms = opt.terms;
  s.seed = opt.seed;

  const auto report = opt.report_grid();
  const std::size_t reps = outcomes.size();
  for (std::size_t e = 0; e < opt.estimators.size(); ++e) {
    EstimatorSummary es;
    es.estimator = opt.estimators[e];
    es.estimand = tag_of(es.estimator);
    for (std::size_t k = 0; k < report.size(); ++k) {
      std::vector<double> values, ses, widths;
      double hits = 0.0;
      for (const auto& o : outcomes) {
        const auto& eo = o.estimators[e];
        values.push_back(eo.estimate[k]);
        ses.push_back(eo.standard_error[k]);
        widths.push_back(eo.ci_width[k]);
        hits += eo.covered[k] ? 1.0 : 0.0;
      }
      const auto truth = oracle(report[k]);
      AgeSummary a;
      a.age = report[k];
      a.oracle = oracle_target(es.estimator, truth);
      a.oracle_unrestricted = es.estimator == EstimatorKind::aj ? truth.event_free
                              : es.estimator == EstimatorKind::combination
                                  ? 0.5 * (truth.event_free + truth.conditional)
                                  : truth.conditional;
      a.mean = mean(values);
      a.median = quantile(values, 0.5);
      a.sd = sd(values);
      a.iqr = quantile(values, 0.75) - quantile(values, 0.25);
      a.mean_se = mean(ses);
      a.coverage = hits / static_cast<double>(reps);
      a.coverage_se = binomial_se(a.coverage, reps);
      a.ci_width = mean(widths);
      a.bias = a.mean - a.oracle;
      a.bias_unrestricted = a.mean - a.oracle_unrestricted;
      es.ages.push_back(a);
    }
    if (opt.bands) {
      double hits = 0.0, width = 0.0, crit = 0.0;
      for (const auto& o : outcomes) {
        hits += o.estimators[e].band_covered ? 1.0 : 0.0;
        width += o.estimators[e].band_width;
        crit += o.estimators[e].critical_value;
      }
      es.band_coverage = hits / static_cast<double>(reps);
      es.band_coverage_se = binomial_se(es.band_coverage, reps);
      es.band_width = width / static_cast<double>(reps);
      es.critical_value = crit / static_cast<double>(reps);
    }
    s.estimators.push_back(std::move(es));
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& o : outcomes) {
    std::set<std::string> distinct(o.warnings.begin(), o.warnings.end());
    for (const auto& w : distinct) ++counts[w];
  }
  s.warnings.assign(counts.begin(), counts.end());
  return s;
}

ReplicationSummary run_study(const StudyOptions& opt) {
  opt.check();
  const OracleFunction oracle(opt.scenario);
  std::vector<ReplicationOutcome> outcomes(opt.n_reps);
  std::vector<std::string> errors(opt.n_reps);
  std::vector<char> failed(opt.n_reps, 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= opt.n_reps) return;
      try {
        outcomes[rep] = run_replication(opt, oracle, rep);
      } catch (const std::exception& e) {
        errors[rep] = e.what();
        failed[rep] = 1;
      }
    }
  };
  unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, opt.n_reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t rep = 0; rep < opt.n_reps; ++rep)
    if (failed[rep]) throw ReplicationError(rep, replication_seed(opt.seed, rep), errors[rep]);
  return summarize(opt, oracle, outcomes);
}

EfficiencyReport compare_estimators(const ReplicationSummary& summary) {
  const auto* aj = summary.find(EstimatorKind::aj);
  const auto* fresh = summary.find(EstimatorKind::new_estimator);
  if (!aj || !fresh) throw std::invalid_argument("compare_estimators: summary must contain both aj and new");
  EfficiencyReport r;
  const double reps = static_cast<double>(summary.n_reps);
  for (std::size_t k = 0; k < fresh->ages.size(); ++k) {
    const auto& a = aj->ages[k];
    const auto& f = fresh->ages[k];
    EfficiencyRow row;
    row.age = f.age;
    row.sd_ratio = a.sd > 0.0 ? f.sd / a.sd : (f.sd > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    row.ci_width_ratio = a.ci_width > 0.0 ? f.ci_width / a.ci_width : 1.0;
    row.sd_flag = row.sd_ratio > 1.0;
    const double mc_se = f.sd / std::sqrt(reps);
    row.bias_flag = summary.n_reps > 1 && f.bias_unrestricted < -3.0 * mc_se && f.bias_unrestricted < 0.0;
    if (row.sd_flag) r.flagged_sd_ages.push_back(row.age);
    if (row.bias_flag) r.flagged_bias_ages.push_back(row.age);
    r.rows.push_back(row);
  }
  r.band_width_ratio = aj->band_width > 0.0 ? fresh->band_width / aj->band_width : 1.0;
  return r;
}

nlohmann::json to_json(const ReplicationSummary& s) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : s.estimators) {
    nlohmann::json ages = nlohmann::json::array();
    for (const auto& a : e.ages)
      ages.push_back({{"age", a.age},
                      {"oracle", a.oracle},
                      {"oracle_unrestricted", a.oracle_unrestricted},
                      {"mean", a.mean},
                      {"median", a.median},
                      {"sd", a.sd},
                      {"iqr", a.iqr},
                      {"mean_se", a.mean_se},
                      {"coverage", a.coverage},
                      {"coverage_se", a.coverage_se},
                      {"ci_width", a.ci_width},
                      {"bias", a.bias},
                      {"bias_unrestricted", a.bias_unrestricted}});
    nlohmann::json block = {{"estimator", to_string(e.estimator)},
                            {"estimand_tag", to_string(e.estimand)},
                            {"ages", ages}};
    if (s.bands)
      block["band"] = {{"coverage", e.band_coverage},
                       {"coverage_se", e.band_coverage_se},
                       {"mean_width", e.band_width},
                       {"mean_critical_value", e.critical_value}};
    est.push_back(block);
  }
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& [text, count] : s.warnings) warnings.push_back({{"message", text}, {"replications", count}});
  return {{"scenario", s.scenario},
          {"n", s.n},
          {"n_reps", s.n_reps},
          {"B", s.draws},
          {"alpha", s.alpha},
          {"band_range", s.bands ? nlohmann::json{s.band_lower, s.band_upper} : nlohmann::json()},
          {"transform", to_string(s.transform)},
          {"terms_included", to_string(s.terms)},
          {"seed", s.seed},
          {"estimators", est},
          {"warnings", warnings}};
}

nlohmann::json to_json(const EfficiencyReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"age", row.age},
                    {"sd_ratio", std::isfinite(row.sd_ratio) ? nlohmann::json(row.sd_ratio) : nlohmann::json()},
                    {"ci_width_ratio", row.ci_width_ratio},
                    {"sd_flag", row.sd_flag},
                    {"bias_flag", row.bias_flag}});
  return {{"rows", rows},
          {"band_width_ratio", r.band_width_ratio},
          {"flagged_sd_ages", r.flagged_sd_ages},
          {"flagged_bias_ages", r.flagged_bias_ages}};
}

std::string summary_csv(const EstimatorSummary& s) {
  std::string out =
      "age,oracle,oracle_unrestricted,mean,median,sd,iqr,mean_se,coverage,coverage_se,ci_width,bias,"
      "bias_unrestricted\n";
  for (const auto& a : s.ages) {
    const double cols[] = {a.age,     a.oracle,   a.oracle_unrestricted, a.mean,        a.median,
                           a.sd,      a.iqr,      a.mean_se,             a.coverage,    a.coverage_se,
                           a.ci_width, a.bias,    a.bias_unrestricted};
    for (std::size_t k = 0; k < std::size(cols); ++k) {
      if (k) out += ',';
      out += format_number(cols[k]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace biocif
