#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "biocif/estimators.hpp"
#include "biocif/inference.hpp"
#include "biocif/simulate.hpp"

namespace biocif {

struct StudyOptions {
  ScenarioConfig scenario = parse_scenario_code("1111");
  std::size_t n = 5000;
  std::size_t n_reps = 200;
  std::size_t draws = 250;  // multiplier replicates per band
  double alpha = 0.05;
  // Ages at which point-wise summaries are reported; empty means every
  // integer age from min(band lower, c_L) to tau.
  std::vector<double> grid;
  double band_lower = 50.0;
  double band_upper = 80.0;
  bool bands = true;
  std::vector<EstimatorKind> estimators{EstimatorKind::aj, EstimatorKind::new_estimator, EstimatorKind::combination};
  TransformKind transform = TransformKind::arcsine_root;
  InfluenceTerms terms = InfluenceTerms::main_only;
  bool allow_mixed_estimand = false;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  // Throws std::invalid_argument on inconsistent options.
  void check() const;
  std::vector<double> report_grid() const;
};

// Seed of replication `rep` under the master seed.
std::uint64_t replication_seed(std::uint64_t master, std::size_t rep);

struct EstimatorOutcome {
  EstimatorKind estimator = EstimatorKind::new_estimator;
  std::vector<double> estimate;  // at the report grid
  std::vector<double> standard_error;
  std::vector<char> covered;
  std::vector<double> ci_width;
  bool band_covered = false;
  double band_width = 0.0;  // mean upper - lower over the band grid
  double critical_value = 0.0;
};

struct ReplicationOutcome {
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorOutcome> estimators;
  std::vector<std::string> warnings;
};

// Thrown when one replication fails; carries what is needed to replay it.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(std::size_t rep, std::uint64_t seed, const std::string& what);
  std::size_t rep() const { return rep_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t rep_;
  std::uint64_t seed_;
};

// Oracle value each estimator is scored against.
double oracle_target(EstimatorKind kind, const OracleValue& v);

// Runs replication `rep` alone; identical to the same replication inside
// run_study.
ReplicationOutcome run_replication(const StudyOptions& opt, const OracleFunction& oracle, std::size_t rep);

struct AgeSummary {
  double age = 0.0;
  double oracle = 0.0;               // target matching the estimator
  double oracle_unrestricted = 0.0;  // G1(t | T2 >= c_L), no tau restriction
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double iqr = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double ci_width = 0.0;
  double bias = 0.0;
  double bias_unrestricted = 0.0;
};

struct EstimatorSummary {
  EstimatorKind estimator = EstimatorKind::new_estimator;
  EstimandTag estimand = EstimandTag::new_conditional;
  std::vector<AgeSummary> ages;
  double band_coverage = 0.0;
  double band_coverage_se = 0.0;
  double band_width = 0.0;
  double critical_value = 0.0;
};

struct ReplicationSummary {
  std::string scenario;
  std::size_t n = 0;
  std::size_t n_reps = 0;
  std::size_t draws = 0;
  double alpha = 0.05;
  double band_lower = 0.0;
  double band_upper = 0.0;
  bool bands = true;
  TransformKind transform = TransformKind::arcsine_root;
  InfluenceTerms terms = InfluenceTerms::main_only;
  std::uint64_t seed = 0;
  std::vector<EstimatorSummary> estimators;
  // Distinct warning texts with the number of replications raising each.
  std::vector<std::pair<std::string, std::size_t>> warnings;

  const EstimatorSummary* find(EstimatorKind kind) const;
};

// Aggregates outcomes (in replication order) into a summary.
ReplicationSummary summarize(const StudyOptions& opt, const OracleFunction& oracle,
                             const std::vector<ReplicationOutcome>& outcomes);

// Runs all replications on opt.threads worker threads. Results do not
// depend on the thread count. The first failing replication (lowest index)
// is rethrown as ReplicationError.
ReplicationSummary run_study(const StudyOptions& opt);

struct EfficiencyRow {
  double age = 0.0;
  double sd_ratio = 0.0;  // new / aj
  double ci_width_ratio = 0.0;
  bool sd_flag = false;   // ratio above 1
  bool bias_flag = false; // new estimator below G1(t | T2 >= c_L) by more than 3 MC-SE
};

struct EfficiencyReport {
  std::vector<EfficiencyRow> rows;
  double band_width_ratio = 0.0;
  std::vector<double> flagged_sd_ages;
  std::vector<double> flagged_bias_ages;
};

// Requires both the AJ and new estimator in the summary
// (std::invalid_argument otherwise).
EfficiencyReport compare_estimators(const ReplicationSummary& summary);

nlohmann::json to_json(const ReplicationSummary& s);
nlohmann::json to_json(const EfficiencyReport& r);
// Per-age table for one estimator.
std::string summary_csv(const EstimatorSummary& s);

}  // namespace biocif
