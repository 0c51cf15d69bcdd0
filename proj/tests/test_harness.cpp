#include <doctest.h>

#include <cmath>

#include "biocif/harness.hpp"

using namespace biocif;

namespace {

StudyOptions small_study() {
  StudyOptions opt;
  opt.scenario = parse_scenario_code("2111");
  opt.n = 600;
  opt.n_reps = 6;
  opt.draws = 120;
  opt.grid = {50, 60, 70};
  opt.band_lower = 50;
  opt.band_upper = 75;
  opt.seed = 2024;
  return opt;
}

}  // namespace

TEST_CASE("replication seeds are distinct and stable") {
  CHECK(replication_seed(1, 0) == replication_seed(1, 0));
  CHECK(replication_seed(1, 0) != replication_seed(1, 1));
  CHECK(replication_seed(1, 0) != replication_seed(2, 0));
}

TEST_CASE("a one-replication study reproduces the single replication") {
  auto opt = small_study();
  opt.n_reps = 1;
  const auto summary = run_study(opt);
  const OracleFunction oracle(opt.scenario);
  const auto one = run_replication(opt, oracle, 0);
  for (const auto& e : one.estimators) {
    const auto* s = summary.find(e.estimator);
    REQUIRE(s != nullptr);
    for (std::size_t k = 0; k < opt.grid.size(); ++k) {
      CHECK(s->ages[k].mean == e.estimate[k]);
      CHECK(s->ages[k].coverage == (e.covered[k] ? 1.0 : 0.0));
    }
    CHECK(s->band_coverage == (e.band_covered ? 1.0 : 0.0));
  }
}

TEST_CASE("replications replay bit-exactly and ignore the thread count") {
  auto opt = small_study();
  const OracleFunction oracle(opt.scenario);
  const auto a = run_replication(opt, oracle, 3);
  const auto b = run_replication(opt, oracle, 3);
  REQUIRE(a.estimators.size() == b.estimators.size());
  for (std::size_t e = 0; e < a.estimators.size(); ++e) {
    CHECK(a.estimators[e].estimate == b.estimators[e].estimate);
    CHECK(a.estimators[e].critical_value == b.estimators[e].critical_value);
  }
  const auto serial = to_json(run_study(opt));
  opt.threads = 3;
  CHECK(to_json(run_study(opt)) == serial);
}

TEST_CASE("summary quantities stay in range") {
  const auto summary = run_study(small_study());
  REQUIRE(summary.estimators.size() == 3);
  for (const auto& s : summary.estimators) {
    CHECK(s.band_coverage >= 0.0);
    CHECK(s.band_coverage <= 1.0);
    CHECK(s.band_width > 0.0);
    for (const auto& a : s.ages) {
      CHECK(a.coverage >= 0.0);
      CHECK(a.coverage <= 1.0);
      CHECK(a.sd >= 0.0);
      CHECK(a.mean_se > 0.0);
      CHECK(a.bias == doctest::Approx(a.mean - a.oracle));
    }
  }
  // The combination mean lies between the two component means.
  const auto* aj = summary.find(EstimatorKind::aj);
  const auto* fresh = summary.find(EstimatorKind::new_estimator);
  const auto* comb = summary.find(EstimatorKind::combination);
  for (std::size_t k = 0; k < comb->ages.size(); ++k) {
    CHECK(comb->ages[k].mean >= std::min(aj->ages[k].mean, fresh->ages[k].mean) - 1e-15);
    CHECK(comb->ages[k].mean <= std::max(aj->ages[k].mean, fresh->ages[k].mean) + 1e-15);
  }
}

TEST_CASE("comparing an estimator with itself gives unit ratios") {
  auto summary = run_study(small_study());
  ReplicationSummary twin = summary;
  twin.estimators.clear();
  auto aj = *summary.find(EstimatorKind::aj);
  twin.estimators.push_back(aj);
  aj.estimator = EstimatorKind::new_estimator;
  twin.estimators.push_back(aj);
  const auto report = compare_estimators(twin);
  for (const auto& row : report.rows) {
    CHECK(row.sd_ratio == doctest::Approx(1.0));
    CHECK(row.ci_width_ratio == doctest::Approx(1.0));
    CHECK_FALSE(row.sd_flag);
  }
  CHECK(report.band_width_ratio == doctest::Approx(1.0));
}

TEST_CASE("study options are validated") {
  auto opt = small_study();
  opt.scenario = parse_scenario_code("3111");
  CHECK_THROWS_AS(opt.check(), std::invalid_argument);
  opt.allow_mixed_estimand = true;
  CHECK_NOTHROW(opt.check());
  auto bad = small_study();
  bad.n_reps = 0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  auto defaults = small_study();
  defaults.grid.clear();
  const auto grid = defaults.report_grid();
  CHECK(grid.front() == 40.0);
  CHECK(grid.back() == 80.0);
}

TEST_CASE("oracle targets follow the estimand") {
  const OracleValue v{0.3, 0.2, 0.1};
  CHECK(oracle_target(EstimatorKind::aj, v) == 0.1);
  CHECK(oracle_target(EstimatorKind::new_estimator, v) == 0.2);
  CHECK(oracle_target(EstimatorKind::tie_general, v) == 0.2);
  CHECK(oracle_target(EstimatorKind::combination, v) == doctest::Approx(0.15));
}

TEST_CASE("summary serialises every estimator") {
  const auto summary = run_study(small_study());
  const auto j = to_json(summary);
  CHECK(j["estimators"].size() == 3);
  const auto csv = summary_csv(summary.estimators[0]);
  CHECK(csv.rfind("age,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
