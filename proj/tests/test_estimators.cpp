#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "biocif/errors.hpp"
#include "biocif/estimators.hpp"
#include "biocif/km.hpp"
#include "biocif/simulate.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace biocif;
using testing_support::make_cohort;

namespace {

double max_knot_gap(const CifEstimate& a, const CifEstimate& b) {
  const StepCurve* curves[] = {&a.curve, &b.curve};
  double worst = 0.0;
  for (double t : merged_knots(curves)) worst = std::max(worst, std::abs(a.curve.at(t) - b.curve.at(t)));
  return worst;
}

}  // namespace

TEST_CASE("hand example: Aalen-Johansen reaches 0.5 at 45") {
  const auto c = make_cohort({{44, 60, 1, 0, 40}, {46, 46, 0, 1, 40}, {45, 60, 1, 0, 41}, {50, 50, 0, 0, 43}});
  const auto aj = aalen_johansen(c);
  CHECK(aj.curve.at(44) == 0.25);
  CHECK(aj.curve.at(45) == 0.5);
  CHECK(aj.curve.at(100) == 0.5);
  CHECK(oracle::aj_cif(c, 45) == 0.5);
}

TEST_CASE("Aalen-Johansen edge cases") {
  const auto none = make_cohort({{50, 50, 0, 1, 40}, {55, 55, 0, 0, 41}});
  const auto aj = aalen_johansen(none);
  CHECK(aj.curve.at(80) == 0.0);
  CHECK_FALSE(aj.warnings.empty());
  const auto prevalent_only = make_cohort({{36, 60, 1, 1, 45}, {38, 50, 1, 0, 42}});
  CHECK_THROWS_WITH_AS(aalen_johansen(prevalent_only), doctest::Contains("empty post-exclusion cohort"),
                       NumericError);
}

TEST_CASE("Aalen-Johansen ignores prevalent records") {
  const auto c = sample_cohort(parse_scenario_code("3111"), 800, 4);
  std::vector<SubjectRecord> kept;
  for (const auto& s : c.subjects())
    if (s.v1 >= s.r) kept.push_back(s);
  const auto a = aalen_johansen(c);
  const auto b = aalen_johansen(Cohort(kept, c.design()));
  CHECK(max_knot_gap(a, b) == 0.0);
  CHECK(a.curve.at(39.999) == 0.0);
}

TEST_CASE("Aalen-Johansen with complete data is the empirical onset distribution") {
  std::vector<SubjectRecord> rows;
  SplitMix64 eng(8);
  for (int i = 0; i < 500; ++i) {
    const double t1 = 1.0 + 50.0 * eng.open_unit();
    rows.push_back({t1, t1 + 1.0, 1, 1, 0.5});
  }
  const Cohort c(rows, StudyDesign{0.5, 0.5, 1000});
  const auto aj = aalen_johansen(c);
  for (const auto& s : rows) {
    double count = 0;
    for (const auto& x : rows) count += x.v1 <= s.v1 ? 1.0 : 0.0;
    CHECK(std::abs(aj.curve.at(s.v1) - count / 500.0) < 1e-12);
  }
}

TEST_CASE("Aalen-Johansen matches the brute-force oracle with ties") {
  for (const auto& base : testing_support::small_corpus()) {
    const auto c = testing_support::rounded(base);
    const auto aj = aalen_johansen(c);
    CHECK(aj.curve.nondecreasing());
    for (double t = 35; t <= 80; t += 1.0) CHECK(std::abs(aj.curve.at(t) - oracle::aj_cif(c, t)) < 1e-13);
  }
}

TEST_CASE("hand example: two tied deaths at 60") {
  const auto c = make_cohort({{45, 60, 1, 1, 42}, {50, 60, 1, 1, 44}});
  const auto h = conditional_hazard(c, 60);
  REQUIRE(h.size() == 2);
  CHECK(h[0].t1 == 45);
  CHECK(h[0].increment == 0.5);
  CHECK(h[1].t1 == 50);
  CHECK(h[1].increment == 1.0);
  CHECK(conditional_survival(h, 50) == 0.0);
  CHECK(conditional_survival(h, 47) == 0.5);
  CHECK(oracle::conditional_survival(c, 50, 60) == 0.0);
  CHECK_THROWS_AS(conditional_hazard(c, 59), std::invalid_argument);
}

TEST_CASE("single death at t2 gives a unit increment or none") {
  const auto c = make_cohort({{48, 60, 1, 1, 42}, {55, 55, 0, 1, 44}, {62, 62, 0, 0, 50}});
  const auto h = conditional_hazard(c, 60);
  REQUIRE(h.size() == 1);
  CHECK(h[0].increment == 1.0);
  CHECK(conditional_survival(h, 47.9) == 1.0);
  CHECK(conditional_survival(h, 48) == 0.0);
  CHECK(conditional_hazard(c, 55).empty());
}

TEST_CASE("hand example: tied deaths inside a five-subject cohort") {
  const auto c = make_cohort(
      {{45, 60, 1, 1, 42}, {50, 60, 1, 1, 44}, {58, 58, 0, 1, 41}, {52, 66, 1, 0, 47}, {63, 63, 0, 0, 55}});
  const auto tg = tie_general_cif(c);
  const auto fresh = new_cif(c);
  for (double t : {44.0, 45.0, 49.0, 50.0, 52.0, 60.0, 80.0}) {
    CHECK(tg.curve.at(t) == doctest::Approx(oracle::tie_general_cif(c, t)).epsilon(1e-14));
    CHECK(fresh.curve.at(t) == doctest::Approx(oracle::new_cif(c, t)).epsilon(1e-14));
    CHECK(std::abs(tg.curve.at(t) - fresh.curve.at(t)) < 1e-14);
  }
  // Risk sets: 58 -> all five, 60 -> {1,2,4,5}; dF2(60) = (4/5)(2/4) = 0.4,
  // split evenly between the onsets at 45 and 50.
  CHECK(tg.curve.at(45) == doctest::Approx(0.2));
  CHECK(tg.curve.at(50) == doctest::Approx(0.4));
}

TEST_CASE("no ties: tie-general and new estimators agree at every knot") {
  for (int k = 0; k < 10; ++k) {
    const auto c = sample_cohort(parse_scenario_code(k % 2 ? "2121" : "3212"), 200, 100 + k);
    CHECK(max_knot_gap(tie_general_cif(c), new_cif(c)) < 1e-12);
  }
}

TEST_CASE("tied data: tie-general and new estimators still agree") {
  for (const auto& base : testing_support::small_corpus()) {
    const auto c = testing_support::rounded(base);
    CHECK(max_knot_gap(tie_general_cif(c), new_cif(c)) < 1e-12);
  }
}

TEST_CASE("new estimator matches the brute-force oracle") {
  for (const auto& base : testing_support::small_corpus()) {
    for (const auto& c : {base, testing_support::rounded(base)}) {
      const auto fresh = new_cif(c);
      for (double t = 30; t <= 80; t += 1.0)
        CHECK(std::abs(fresh.curve.at(t) - oracle::new_cif(c, t)) < 1e-13);
    }
  }
}

TEST_CASE("complete data: new estimator is the empirical subdistribution") {
  std::vector<SubjectRecord> rows;
  SplitMix64 eng(21);
  for (int i = 0; i < 1000; ++i) {
    const double t1 = 1.0 + 100.0 * eng.open_unit();
    const double t2 = 1.0 + 100.0 * eng.open_unit();
    if (t1 <= t2)
      rows.push_back({t1, t2, 1, 1, 0.5});
    else
      rows.push_back({t2, t2, 0, 1, 0.5});
  }
  const Cohort c(rows, StudyDesign{0.5, 0.5, 1000});
  const auto fresh = new_cif(c);
  for (double t : fresh.curve.knots()) {
    double count = 0;
    for (const auto& s : rows) count += (s.delta1 == 1 && s.v1 <= t) ? 1.0 : 0.0;
    CHECK(std::abs(fresh.curve.at(t) - count / 1000.0) < 1e-12);
  }
}

TEST_CASE("new estimator edge cases") {
  const auto alive = make_cohort({{50, 60, 1, 0, 45}, {55, 55, 0, 1, 44}});
  const auto g = new_cif(alive);
  CHECK(g.curve.at(80) == 0.0);
  CHECK_FALSE(g.warnings.empty());
  // One disease-then-death path: jump of dF2(V2) at V1.
  const auto c = make_cohort({{44, 44, 0, 1, 40}, {45, 46, 1, 1, 40}, {47, 47, 0, 1, 41}, {47, 47, 0, 0, 43}});
  const auto one = new_cif(c);
  REQUIRE(one.curve.size() == 1);
  CHECK(one.curve.knots()[0] == 45);
  CHECK(one.curve.at(45) == doctest::Approx(0.25));
}

TEST_CASE("new estimator properties on simulated cohorts") {
  for (const auto& c : testing_support::small_corpus(300)) {
    const auto fresh = new_cif(c);
    CHECK(fresh.curve.nondecreasing());
    CHECK(fresh.curve.at(0) == 0.0);
    const auto s2 = km_left_truncated(build_risk_table(c, RiskKind::death));
    const double f2_tau = 1.0 - s2.at(c.design().tau);
    CHECK(fresh.curve.at(c.design().tau) <= f2_tau + 1e-12);
    CHECK(f2_tau <= 1.0);
  }
}

TEST_CASE("new estimator is invariant to subject order") {
  const auto c = sample_cohort(parse_scenario_code("1212"), 400, 77);
  auto rows = c.subjects();
  std::mt19937 shuffle(3);
  std::shuffle(rows.begin(), rows.end(), shuffle);
  const auto a = new_cif(c);
  const auto b = new_cif(Cohort(rows, c.design()));
  CHECK(max_knot_gap(a, b) < 1e-15);
}

TEST_CASE("new estimator carries prevalent mass below c_L") {
  const auto hand = make_cohort({{36, 60, 1, 1, 45}, {50, 62, 1, 1, 45}, {52, 52, 0, 1, 41}});
  const auto g = new_cif(hand);
  CHECK(g.curve.at(36) > 0.0);
  CHECK(g.curve.at(36) == doctest::Approx(oracle::new_cif(hand, 36)));
  CHECK(aalen_johansen(hand).curve.at(39) == 0.0);

  const auto c = sample_cohort(parse_scenario_code("3211"), 20000, 1);
  CHECK(new_cif(c).curve.at(39.99) > 0.0);
}

TEST_CASE("combination averages and refuses mixed estimands") {
  const auto c = sample_cohort(parse_scenario_code("1111"), 500, 5);
  const auto aj = aalen_johansen(c);
  const auto fresh = new_cif(c);
  const auto comb = combination_cif(aj, fresh);
  for (double t = 40; t <= 80; t += 2.5) {
    CHECK(comb.curve.at(t) == doctest::Approx(0.5 * aj.curve.at(t) + 0.5 * fresh.curve.at(t)));
    CHECK(comb.curve.at(t) >= std::min(aj.curve.at(t), fresh.curve.at(t)) - 1e-15);
    CHECK(comb.curve.at(t) <= std::max(aj.curve.at(t), fresh.curve.at(t)) + 1e-15);
  }
  CHECK(max_knot_gap(combination_cif(aj, aj), aj) == 0.0);

  CifEstimate a, b;
  a.curve = StepCurve({60.0}, {0.10}, 0.0);
  b.curve = StepCurve({60.0}, {0.06}, 0.0);
  CHECK(combination_cif(a, b).curve.at(60) == doctest::Approx(0.08));

  CifEstimate early;
  early.curve = StepCurve({35.0}, {0.01}, 0.0);
  CHECK_THROWS_AS(combination_cif(a, early), std::invalid_argument);
  CHECK_NOTHROW(combination_cif(a, early, true));
}

TEST_CASE("insufficient data warning triggers below 0.8 of Aalen-Johansen") {
  CifEstimate aj, fresh;
  aj.curve = StepCurve({60.0}, {0.10}, 0.0);
  fresh.curve = StepCurve({60.0}, {0.07}, 0.0);
  const auto w = insufficient_data_warning(aj, fresh);
  REQUIRE(w.has_value());
  CHECK(w->find("insufficient data") != std::string::npos);
  fresh.curve = StepCurve({60.0}, {0.09}, 0.0);
  CHECK_FALSE(insufficient_data_warning(aj, fresh).has_value());
}
