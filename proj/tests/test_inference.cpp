#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "biocif/errors.hpp"
#include "biocif/estimators.hpp"
#include "biocif/inference.hpp"
#include "biocif/simulate.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace biocif;

namespace {

std::vector<double> grid_for(const Cohort& c) {
  std::vector<double> g;
  for (double t = 40; t <= c.design().tau; t += 2.5) g.push_back(t);
  return g;
}

double worst_column_mean(const Eigen::MatrixXd& m) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) worst = std::max(worst, std::abs(m.col(k).mean()));
  return worst;
}

InfluenceMatrix toy_psi() {
  Eigen::MatrixXd main(3, 2);
  main << 1, 2, -1, 0, 0, -2;
  return InfluenceMatrix({60.0, 70.0}, main, Eigen::MatrixXd(), InfluenceTerms::main_only);
}

CifEstimate toy_estimate() {
  CifEstimate est;
  est.curve = StepCurve({55.0, 65.0}, {0.1, 0.2}, 0.0);
  return est;
}

MultiplierDraws toy_draws() {
  MultiplierDraws z(4, 3);
  z << 1, 0, 0, 1, 1, 1, 0, 1, -1, 2, -1, 0;
  return z;
}

}  // namespace

TEST_CASE("main influence terms are centred on every corpus cohort") {
  for (const auto& base : testing_support::small_corpus()) {
    for (const auto& c : {base, testing_support::rounded(base)}) {
      const auto grid = grid_for(c);
      for (auto terms : {InfluenceTerms::main_only, InfluenceTerms::main_plus_auxiliary}) {
        CHECK(worst_column_mean(influence_new(c, grid, terms).main_term()) < 1e-13);
        CHECK(worst_column_mean(influence_aj(c, grid, terms).main_term()) < 1e-13);
      }
    }
  }
}

TEST_CASE("AJ main term centring over the post-exclusion subsample") {
  const auto c = sample_cohort(parse_scenario_code("3121"), 600, 12);
  const auto grid = grid_for(c);
  const auto psi = influence_aj(c, grid);
  double n0 = 0;
  for (const auto& s : c.subjects()) n0 += s.v1 >= s.r ? 1.0 : 0.0;
  const double nd = static_cast<double>(c.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i].v1 >= c[i].r) sum += psi.main_term()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    CHECK(std::abs(sum / n0 * (n0 / nd)) < 1e-13);
  }
}

TEST_CASE("new influence values match the term-by-term oracle") {
  for (const auto& base : testing_support::small_corpus(40)) {
    for (const auto& c : {base, testing_support::rounded(base)}) {
      const auto grid = grid_for(c);
      for (bool main_only : {true, false}) {
        const auto psi =
            influence_new(c, grid, main_only ? InfluenceTerms::main_only : InfluenceTerms::main_plus_auxiliary);
        for (std::size_t k = 0; k < grid.size(); k += 3) {
          const auto ref = oracle::new_influence(c, grid[k], main_only);
          double worst = 0.0;
          for (std::size_t i = 0; i < c.size(); ++i)
            worst = std::max(worst, std::abs(psi.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - ref[i]));
          CHECK(worst < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("AJ influence values match the term-by-term oracle") {
  for (const auto& base : testing_support::small_corpus(40)) {
    for (const auto& c : {base, testing_support::rounded(base)}) {
      const auto grid = grid_for(c);
      for (bool main_only : {true, false}) {
        const auto psi =
            influence_aj(c, grid, main_only ? InfluenceTerms::main_only : InfluenceTerms::main_plus_auxiliary);
        for (std::size_t k = 0; k < grid.size(); k += 3) {
          const auto ref = oracle::aj_influence(c, grid[k], main_only);
          double worst = 0.0;
          for (std::size_t i = 0; i < c.size(); ++i)
            worst = std::max(worst, std::abs(psi.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - ref[i]));
          CHECK(worst < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("AJ influence rows of prevalent subjects are zero") {
  const auto c = sample_cohort(parse_scenario_code("3211"), 1500, 2);
  const auto grid = grid_for(c);
  const auto psi = influence_aj(c, grid, InfluenceTerms::main_plus_auxiliary);
  std::size_t prevalent = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].v1 >= c[i].r) continue;
    ++prevalent;
    CHECK(psi.values().row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(prevalent > 0);
}

TEST_CASE("AJ standard errors agree with the risk-set variance formula") {
  const auto c = sample_cohort(parse_scenario_code("2111"), 5000, 31);
  const std::vector<double> grid{55, 60, 65, 70};
  const auto var = variance_curve(influence_aj(c, grid, InfluenceTerms::main_plus_auxiliary));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double reference = std::sqrt(oracle::aj_variance(c, grid[k]));
    CHECK(std::abs(var.standard_error(k) / reference - 1.0) < 0.02);
  }
}

TEST_CASE("combination influence is the average of its inputs") {
  const auto c = sample_cohort(parse_scenario_code("1111"), 400, 8);
  const auto grid = grid_for(c);
  const auto a = influence_aj(c, grid);
  const auto b = influence_new(c, grid);
  const auto m = influence_combination(a, b);
  CHECK((m.values() - 0.5 * (a.values() + b.values())).cwiseAbs().maxCoeff() < 1e-15);
  const auto other = influence_new(c, std::vector<double>{50, 60});
  CHECK_THROWS_AS(influence_combination(a, other), std::invalid_argument);
}

TEST_CASE("influence grid checks") {
  const auto c = sample_cohort(parse_scenario_code("1111"), 200, 1);
  CHECK_THROWS_AS(influence_new(c, std::vector<double>{60, 81}), std::invalid_argument);
  CHECK_THROWS_AS(influence_new(c, std::vector<double>{70, 60}), std::invalid_argument);
}

TEST_CASE("hand example: identity interval at 0.1 with se 0.01") {
  CifEstimate est;
  est.curve = StepCurve({60.0}, {0.1}, 0.0);
  VarianceCurve var{{60.0}, {0.01}, 100};
  CHECK(var.standard_error(0) == doctest::Approx(0.01));
  const auto ci = pointwise_ci(est, var, Transform{TransformKind::identity}, 0.05);
  CHECK(ci.lower[0] == doctest::Approx(0.0804).epsilon(1e-4));
  CHECK(ci.upper[0] == doctest::Approx(0.1196).epsilon(1e-4));
}

TEST_CASE("transform boundary cases") {
  VarianceCurve var{{60.0}, {0.01}, 100};
  CifEstimate zero;
  zero.curve = StepCurve({70.0}, {0.3}, 0.0);
  const auto at_zero = pointwise_ci(zero, var, Transform{TransformKind::arcsine_root}, 0.05);
  CHECK(at_zero.estimate[0] == 0.0);
  CHECK(at_zero.lower[0] == 0.0);
  // g'(0) is infinite, so the upper end is the back-transform of the upper limit.
  CHECK(at_zero.upper[0] == 1.0);
  CHECK_FALSE(at_zero.degenerate[0]);

  CifEstimate one;
  one.curve = StepCurve({50.0}, {1.0}, 0.0);
  for (auto kind : {TransformKind::log_complement, TransformKind::arcsine_root}) {
    const auto ci = pointwise_ci(one, var, Transform{kind}, 0.05);
    CHECK(ci.degenerate[0]);
    CHECK(ci.lower[0] == 1.0);
    CHECK(ci.upper[0] == 1.0);
  }
}

TEST_CASE("transforms are monotone and invert") {
  for (auto kind : {TransformKind::identity, TransformKind::log_complement, TransformKind::arcsine_root}) {
    const Transform tr{kind};
    CHECK(tr.g(0.0) == 0.0);
    double prev = -1.0;
    for (double u = 0.01; u < 1.0; u += 0.01) {
      CHECK(tr.g(u) > prev);
      prev = tr.g(u);
      CHECK(tr.inverse(tr.g(u)) == doctest::Approx(u).epsilon(1e-12));
      const double h = 1e-6;
      CHECK(tr.derivative(u) == doctest::Approx((tr.g(u + h) - tr.g(u - h)) / (2 * h)).epsilon(1e-5));
    }
  }
  CHECK(parse_transform("arcsine-root") == TransformKind::arcsine_root);
  CHECK(parse_transform("log") == TransformKind::log_complement);
  CHECK(parse_transform("identity") == TransformKind::identity);
  CHECK_THROWS_AS(parse_transform("logit"), std::invalid_argument);
}

TEST_CASE("CI intervals stay inside [0, 1] and contain the estimate") {
  const auto c = sample_cohort(parse_scenario_code("2212"), 300, 4);
  const auto grid = grid_for(c);
  const auto est = new_cif(c);
  const auto var = variance_curve(influence_new(c, grid));
  for (auto kind : {TransformKind::identity, TransformKind::log_complement, TransformKind::arcsine_root}) {
    const auto ci = pointwise_ci(est, var, Transform{kind}, 0.05);
    for (std::size_t k = 0; k < ci.ages.size(); ++k) {
      CHECK(ci.lower[k] >= 0.0);
      CHECK(ci.upper[k] <= 1.0);
      CHECK(ci.lower[k] <= ci.estimate[k]);
      CHECK(ci.estimate[k] <= ci.upper[k]);
    }
  }
}

TEST_CASE("hand example: four multiplier draws") {
  const auto psi = toy_psi();
  const auto var = variance_curve(psi);
  CHECK(var.s2[0] == doctest::Approx(2.0 / 3.0));
  CHECK(var.s2[1] == doctest::Approx(8.0 / 3.0));
  const Transform id{TransformKind::identity};
  const auto band = multiplier_band(psi, toy_estimate(), var, 60, 70, toy_draws(), 0.05, id);
  REQUIRE(band.maxima.size() == 4);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(band.maxima[0] == doctest::Approx(r));
  CHECK(band.maxima[1] == doctest::Approx(0.0));
  CHECK(band.maxima[2] == doctest::Approx(r));
  CHECK(band.maxima[3] == doctest::Approx(3.0 * r));
  CHECK(band.critical_value == doctest::Approx(3.0 * r));
  CHECK(multiplier_band(psi, toy_estimate(), var, 60, 70, toy_draws(), 0.5, id).critical_value == doctest::Approx(r));
  // Half-width at 60 is nu * se = 3/sqrt(2) * sqrt(2)/3 = 1, clamped to [0, 1].
  CHECK(band.lower[0] == 0.0);
  CHECK(band.upper[0] == 1.0);
}

TEST_CASE("band critical value cannot grow with alpha") {
  const auto c = sample_cohort(parse_scenario_code("1111"), 800, 6);
  const auto est = new_cif(c);
  const StepCurve* curves[] = {&est.curve};
  const auto grid = band_grid(curves, 50, 80);
  const auto psi = influence_new(c, grid);
  const auto var = variance_curve(psi);
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const auto band = multiplier_band(psi, est, var, 50, 80, 300, alpha, Transform{TransformKind::arcsine_root}, 99);
    CHECK(band.critical_value <= prev);
    prev = band.critical_value;
    for (std::size_t k = 0; k < band.ages.size(); ++k) {
      CHECK(band.lower[k] <= band.estimate[k]);
      CHECK(band.estimate[k] <= band.upper[k]);
      CHECK(band.lower[k] >= 0.0);
      CHECK(band.upper[k] <= 1.0);
    }
  }
  const auto pointwise = pointwise_ci(est, var, Transform{TransformKind::identity}, 0.05);
  const auto band = multiplier_band(psi, est, var, 50, 80, 300, 0.05, Transform{TransformKind::identity}, 99);
  CHECK(band.critical_value >= normal_quantile(0.975) - 0.3);
  for (std::size_t k = 0; k < band.ages.size(); ++k) CHECK(band.upper[k] >= pointwise.upper[k] - 1e-12);
}

TEST_CASE("zero influence gives a band equal to the estimate") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 2);
  const InfluenceMatrix psi({60.0, 70.0}, zero, Eigen::MatrixXd(), InfluenceTerms::main_only);
  const auto band = multiplier_band(psi, toy_estimate(), variance_curve(psi), 60, 70, toy_draws(), 0.05,
                                    Transform{TransformKind::arcsine_root});
  CHECK(band.critical_value == 0.0);
  for (std::size_t k = 0; k < band.ages.size(); ++k) {
    CHECK(band.lower[k] == band.estimate[k]);
    CHECK(band.upper[k] == band.estimate[k]);
  }
  CHECK_FALSE(band.warnings.empty());
}

TEST_CASE("ages with zero variance are dropped from the supremum") {
  Eigen::MatrixXd main(3, 2);
  main << 0, 2, 0, 0, 0, -2;
  const InfluenceMatrix psi({60.0, 70.0}, main, Eigen::MatrixXd(), InfluenceTerms::main_only);
  const auto band = multiplier_band(psi, toy_estimate(), variance_curve(psi), 60, 70, toy_draws(), 0.05,
                                    Transform{TransformKind::identity});
  REQUIRE(band.dropped_ages.size() == 1);
  CHECK(band.dropped_ages[0] == 60.0);
  CHECK(band.lower[0] == band.upper[0]);
}

TEST_CASE("multipliers are deterministic per seed and independent of draw count") {
  const auto a = draw_multipliers(50, 20, 7);
  const auto b = draw_multipliers(50, 20, 7);
  const auto c = draw_multipliers(50, 30, 7);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c.topRows(20)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - draw_multipliers(50, 20, 8)).cwiseAbs().maxCoeff() > 0.0);
  const auto big = draw_multipliers(200, 500, 1);
  CHECK(std::abs(big.mean()) < 0.01);
  CHECK(std::abs(big.squaredNorm() / static_cast<double>(big.size()) - 1.0) < 0.02);
}

TEST_CASE("band is reproducible and skips nothing under a fixed seed") {
  const auto c = sample_cohort(parse_scenario_code("2111"), 600, 3);
  const auto est = new_cif(c);
  const StepCurve* curves[] = {&est.curve};
  const auto grid = band_grid(curves, 50, 80);
  CHECK(grid.front() == 50.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  const auto psi = influence_new(c, grid);
  const auto var = variance_curve(psi);
  const Transform tr{TransformKind::arcsine_root};
  const auto x = multiplier_band(psi, est, var, 50, 80, 200, 0.05, tr, 5);
  const auto y = multiplier_band(psi, est, var, 50, 80, 200, 0.05, tr, 5);
  CHECK(x.critical_value == y.critical_value);
  CHECK(x.lower == y.lower);
  CHECK(x.upper == y.upper);
  const auto few = multiplier_band(psi, est, var, 50, 80, 50, 0.05, tr, 5);
  CHECK_FALSE(few.warnings.empty());
}

TEST_CASE("influence and variance are invariant to subject order") {
  const auto c = sample_cohort(parse_scenario_code("1212"), 300, 15);
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 shuffle(4);
  std::shuffle(order.begin(), order.end(), shuffle);
  std::vector<SubjectRecord> rows;
  for (auto i : order) rows.push_back(c[i]);
  const Cohort p(rows, c.design());
  const auto grid = grid_for(c);
  for (auto terms : {InfluenceTerms::main_only, InfluenceTerms::main_plus_auxiliary}) {
    const auto a = influence_new(c, grid, terms);
    const auto b = influence_new(p, grid, terms);
    for (std::size_t j = 0; j < order.size(); ++j)
      CHECK((a.values().row(static_cast<Eigen::Index>(order[j])) - b.values().row(static_cast<Eigen::Index>(j)))
                .cwiseAbs()
                .maxCoeff() < 1e-13);
    const auto va = variance_curve(a), vb = variance_curve(b);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(va.s2[k] == doctest::Approx(vb.s2[k]).epsilon(1e-12));
  }
}
