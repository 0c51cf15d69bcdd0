#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biocif/core_data.hpp"
#include "biocif/rng.hpp"

namespace biocif {

// Gompertz law with hazard rate * exp(shape * x). The defaults give a
// median of about 82.1 years, S(95) of about 0.052 and P(D < 40) of about
// 0.006 for the disease-free death age.
struct GompertzParams {
  double shape = 0.1125;
  double rate = 7.6e-6;

  void check() const;
  double cumulative_hazard(double x) const;
  double survival(double x) const;
  double cdf(double x) const { return 1.0 - survival(x); }
  double density(double x) const;
  // Age with survival s.
  double quantile_survival(double s) const;
  double median() const { return quantile_survival(0.5); }
};

// Weibull onset law, optionally left-truncated: for truncation a > 0 the
// survival is exp(-((t/scale)^shape - (a/scale)^shape)) for t >= a.
struct WeibullLaw {
  double shape = 4.0;
  double scale = 115.0;
  double truncation = 0.0;

  void check() const;
  double survival(double t) const;
  double density(double t) const;
  double cdf(double t) const { return 1.0 - survival(t); }
  // Onset age from a uniform on (0, 1).
  double draw(double u) const;
};

enum class RecruitmentModel {
  uniform,
  // Triangular on [c_L, c_U] with mode 60: a stand-in for the UK Biobank
  // recruitment ages, which are not published as a table.
  ukb_like,
};

const char* to_string(RecruitmentModel m);

struct ScenarioConfig {
  std::string code;  // d1 d2 d3 d4
  int t1_setting = 1;
  int t2_setting = 1;
  int recruit_setting = 1;
  int censor_setting = 1;

  WeibullLaw t1_model;
  double post_diagnosis_mean = 2.5;
  RecruitmentModel recruitment = RecruitmentModel::uniform;
  double recruit_mode = 60.0;  // ukb_like only
  double censor_offset_lower = 11.0;
  double censor_offset_upper = 15.0;
  GompertzParams mortality;
  StudyDesign design;

  // Throws std::invalid_argument on bad settings or parameters.
  void check() const;
  // Stable key over every parameter that affects the generative law.
  std::string hash() const;

  double recruitment_density(double r) const;
  double recruitment_cdf(double r) const;
  double draw_recruitment(double u) const;
  // P(R <= v <= C): how likely a subject is under observation at age v.
  double observation_window(double v) const;
};

// Builds a configuration from Table-1 style setting digits. Throws
// std::invalid_argument for codes outside {1,2,3}x{1,2}x{1,2}x{1,2}.
ScenarioConfig scenario_from_settings(int t1, int t2, int recruit, int censor);
ScenarioConfig parse_scenario_code(const std::string& code);

// Config file: {"t1_setting":1,"t2_setting":1,"recruit_setting":1,
// "censor_setting":1} with optional "mortality":{"shape","rate"},
// "post_diagnosis_mean", and "design":{"c_lower","c_upper","tau"}.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);

// Band range used by default for a scenario.
std::pair<double, double> default_band_range(const ScenarioConfig& cfg);

struct LatentSubject {
  double t1 = std::numeric_limits<double>::infinity();  // +inf: never diseased
  double t2 = 0.0;
  double r = 0.0;
  double c = 0.0;
};

// One latent draw from five uniforms taken from the engine in a fixed
// order: death, onset, post-diagnosis survival, recruitment, censoring.
LatentSubject draw_latent(const ScenarioConfig& cfg, SplitMix64& engine);

SubjectRecord observe(const LatentSubject& z);

// Death age under the baseline law from the given seed.
double baseline_mortality_sampler(const GompertzParams& params, std::uint64_t seed);

// Draws candidates until n have T2 >= R. Candidate k uses its own
// substream, so the cohort depends only on (cfg, n, seed). Throws
// NumericError when fewer than 1 in 10^4 candidates are accepted.
Cohort sample_cohort(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed);

enum class OracleMethod { closed_form_integration, monte_carlo };

const char* to_string(OracleMethod m);

// True targets on a grid:
//   conditional      G1(t | T2 >= c_L)
//   conditional_tau  P(T1 <= t, T1 < T2, T2 <= tau | T2 >= c_L)
//   event_free       G1(t | T1 >= c_L, T2 >= c_L)
// Monte Carlo standard errors are zero for the quadrature method.
struct OracleCurve {
  std::vector<double> grid;
  std::vector<double> conditional;
  std::vector<double> conditional_tau;
  std::vector<double> event_free;
  std::vector<double> conditional_se;
  std::vector<double> conditional_tau_se;
  std::vector<double> event_free_se;
  OracleMethod method = OracleMethod::closed_form_integration;
  std::size_t draws = 0;
};

// Monte Carlo uses `draws` latent subjects (>= 10^7 required) without
// recruitment or censoring. Results are cached per (config hash, grid,
// method, draws, seed). Throws NumericError when quadrature does not reach
// an absolute error of 1e-6.
OracleCurve true_cif(const ScenarioConfig& cfg, std::span<const double> grid,
                     OracleMethod method = OracleMethod::closed_form_integration,
                     std::size_t draws = 10'000'000, std::uint64_t seed = 20240917);

// Closed-form targets at a single age, without caching.
struct OracleValue {
  double conditional = 0.0;
  double conditional_tau = 0.0;
  double event_free = 0.0;
};

OracleValue oracle_at(const ScenarioConfig& cfg, double t);

// Closed-form targets at arbitrary ages, for many evaluations: integrals
// are tabulated at integer ages once and each call adds the remaining
// piece with a fixed Gauss-Kronrod rule.
class OracleFunction {
 public:
  explicit OracleFunction(const ScenarioConfig& cfg);
  OracleValue operator()(double t) const;
  const ScenarioConfig& config() const { return cfg_; }

 private:
  double piece(int which, double a, double b) const;

  ScenarioConfig cfg_;
  double alive_ = 1.0;       // P(T2 >= c_L)
  double event_free_ = 1.0;  // P(T1 >= c_L, T2 >= c_L)
  std::vector<double> nodes_;
  std::vector<double> cum_[3];
};

}  // namespace biocif
