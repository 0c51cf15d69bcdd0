#include "biocif/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "biocif/errors.hpp"

namespace biocif {

void GompertzParams::check() const {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("Gompertz shape and rate must be positive");
}

double GompertzParams::cumulative_hazard(double x) const {
  if (x <= 0.0) return 0.0;
  return rate / shape * std::expm1(shape * x);
}

double GompertzParams::survival(double x) const { return std::exp(-cumulative_hazard(x)); }

double GompertzParams::density(double x) const {
  if (x < 0.0) return 0.0;
  return rate * std::exp(shape * x) * survival(x);
}

double GompertzParams::quantile_survival(double s) const {
  return std::log1p(-shape * std::log(s) / rate) / shape;
}

void WeibullLaw::check() const {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("Weibull shape and scale must be positive");
  if (!(truncation >= 0.0)) throw std::invalid_argument("Weibull truncation must be non-negative");
}

double WeibullLaw::survival(double t) const {
  if (t <= truncation) return 1.0;
  return std::exp(-(std::pow(t / scale, shape) - std::pow(truncation / scale, shape)));
}

double WeibullLaw::density(double t) const {
  if (t < truncation || t <= 0.0) return 0.0;
  return shape / scale * std::pow(t / scale, shape - 1.0) * survival(t);
}

double WeibullLaw::draw(double u) const {
  return scale * std::pow(std::pow(truncation / scale, shape) - std::log(u), 1.0 / shape);
}

const char* to_string(RecruitmentModel m) {
  return m == RecruitmentModel::uniform ? "uniform" : "ukb_like";
}

void ScenarioConfig::check() const {
  if (t1_setting < 1 || t1_setting > 3 || t2_setting < 1 || t2_setting > 2 || recruit_setting < 1 ||
      recruit_setting > 2 || censor_setting < 1 || censor_setting > 2)
    throw std::invalid_argument("scenario settings outside {1,2,3}x{1,2}x{1,2}x{1,2}");
  t1_model.check();
  mortality.check();
  design.check();
  if (!(post_diagnosis_mean > 0.0)) throw std::invalid_argument("post_diagnosis_mean must be positive");
  if (!(censor_offset_lower >= 0.0 && censor_offset_lower < censor_offset_upper))
    throw std::invalid_argument("censoring offset range must satisfy 0 <= lower < upper");
  if (recruitment == RecruitmentModel::ukb_like &&
      !(recruit_mode > design.c_lower && recruit_mode < design.c_upper))
    throw std::invalid_argument("recruitment mode must lie inside (c_lower, c_upper)");
}

std::string ScenarioConfig::hash() const {
  std::ostringstream os;
  os << std::setprecision(17) << code << '|' << t1_model.shape << ',' << t1_model.scale << ',' << t1_model.truncation
     << '|' << post_diagnosis_mean << '|' << to_string(recruitment) << ',' << recruit_mode << '|'
     << censor_offset_lower << ',' << censor_offset_upper << '|' << mortality.shape << ',' << mortality.rate << '|'
     << design.c_lower << ',' << design.c_upper << ',' << design.tau;
  return os.str();
}

double ScenarioConfig::recruitment_density(double r) const {
  const double a = design.c_lower, b = design.c_upper;
  if (r < a || r > b) return 0.0;
  if (recruitment == RecruitmentModel::uniform) return 1.0 / (b - a);
  const double m = recruit_mode;
  return r <= m ? 2.0 * (r - a) / ((b - a) * (m - a)) : 2.0 * (b - r) / ((b - a) * (b - m));
}

double ScenarioConfig::recruitment_cdf(double r) const {
  const double a = design.c_lower, b = design.c_upper;
  if (r <= a) return 0.0;
  if (r >= b) return 1.0;
  if (recruitment == RecruitmentModel::uniform) return (r - a) / (b - a);
  const double m = recruit_mode;
  if (r <= m) return (r - a) * (r - a) / ((b - a) * (m - a));
  return 1.0 - (b - r) * (b - r) / ((b - a) * (b - m));
}

double ScenarioConfig::draw_recruitment(double u) const {
  const double a = design.c_lower, b = design.c_upper;
  if (recruitment == RecruitmentModel::uniform) return a + (b - a) * u;
  const double m = recruit_mode;
  const double fm = (m - a) / (b - a);
  if (u < fm) return a + std::sqrt(u * (b - a) * (m - a));
  return b - std::sqrt((1.0 - u) * (b - a) * (b - m));
}

double ScenarioConfig::observation_window(double v) const {
  // P(R <= v <= R + U) = int f_R(r) P(U >= v - r) dr over r <= v
  const double lo = censor_offset_lower, hi = censor_offset_upper;
  auto integrand = [&](double r) {
    const double gap = v - r;
    const double tail = gap <= lo ? 1.0 : (gap >= hi ? 0.0 : (hi - gap) / (hi - lo));
    return recruitment_density(r) * tail;
  };
  const double a = design.c_lower;
  const double b = std::min(v, design.c_upper);
  if (b <= a) return 0.0;
  // Integrand kinks at v - hi, v - lo and the mode; split there.
  std::vector<double> cuts{a, b};
  for (double k : {v - hi, v - lo, recruit_mode})
    if (k > a && k < b) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, cuts[i], cuts[i + 1], 0);
  return total;
}

ScenarioConfig scenario_from_settings(int t1, int t2, int recruit, int censor) {
  ScenarioConfig cfg;
  cfg.t1_setting = t1;
  cfg.t2_setting = t2;
  cfg.recruit_setting = recruit;
  cfg.censor_setting = censor;
  if (t1 < 1 || t1 > 3 || t2 < 1 || t2 > 2 || recruit < 1 || recruit > 2 || censor < 1 || censor > 2) {
    std::ostringstream os;
    os << "invalid scenario code " << t1 << t2 << recruit << censor
       << " (digits must be in {1,2,3}{1,2}{1,2}{1,2})";
    throw std::invalid_argument(os.str());
  }
  cfg.code = std::to_string(t1) + std::to_string(t2) + std::to_string(recruit) + std::to_string(censor);
  switch (t1) {
    case 1: cfg.t1_model = {4.0, 115.0, 40.0}; break;
    case 2: cfg.t1_model = {4.0, 130.0, 40.0}; break;
    default: cfg.t1_model = {3.5, 200.0, 0.0}; break;
  }
  if (t1 == 3)
    cfg.post_diagnosis_mean = t2 == 1 ? 5.0 : 10.0;
  else
    cfg.post_diagnosis_mean = t2 == 1 ? 2.5 : 7.5;
  cfg.recruitment = recruit == 1 ? RecruitmentModel::uniform : RecruitmentModel::ukb_like;
  cfg.censor_offset_lower = 11.0;
  cfg.censor_offset_upper = censor == 1 ? 15.0 : 25.0;
  return cfg;
}

ScenarioConfig parse_scenario_code(const std::string& code) {
  if (code.size() != 4 || !std::all_of(code.begin(), code.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
    throw std::invalid_argument("invalid scenario code '" + code + "' (expected four digits, e.g. 1111)");
  return scenario_from_settings(code[0] - '0', code[1] - '0', code[2] - '0', code[3] - '0');
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  auto setting = [&](const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("scenario config: missing key '") + key + "'");
    return j.at(key).get<int>();
  };
  ScenarioConfig cfg = scenario_from_settings(setting("t1_setting"), setting("t2_setting"),
                                              setting("recruit_setting"), setting("censor_setting"));
  if (j.contains("mortality")) {
    const auto& m = j.at("mortality");
    cfg.mortality.shape = m.value("shape", cfg.mortality.shape);
    cfg.mortality.rate = m.value("rate", cfg.mortality.rate);
  }
  cfg.post_diagnosis_mean = j.value("post_diagnosis_mean", cfg.post_diagnosis_mean);
  cfg.recruit_mode = j.value("recruit_mode", cfg.recruit_mode);
  if (j.contains("design")) {
    const auto& d = j.at("design");
    cfg.design.c_lower = d.value("c_lower", cfg.design.c_lower);
    cfg.design.c_upper = d.value("c_upper", cfg.design.c_upper);
    cfg.design.tau = d.value("tau", cfg.design.tau);
  }
  cfg.check();
  return cfg;
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  return {
      {"code", cfg.code},
      {"t1_setting", cfg.t1_setting},
      {"t2_setting", cfg.t2_setting},
      {"recruit_setting", cfg.recruit_setting},
      {"censor_setting", cfg.censor_setting},
      {"t1_model",
       {{"law", cfg.t1_model.truncation > 0.0 ? "trunc_weibull" : "weibull"},
        {"shape", cfg.t1_model.shape},
        {"scale", cfg.t1_model.scale},
        {"truncation", cfg.t1_model.truncation}}},
      {"post_diagnosis_law", "exponential"},
      {"post_diagnosis_mean", cfg.post_diagnosis_mean},
      {"recruitment_model", to_string(cfg.recruitment)},
      {"recruit_mode", cfg.recruit_mode},
      {"censor_offset", {cfg.censor_offset_lower, cfg.censor_offset_upper}},
      {"mortality", {{"law", "gompertz"}, {"shape", cfg.mortality.shape}, {"rate", cfg.mortality.rate}}},
      {"design", {{"c_lower", cfg.design.c_lower}, {"c_upper", cfg.design.c_upper}, {"tau", cfg.design.tau}}},
  };
}

std::pair<double, double> default_band_range(const ScenarioConfig& cfg) {
  if (cfg.t1_setting == 3) return {35.0, cfg.design.tau};
  if (cfg.t2_setting == 2 && cfg.censor_setting == 1) return {50.0, 75.0};
  return {50.0, cfg.design.tau};
}

LatentSubject draw_latent(const ScenarioConfig& cfg, SplitMix64& engine) {
  const double u_death = engine.open_unit();
  const double u_onset = engine.open_unit();
  const double u_post = engine.open_unit();
  const double u_recruit = engine.open_unit();
  const double u_censor = engine.open_unit();

  LatentSubject z;
  const double death = cfg.mortality.quantile_survival(u_death);
  const double onset = cfg.t1_model.draw(u_onset);
  if (onset < death) {
    z.t1 = onset;
    z.t2 = onset - cfg.post_diagnosis_mean * std::log(u_post);
  } else {
    z.t2 = death;
  }
  z.r = cfg.draw_recruitment(u_recruit);
  z.c = z.r + cfg.censor_offset_lower + (cfg.censor_offset_upper - cfg.censor_offset_lower) * u_censor;
  return z;
}

SubjectRecord observe(const LatentSubject& z) {
  SubjectRecord s;
  s.r = z.r;
  s.v2 = std::min(z.t2, z.c);
  s.delta2 = z.t2 <= z.c ? 1 : 0;
  if (z.t1 <= s.v2) {
    s.v1 = z.t1;
    s.delta1 = 1;
  } else {
    s.v1 = s.v2;
    s.delta1 = 0;
  }
  return s;
}

double baseline_mortality_sampler(const GompertzParams& params, std::uint64_t seed) {
  params.check();
  SplitMix64 engine(seed);
  return params.quantile_survival(engine.open_unit());
}

Cohort sample_cohort(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_cohort: n must be at least 1");
  cfg.check();
  const std::uint64_t family = derive_seed(seed, stream::subjects);
  std::vector<SubjectRecord> out;
  out.reserve(n);
  std::uint64_t candidates = 0;
  while (out.size() < n) {
    SplitMix64 engine(derive_seed(family, candidates));
    ++candidates;
    const auto z = draw_latent(cfg, engine);
    if (z.t2 >= z.r) out.push_back(observe(z));
    if (candidates > 10000 && static_cast<double>(out.size()) < 1e-4 * static_cast<double>(candidates)) {
      std::ostringstream os;
      os << "sample_cohort: acceptance rate below 1e-4 after " << candidates
         << " candidates; scenario is misconfigured";
      throw NumericError(os.str());
    }
  }
  return Cohort(std::move(out), cfg.design);
}

const char* to_string(OracleMethod m) {
  return m == OracleMethod::closed_form_integration ? "closed_form_integration" : "monte_carlo";
}

namespace {

constexpr double upper_age = 150.0;  // S_D(150) underflows for any sensible Gompertz
constexpr double abs_tol = 1e-6;

// Adaptive Gauss-Kronrod on [a, b]; integrand is smooth on each piece.
template <class F>
double integrate(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
  if (!(err <= abs_tol * 1e-2) && !(err <= 1e-10 * std::abs(value))) {
    std::ostringstream os;
    os << "oracle quadrature did not converge on [" << a << ", " << b << "] (error estimate " << err << ")";
    throw NumericError(os.str());
  }
  return value;
}

struct Densities {
  const ScenarioConfig& cfg;

  // Onset at a before death, times P(T2 in window | onset at a).
  double onset_mass(double a, double lower_death, double upper_death) const {
    const double mu = cfg.post_diagnosis_mean;
    const double start = std::max(lower_death - a, 0.0);
    double prob = std::exp(-start / mu);
    if (std::isfinite(upper_death)) prob -= upper_death > a ? std::exp(-(upper_death - a) / mu) : 1.0;
    return cfg.t1_model.density(a) * cfg.mortality.survival(a) * std::max(prob, 0.0);
  }

  // P(T1 <= t, T1 < D, lower <= T2 <= upper)
  double diseased(double t, double lower, double upper) const {
    const double lo = cfg.t1_model.truncation;
    const double hi = std::min(t, upper);
    if (hi <= lo) return 0.0;
    auto f = [&](double a) { return onset_mass(a, lower, upper); };
    if (lower > lo && lower < hi) return integrate(f, lo, lower) + integrate(f, lower, hi);
    return integrate(f, lo, hi);
  }

  // P(T2 >= lower) = diseased part + disease-free deaths at or after lower
  double alive_at(double lower) const {
    const double inf = std::numeric_limits<double>::infinity();
    auto g = [&](double d) { return cfg.mortality.density(d) * cfg.t1_model.survival(d); };
    return diseased(upper_age, lower, inf) + integrate(g, lower, upper_age);
  }
};

}  // namespace

OracleValue oracle_at(const ScenarioConfig& cfg, double t) {
  cfg.check();
  const Densities dens{cfg};
  const double cl = cfg.design.c_lower;
  const double inf = std::numeric_limits<double>::infinity();
  const double alive = dens.alive_at(cl);
  OracleValue v;
  v.conditional = dens.diseased(t, cl, inf) / alive;
  v.conditional_tau = dens.diseased(std::min(t, cfg.design.tau), cl, cfg.design.tau) / alive;
  const double event_free = cfg.t1_model.survival(cl) * cfg.mortality.survival(cl);
  if (t > cl) {
    auto f = [&](double a) { return cfg.t1_model.density(a) * cfg.mortality.survival(a); };
    v.event_free = integrate(f, std::max(cl, cfg.t1_model.truncation), t) / event_free;
  }
  return v;
}

OracleFunction::OracleFunction(const ScenarioConfig& cfg) : cfg_(cfg) {
  cfg_.check();
  const Densities dens{cfg_};
  const double cl = cfg_.design.c_lower;
  alive_ = dens.alive_at(cl);
  event_free_ = cfg_.t1_model.survival(cl) * cfg_.mortality.survival(cl);
  const int last = static_cast<int>(std::ceil(cfg_.design.tau)) + 1;
  for (int a = 0; a <= last; ++a) nodes_.push_back(a);
  for (auto& c : cum_) {
    c.assign(nodes_.size(), 0.0);
  }
  for (std::size_t k = 1; k < nodes_.size(); ++k)
    for (int w = 0; w < 3; ++w) cum_[w][k] = cum_[w][k - 1] + piece(w, nodes_[k - 1], nodes_[k]);
}

double OracleFunction::piece(int which, double a, double b) const {
  const Densities dens{cfg_};
  const double cl = cfg_.design.c_lower;
  const double tau = cfg_.design.tau;
  const double trunc = cfg_.t1_model.truncation;
  a = std::max(a, trunc);
  if (which == 2) a = std::max(a, cl);
  if (which == 1) b = std::min(b, tau);
  if (!(b > a)) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  auto f = [&](double x) {
    switch (which) {
      case 0: return dens.onset_mass(x, cl, inf);
      case 1: return dens.onset_mass(x, cl, tau);
      default: return cfg_.t1_model.density(x) * cfg_.mortality.survival(x);
    }
  };
  // The integrands have a kink at c_L only; split there.
  if (a < cl && cl < b)
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, cl, 0) +
           boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cl, b, 0);
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0);
}

OracleValue OracleFunction::operator()(double t) const {
  if (t <= 0.0) return {};
  t = std::min(t, nodes_.back());
  auto k = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), t) - nodes_.begin()) - 1;
  OracleValue v;
  v.conditional = (cum_[0][k] + piece(0, nodes_[k], t)) / alive_;
  v.conditional_tau = (cum_[1][k] + piece(1, nodes_[k], t)) / alive_;
  v.event_free = (cum_[2][k] + piece(2, nodes_[k], t)) / event_free_;
  return v;
}

namespace {

OracleCurve quadrature_curve(const ScenarioConfig& cfg, std::span<const double> grid) {
  OracleCurve out;
  out.method = OracleMethod::closed_form_integration;
  out.grid.assign(grid.begin(), grid.end());
  for (double t : grid) {
    const auto v = oracle_at(cfg, t);
    out.conditional.push_back(v.conditional);
    out.conditional_tau.push_back(v.conditional_tau);
    out.event_free.push_back(v.event_free);
  }
  out.conditional_se.assign(grid.size(), 0.0);
  out.conditional_tau_se.assign(grid.size(), 0.0);
  out.event_free_se.assign(grid.size(), 0.0);
  return out;
}

OracleCurve monte_carlo_curve(const ScenarioConfig& cfg, std::span<const double> grid, std::size_t draws,
                              std::uint64_t seed) {
  if (draws < 10'000'000) throw std::invalid_argument("monte_carlo oracle needs at least 10^7 draws");
  const double cl = cfg.design.c_lower;
  const double tau = cfg.design.tau;
  std::vector<double> onset_alive, onset_alive_tau, onset_event_free;
  std::size_t n_alive = 0, n_event_free = 0;
  constexpr std::size_t chunk = 1 << 16;
  const std::uint64_t family = derive_seed(seed, stream::oracle);
  for (std::size_t start = 0, block = 0; start < draws; start += chunk, ++block) {
    SplitMix64 engine(derive_seed(family, block));
    const std::size_t stop = std::min(draws, start + chunk);
    for (std::size_t i = start; i < stop; ++i) {
      const auto z = draw_latent(cfg, engine);
      if (z.t2 < cl) continue;
      ++n_alive;
      const bool diseased = std::isfinite(z.t1);
      if (diseased) {
        onset_alive.push_back(z.t1);
        if (z.t2 <= tau) onset_alive_tau.push_back(z.t1);
      }
      if (!diseased || z.t1 >= cl) {
        ++n_event_free;
        if (diseased) onset_event_free.push_back(z.t1);
      }
    }
  }
  for (auto* v : {&onset_alive, &onset_alive_tau, &onset_event_free}) std::sort(v->begin(), v->end());

  OracleCurve out;
  out.method = OracleMethod::monte_carlo;
  out.draws = draws;
  out.grid.assign(grid.begin(), grid.end());
  auto fill = [&](const std::vector<double>& onsets, std::size_t denom, std::vector<double>& value,
                  std::vector<double>& se) {
    for (double t : grid) {
      const auto hits = static_cast<double>(std::upper_bound(onsets.begin(), onsets.end(), t) - onsets.begin());
      const double p = denom > 0 ? hits / static_cast<double>(denom) : 0.0;
      value.push_back(p);
      se.push_back(denom > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(denom)) : 0.0);
    }
  };
  fill(onset_alive, n_alive, out.conditional, out.conditional_se);
  fill(onset_alive_tau, n_alive, out.conditional_tau, out.conditional_tau_se);
  fill(onset_event_free, n_event_free, out.event_free, out.event_free_se);
  return out;
}

}  // namespace

OracleCurve true_cif(const ScenarioConfig& cfg, std::span<const double> grid, OracleMethod method,
                     std::size_t draws, std::uint64_t seed) {
  cfg.check();
  using Key = std::tuple<std::string, std::vector<double>, int, std::size_t, std::uint64_t>;
  static std::mutex mutex;
  static std::map<Key, OracleCurve> cache;
  const bool mc = method == OracleMethod::monte_carlo;
  Key key{cfg.hash(), std::vector<double>(grid.begin(), grid.end()), static_cast<int>(method), mc ? draws : 0,
          mc ? seed : 0};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  OracleCurve out = mc ? monte_carlo_curve(cfg, grid, draws, seed) : quadrature_curve(cfg, grid);
  std::lock_guard lock(mutex);
  cache.emplace(std::move(key), out);
  return out;
}

}  // namespace biocif
