#include "biocif/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "biocif/errors.hpp"
#include "biocif/km.hpp"
#include "biocif/rng.hpp"

namespace biocif {

const char* to_string(InfluenceTerms terms) {
  return terms == InfluenceTerms::main_only ? "main_only" : "main_plus_auxiliary";
}

InfluenceMatrix::InfluenceMatrix(std::vector<double> grid, Eigen::MatrixXd main, Eigen::MatrixXd auxiliary,
                                 InfluenceTerms terms)
    : grid_(std::move(grid)), terms_(terms) {
  if (terms == InfluenceTerms::main_only) {
    psi_ = std::move(main);
  } else {
    psi_ = main + auxiliary;
    main_ = std::move(main);
  }
}

namespace {

void check_grid(std::span<const double> grid, double tau) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] > tau) {
      std::ostringstream os;
      os << "influence: grid age " << grid[k] << " exceeds tau = " << tau;
      throw std::invalid_argument(os.str());
    }
    if (k > 0 && grid[k] < grid[k - 1]) throw std::invalid_argument("influence: grid must be sorted");
  }
}

// A subject contributing a jump to the estimator, with its weight.
struct Contribution {
  std::size_t subject = 0;
  double onset = 0.0;
  double weight = 0.0;
  double exit = 0.0;  // v2 for the new estimator, v1 for Aalen-Johansen
};

// counts[k] = number of contributions with onset <= grid[k]; contributions
// must be sorted by onset.
std::vector<std::size_t> onset_counts(const std::vector<Contribution>& cases, std::span<const double> grid) {
  std::vector<std::size_t> counts(grid.size());
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (j < cases.size() && cases[j].onset <= grid[k]) ++j;
    counts[k] = j;
  }
  return counts;
}

// Cumulative integrand of the KM influence correction,
//   W[r] = sum_{rows < r} (S(s-)/S(s)) * scale * d(s) / y(s)^2,
// truncated where the survival estimate reaches zero.
std::vector<double> km_correction_prefix(const RiskSetTable& table, double scale, std::size_t& truncated) {
  const auto& rows = table.rows();
  std::vector<double> prefix(rows.size() + 1, 0.0);
  double surv = 1.0;
  truncated = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = static_cast<double>(rows[r].at_risk);
    const double d = static_cast<double>(rows[r].events);
    const double after = surv * (1.0 - d / y);
    double term = 0.0;
    if (after > 0.0)
      term = (surv / after) * scale * d / (y * y);
    else
      ++truncated;
    prefix[r + 1] = prefix[r] + term;
    surv = after;
  }
  return prefix;
}

std::size_t first_row_at_or_after(const RiskSetTable& t, double age) {
  const auto& rows = t.rows();
  return static_cast<std::size_t>(
      std::lower_bound(rows.begin(), rows.end(), age, [](const RiskSetRow& r, double a) { return r.age < a; }) -
      rows.begin());
}

std::size_t first_row_after(const RiskSetTable& t, double age) {
  const auto& rows = t.rows();
  return static_cast<std::size_t>(
      std::upper_bound(rows.begin(), rows.end(), age, [](double a, const RiskSetRow& r) { return a < r.age; }) -
      rows.begin());
}

void fill_main(Eigen::MatrixXd& main, const std::vector<Contribution>& cases, const std::vector<std::size_t>& counts,
               const std::vector<double>& centre, const std::vector<char>& in_sample) {
  const auto n = main.rows();
  const auto m = main.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!in_sample[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index k = 0; k < m; ++k) main(i, k) = -centre[static_cast<std::size_t>(k)];
  }
  for (std::size_t j = 0; j < cases.size(); ++j) {
    for (std::size_t k = 0; k < counts.size(); ++k)
      if (j < counts[k]) main(static_cast<Eigen::Index>(cases[j].subject), static_cast<Eigen::Index>(k)) += cases[j].weight;
  }
}

}  // namespace

InfluenceMatrix influence_new(const Cohort& c, std::span<const double> grid, InfluenceTerms terms) {
  check_grid(grid, c.design().tau);
  const std::size_t n = c.size();
  const double nd = static_cast<double>(n);
  const DeathWeight weight(c);
  const auto& table = weight.table();

  std::vector<Contribution> cases;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = c[i];
    if (s.case_death() && s.v2 <= c.design().tau) cases.push_back({i, s.v1, weight(s.v2), s.v2});
  }
  std::stable_sort(cases.begin(), cases.end(),
                   [](const Contribution& a, const Contribution& b) { return a.onset < b.onset; });
  const auto counts = onset_counts(cases, grid);

  std::vector<double> prefix(cases.size() + 1, 0.0);
  for (std::size_t j = 0; j < cases.size(); ++j) prefix[j + 1] = prefix[j] + cases[j].weight;
  std::vector<double> estimate(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) estimate[k] = prefix[counts[k]] / nd;

  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd main = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
  fill_main(main, cases, counts, estimate, std::vector<char>(n, 1));

  std::vector<std::string> warnings;
  Eigen::MatrixXd aux;
  if (terms == InfluenceTerms::main_plus_auxiliary) {
    aux = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
    std::size_t truncated = 0;
    const auto integral = km_correction_prefix(table, nd, truncated);
    if (truncated > 0)
      warnings.emplace_back("influence_new: death survival estimate reaches 0; auxiliary integral truncated");

    std::vector<std::size_t> case_upper(cases.size());  // rows strictly before v2j
    std::vector<double> case_risk(cases.size());        // Ybar(v2j)
    for (std::size_t j = 0; j < cases.size(); ++j) {
      case_upper[j] = first_row_at_or_after(table, cases[j].exit);
      case_risk[j] = weight.risk_proportion(cases[j].exit);
    }
    std::vector<double> running(cases.size() + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = c[i];
      const std::size_t lower = first_row_at_or_after(table, s.r);
      const std::size_t upper = first_row_after(table, s.v2);
      const double own_risk = s.delta2 == 1 ? weight.risk_proportion(s.v2) : 1.0;
      running[0] = 0.0;
      for (std::size_t j = 0; j < cases.size(); ++j) {
        const double v2j = cases[j].exit;
        const std::size_t stop = std::min(upper, case_upper[j]);
        const double inner = stop > lower ? integral[stop] - integral[lower] : 0.0;
        const double jump = (s.delta2 == 1 && s.v2 < v2j) ? 1.0 / own_risk : 0.0;
        const double survival_term = cases[j].weight * (jump - inner);
        const double at_risk = (s.r <= v2j && v2j <= s.v2) ? 1.0 : 0.0;
        const double risk_term = cases[j].weight / case_risk[j] * (at_risk - case_risk[j]);
        running[j + 1] = running[j] + survival_term + risk_term;
      }
      for (Eigen::Index k = 0; k < m; ++k) aux(static_cast<Eigen::Index>(i), k) = -running[counts[static_cast<std::size_t>(k)]] / nd;
    }
  }
  InfluenceMatrix out(std::vector<double>(grid.begin(), grid.end()), std::move(main), std::move(aux), terms);
  out.warnings = std::move(warnings);
  return out;
}

InfluenceMatrix influence_aj(const Cohort& c, std::span<const double> grid, InfluenceTerms terms) {
  check_grid(grid, c.design().tau);
  const std::size_t n = c.size();
  const double nd = static_cast<double>(n);
  const auto table = build_risk_table(c, RiskKind::first_event);
  const std::size_t n0 = table.n_eligible();
  if (n0 == 0) throw NumericError("influence_aj: empty post-exclusion cohort");
  const double n0d = static_cast<double>(n0);
  const double pi_hat = n0d / nd;
  const auto& rows = table.rows();

  std::vector<double> surv_before(rows.size());
  {
    double surv = 1.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      surv_before[r] = surv;
      surv *= 1.0 - static_cast<double>(rows[r].events) / static_cast<double>(rows[r].at_risk);
    }
  }

  std::vector<char> in_sample(n, 0);
  std::vector<Contribution> cases;
  std::vector<std::size_t> case_row;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = c[i];
    if (!s.event_free_at_entry()) continue;
    in_sample[i] = 1;
    if (s.delta1 == 1 && s.v1 <= c.design().tau) cases.push_back({i, s.v1, 0.0, s.v1});
  }
  std::stable_sort(cases.begin(), cases.end(),
                   [](const Contribution& a, const Contribution& b) { return a.onset < b.onset; });
  case_row.resize(cases.size());
  for (std::size_t j = 0; j < cases.size(); ++j) {
    const std::size_t r = first_row_at_or_after(table, cases[j].onset);
    case_row[j] = r;
    // Khat-dagger(v1j) = S*(v1j-) / (y(v1j) / n)
    cases[j].weight = surv_before[r] * nd / static_cast<double>(rows[r].at_risk);
  }
  const auto counts = onset_counts(cases, grid);
  std::vector<double> prefix(cases.size() + 1, 0.0);
  for (std::size_t j = 0; j < cases.size(); ++j) prefix[j + 1] = prefix[j] + cases[j].weight;

  // Centring by G/pi makes the column means vanish over all n subjects.
  std::vector<double> centre(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) centre[k] = prefix[counts[k]] / nd / pi_hat;

  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd main = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
  fill_main(main, cases, counts, centre, in_sample);

  std::vector<std::string> warnings;
  Eigen::MatrixXd aux;
  if (terms == InfluenceTerms::main_plus_auxiliary) {
    aux = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
    std::size_t truncated = 0;
    const auto integral = km_correction_prefix(table, n0d, truncated);
    if (truncated > 0)
      warnings.emplace_back("influence_aj: first-event survival estimate reaches 0; auxiliary integral truncated");

    std::vector<double> case_risk(cases.size());  // y(v1j)
    for (std::size_t j = 0; j < cases.size(); ++j) case_risk[j] = static_cast<double>(rows[case_row[j]].at_risk);

    std::vector<double> running(cases.size() + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      const auto& s = c[i];
      const std::size_t lower = first_row_at_or_after(table, s.r);
      const std::size_t upper = first_row_after(table, s.v1);
      const bool first_event = s.delta1 == 1 || s.delta2 == 1;
      // Ybar*(v3i) = y(v3i) / n0
      const double own_risk = first_event ? static_cast<double>(table.at_risk(s.v1)) / n0d : 1.0;
      running[0] = 0.0;
      for (std::size_t j = 0; j < cases.size(); ++j) {
        const double v1j = cases[j].onset;
        const std::size_t stop = std::min(upper, case_row[j]);
        const double inner = stop > lower ? integral[stop] - integral[lower] : 0.0;
        const double jump = (first_event && s.v1 < v1j) ? 1.0 / own_risk : 0.0;
        const double survival_term = cases[j].weight * (jump - inner) / pi_hat;
        const double at_risk = (s.r <= v1j && v1j <= s.v1) ? 1.0 : 0.0;
        const double risk_term = cases[j].weight * nd / case_risk[j] * (at_risk - case_risk[j] / n0d);
        running[j + 1] = running[j] + survival_term + risk_term;
      }
      for (Eigen::Index k = 0; k < m; ++k) aux(static_cast<Eigen::Index>(i), k) = -running[counts[static_cast<std::size_t>(k)]] / nd;
    }
  }
  InfluenceMatrix out(std::vector<double>(grid.begin(), grid.end()), std::move(main), std::move(aux), terms);
  out.warnings = std::move(warnings);
  return out;
}

InfluenceMatrix influence_combination(const InfluenceMatrix& aj, const InfluenceMatrix& fresh) {
  if (aj.grid() != fresh.grid() || aj.rows() != fresh.rows())
    throw std::invalid_argument("influence_combination: matrices must share grid and subjects");
  if (aj.terms() != fresh.terms())
    throw std::invalid_argument("influence_combination: matrices must include the same terms");
  Eigen::MatrixXd main = 0.5 * (aj.main_term() + fresh.main_term());
  Eigen::MatrixXd aux;
  if (aj.terms() == InfluenceTerms::main_plus_auxiliary)
    aux = 0.5 * (aj.values() + fresh.values()) - main;
  return InfluenceMatrix(aj.grid(), std::move(main), std::move(aux), aj.terms());
}

double VarianceCurve::standard_error(std::size_t k) const {
  return std::sqrt(s2[k] / static_cast<double>(n));
}

StepCurve VarianceCurve::as_step_curve() const {
  std::vector<double> knots, values;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!knots.empty() && grid[k] == knots.back()) continue;
    knots.push_back(grid[k]);
    values.push_back(s2[k]);
  }
  return StepCurve(std::move(knots), std::move(values), 0.0);
}

VarianceCurve variance_curve(const InfluenceMatrix& psi) {
  VarianceCurve out;
  out.grid = psi.grid();
  out.n = psi.rows();
  out.s2.resize(psi.cols());
  const double nd = static_cast<double>(psi.rows());
  for (Eigen::Index k = 0; k < psi.values().cols(); ++k)
    out.s2[static_cast<std::size_t>(k)] = psi.values().col(k).squaredNorm() / nd;
  return out;
}

const char* to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::log_complement: return "log";
    case TransformKind::arcsine_root: return "arcsine-root";
  }
  return "unknown";
}

TransformKind parse_transform(const std::string& name) {
  if (name == "identity" || name == "plain") return TransformKind::identity;
  if (name == "log" || name == "log-complement") return TransformKind::log_complement;
  if (name == "arcsine-root" || name == "arcsine" || name == "asin") return TransformKind::arcsine_root;
  throw std::invalid_argument("unknown transform '" + name + "' (expected identity, log, arcsine-root)");
}

double Transform::g(double u) const {
  switch (kind) {
    case TransformKind::identity: return u;
    case TransformKind::log_complement: return -std::log1p(-u);
    case TransformKind::arcsine_root: return std::numbers::pi / 2.0 - std::asin(std::sqrt(1.0 - u));
  }
  return u;
}

double Transform::derivative(double u) const {
  switch (kind) {
    case TransformKind::identity: return 1.0;
    case TransformKind::log_complement: return 1.0 / (1.0 - u);
    case TransformKind::arcsine_root: {
      const double denom = 2.0 * std::sqrt(u * (1.0 - u));
      return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    }
  }
  return 1.0;
}

double Transform::inverse(double y) const {
  switch (kind) {
    case TransformKind::identity: return y;
    case TransformKind::log_complement: return -std::expm1(-y);
    case TransformKind::arcsine_root: {
      const double s = std::sin(y);
      return s * s;
    }
  }
  return y;
}

double Transform::lower_limit() const { return 0.0; }

double Transform::upper_limit() const {
  switch (kind) {
    case TransformKind::identity: return 1.0;
    case TransformKind::log_complement: return std::numeric_limits<double>::infinity();
    case TransformKind::arcsine_root: return std::numbers::pi / 2.0;
  }
  return 1.0;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;
};

// estimate +- crit * se on the transformed scale, mapped back and kept
// inside [0, 1].
Interval interval_on_scale(double estimate, double crit, double se, const Transform& tr) {
  if (se == 0.0 || crit == 0.0) return {estimate, estimate, false};
  if (tr.kind == TransformKind::identity)
    return {std::max(0.0, estimate - crit * se), std::min(1.0, estimate + crit * se), false};
  if (estimate >= 1.0) return {estimate, estimate, true};
  const double centre = tr.g(estimate);
  const double half = crit * tr.derivative(estimate) * se;
  const double lo = tr.inverse(std::max(centre - half, tr.lower_limit()));
  const double hi = tr.inverse(std::min(centre + half, tr.upper_limit()));
  return {std::min(lo, estimate), std::max(hi, estimate), false};
}

}  // namespace

PointwiseCI pointwise_ci(const CifEstimate& est, const VarianceCurve& var, const Transform& transform, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("pointwise_ci: alpha must lie in (0, 1)");
  const double zeta = normal_quantile(1.0 - alpha / 2.0);
  PointwiseCI out;
  out.alpha = alpha;
  out.transform = transform;
  for (std::size_t k = 0; k < var.grid.size(); ++k) {
    const double t = var.grid[k];
    const double g = est.curve.at(t);
    const double se = var.standard_error(k);
    const auto iv = interval_on_scale(g, zeta, se, transform);
    out.ages.push_back(t);
    out.estimate.push_back(g);
    out.standard_error.push_back(se);
    out.lower.push_back(iv.lower);
    out.upper.push_back(iv.upper);
    out.degenerate.push_back(iv.degenerate);
  }
  return out;
}

MultiplierDraws draw_multipliers(std::size_t n, std::size_t draws, std::uint64_t seed) {
  MultiplierDraws z(static_cast<Eigen::Index>(draws), static_cast<Eigen::Index>(n));
  const std::uint64_t family = derive_seed(seed, stream::multipliers);
  for (std::size_t b = 0; b < draws; ++b) {
    SplitMix64 engine(derive_seed(family, b));
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) = normal(engine);
  }
  return z;
}

std::vector<double> band_grid(std::span<const StepCurve* const> curves, double lo, double hi) {
  std::vector<double> out{lo};
  for (double t : merged_knots(curves))
    if (t > lo && t <= hi) out.push_back(t);
  return out;
}

BandResult multiplier_band(const InfluenceMatrix& psi, const CifEstimate& est, const VarianceCurve& var,
                           double range_lower, double range_upper, std::size_t draws, double alpha,
                           const Transform& transform, std::uint64_t seed) {
  if (draws < 2) throw std::invalid_argument("multiplier_band: need at least 2 multiplier draws");
  return multiplier_band(psi, est, var, range_lower, range_upper, draw_multipliers(psi.rows(), draws, seed), alpha,
                         transform, seed);
}

BandResult multiplier_band(const InfluenceMatrix& psi, const CifEstimate& est, const VarianceCurve& var,
                           double range_lower, double range_upper, const MultiplierDraws& z, double alpha,
                           const Transform& transform, std::uint64_t seed) {
  const auto draws = static_cast<std::size_t>(z.rows());
  if (draws < 2) throw std::invalid_argument("multiplier_band: need at least 2 multiplier draws");
  if (static_cast<std::size_t>(z.cols()) != psi.rows())
    throw std::invalid_argument("multiplier_band: multiplier columns must match subjects");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("multiplier_band: alpha must lie in (0, 1)");
  if (!(range_lower <= range_upper)) throw std::invalid_argument("multiplier_band: empty range");
  if (var.grid != psi.grid()) throw std::invalid_argument("multiplier_band: variance and influence grids differ");

  const auto& grid = psi.grid();
  const auto first = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), range_lower) - grid.begin());
  const auto last = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), range_upper) - grid.begin());
  if (first >= last) throw std::invalid_argument("multiplier_band: no grid ages inside the band range");

  BandResult out;
  out.range_lower = range_lower;
  out.range_upper = range_upper;
  out.draws = draws;
  out.seed = seed;
  out.alpha = alpha;
  out.transform = transform;
  if (draws < 100) out.warnings.emplace_back("multiplier_band: fewer than 100 multiplier draws");

  const std::size_t m = last - first;
  std::vector<double> estimate(m), se(m);
  std::vector<char> active(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    estimate[k] = est.curve.at(grid[first + k]);
    se[k] = var.standard_error(first + k);
    active[k] = var.s2[first + k] > 0.0;
    if (!active[k]) out.dropped_ages.push_back(grid[first + k]);
  }
  if (std::none_of(active.begin(), active.end(), [](char a) { return a != 0; })) {
    out.warnings.emplace_back("multiplier_band: s(t) is zero throughout the band range; band equals the estimate");
    out.maxima.assign(draws, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      out.ages.push_back(grid[first + k]);
      out.estimate.push_back(estimate[k]);
      out.lower.push_back(estimate[k]);
      out.upper.push_back(estimate[k]);
    }
    return out;
  }
  if (!out.dropped_ages.empty()) {
    std::ostringstream os;
    os << "multiplier_band: " << out.dropped_ages.size() << " grid age(s) with s(t) = 0 excluded from the supremum";
    out.warnings.push_back(os.str());
  }

  const double nd = static_cast<double>(psi.rows());
  const auto block = psi.values().middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(m));
  const Eigen::MatrixXd delta = (z * block) / nd;

  out.maxima.assign(draws, 0.0);
  if (transform.kind == TransformKind::identity) {
    for (std::size_t b = 0; b < draws; ++b) {
      double sup = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        if (active[k]) sup = std::max(sup, std::abs(delta(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k))) / se[k]);
      out.maxima[b] = sup;
    }
  } else {
    const Eigen::RowVectorXd centre = block.colwise().mean();
    std::size_t nonfinite = 0;
    for (std::size_t b = 0; b < draws; ++b) {
      double sup = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (!active[k] || estimate[k] >= 1.0) continue;
        const auto kk = static_cast<Eigen::Index>(k);
        const double perturbed =
            std::clamp(estimate[k] + delta(static_cast<Eigen::Index>(b), kk) - centre(kk), 0.0, 1.0);
        const double gamma =
            (transform.g(perturbed) - transform.g(estimate[k])) / (transform.derivative(perturbed) * se[k]);
        if (!std::isfinite(gamma)) {
          ++nonfinite;
          continue;
        }
        sup = std::max(sup, std::abs(gamma));
      }
      out.maxima[b] = sup;
    }
    if (nonfinite > 0) {
      std::ostringstream os;
      os << "multiplier_band: " << nonfinite << " perturbed value(s) at the edge of the transform domain ignored";
      out.warnings.push_back(os.str());
    }
  }

  std::vector<double> sorted = out.maxima;
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(draws) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, draws);
  out.critical_value = sorted[rank - 1];

  for (std::size_t k = 0; k < m; ++k) {
    const auto iv = interval_on_scale(estimate[k], active[k] ? out.critical_value : 0.0, se[k], transform);
    out.ages.push_back(grid[first + k]);
    out.estimate.push_back(estimate[k]);
    out.lower.push_back(iv.lower);
    out.upper.push_back(iv.upper);
  }
  return out;
}

}  // namespace biocif
