#include "biocif/estimators.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "biocif/errors.hpp"
#include "biocif/km.hpp"

namespace biocif {

const char* to_string(EstimandTag tag) {
  switch (tag) {
    case EstimandTag::aj_conditional: return "AJ_conditional";
    case EstimandTag::new_conditional: return "NEW_conditional";
    case EstimandTag::combined: return "COMBINED";
  }
  return "unknown";
}

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::aj: return "aj";
    case EstimatorKind::new_estimator: return "new";
    case EstimatorKind::tie_general: return "tie_general";
    case EstimatorKind::combination: return "comb";
  }
  return "unknown";
}

CifEstimate aalen_johansen(const Cohort& c) {
  const auto table = build_risk_table(c, RiskKind::first_event);
  if (table.n_eligible() == 0)
    throw NumericError("aalen_johansen: empty post-exclusion cohort (no subject event-free at recruitment)");

  CifEstimate out;
  out.estimator = EstimatorKind::aj;
  out.estimand = EstimandTag::aj_conditional;
  out.design = c.design();
  out.n_used = table.n_eligible();

  std::vector<double> knots, values;
  double surv_minus = 1.0;
  double cif = 0.0;
  for (const auto& row : table.rows()) {
    if (row.age > c.design().tau) break;
    if (row.disease_events > 0) {
      cif += surv_minus * static_cast<double>(row.disease_events) / static_cast<double>(row.at_risk);
      knots.push_back(row.age);
      values.push_back(cif);
    }
    surv_minus *= 1.0 - static_cast<double>(row.events) / static_cast<double>(row.at_risk);
  }
  if (knots.empty()) out.warnings.emplace_back("aalen_johansen: no incident disease events; curve is identically 0");
  out.curve = StepCurve(std::move(knots), std::move(values), 0.0);
  return out;
}

std::vector<HazardIncrement> conditional_hazard(const Cohort& c, double t2) {
  std::vector<const SubjectRecord*> died_at;
  for (const auto& s : c.subjects())
    if (s.delta2 == 1 && s.v2 == t2) died_at.push_back(&s);
  if (died_at.empty()) {
    std::ostringstream os;
    os << "conditional_hazard: " << t2 << " is not an observed death age";
    throw std::invalid_argument(os.str());
  }
  std::map<double, std::size_t> onsets;
  for (const auto* s : died_at)
    if (s->delta1 == 1) ++onsets[s->v1];

  std::vector<HazardIncrement> out;
  out.reserve(onsets.size());
  for (const auto& [t1, events] : onsets) {
    std::size_t at_risk = 0;
    for (const auto* s : died_at)
      if (t1 <= s->v1 && s->r <= t2) ++at_risk;
    // at_risk >= events since each onset subject is at risk at its own age
    if (at_risk == 0) continue;
    out.push_back({t1, events, at_risk, static_cast<double>(events) / static_cast<double>(at_risk)});
  }
  return out;
}

double conditional_survival(const std::vector<HazardIncrement>& increments, double t1) {
  double surv = 1.0;
  for (const auto& h : increments) {
    if (h.t1 > t1) break;
    surv *= 1.0 - h.increment;
  }
  return surv;
}

namespace {

std::size_t prevalent_cases_used(const Cohort& c) {
  std::size_t k = 0;
  for (const auto& s : c.subjects())
    if (s.case_death() && s.v1 < s.r && s.v2 <= c.design().tau) ++k;
  return k;
}

}  // namespace

CifEstimate tie_general_cif(const Cohort& c) {
  const auto table = build_risk_table(c, RiskKind::death);
  const auto s2 = km_left_truncated(table);

  CifEstimate out;
  out.estimator = EstimatorKind::tie_general;
  out.estimand = EstimandTag::new_conditional;
  out.design = c.design();
  out.n_used = c.size();
  out.n_prevalent_used = prevalent_cases_used(c);

  // Group deaths by age once; conditional_hazard is the readable per-age
  // form, this loop is its batched equivalent.
  std::map<double, std::vector<const SubjectRecord*>> deaths;
  for (const auto& s : c.subjects())
    if (s.delta2 == 1 && s.v2 <= c.design().tau) deaths[s.v2].push_back(&s);

  std::vector<std::pair<double, double>> jumps;
  for (const auto& [t2, group] : deaths) {
    const double dF = s2.at_minus(t2) - s2.at(t2);
    std::map<double, std::size_t> onsets;
    for (const auto* s : group)
      if (s->delta1 == 1) ++onsets[s->v1];
    double surv = 1.0;
    for (const auto& [t1, events] : onsets) {
      std::size_t at_risk = 0;
      for (const auto* s : group)
        if (t1 <= s->v1 && s->r <= t2) ++at_risk;
      const double next = surv * (1.0 - static_cast<double>(events) / static_cast<double>(at_risk));
      jumps.emplace_back(t1, (surv - next) * dF);
      surv = next;
    }
  }
  if (deaths.empty()) out.warnings.emplace_back("tie_general_cif: no observed deaths; curve is identically 0");
  out.curve = StepCurve::from_jumps(std::move(jumps), 0.0);
  return out;
}

CifEstimate new_cif(const Cohort& c) {
  const DeathWeight weight(c);
  const double n = static_cast<double>(c.size());

  CifEstimate out;
  out.estimator = EstimatorKind::new_estimator;
  out.estimand = EstimandTag::new_conditional;
  out.design = c.design();
  out.n_used = c.size();
  out.n_prevalent_used = prevalent_cases_used(c);

  std::vector<std::pair<double, double>> jumps;
  std::size_t exhausted = 0;
  for (const auto& s : c.subjects()) {
    if (!s.case_death() || s.v2 > c.design().tau) continue;
    const double k = weight(s.v2);
    if (k == 0.0) ++exhausted;
    jumps.emplace_back(s.v1, k / n);
  }
  if (jumps.empty())
    out.warnings.emplace_back("new_cif: no subject with both disease and death observed; curve is identically 0");
  if (exhausted > 0) {
    std::ostringstream os;
    os << "new_cif: " << exhausted << " case(s) died after the death survival estimate reached 0; contribution set to 0";
    out.warnings.push_back(os.str());
  }
  out.curve = StepCurve::from_jumps(std::move(jumps), 0.0);
  return out;
}

CifEstimate combination_cif(const CifEstimate& aj, const CifEstimate& fresh, bool allow_mixed_estimand) {
  const double c_lower = fresh.design.c_lower;
  if (!allow_mixed_estimand && fresh.curve.at_minus(c_lower) > 0.0) {
    std::ostringstream os;
    os << "combination_cif: new estimate has mass " << fresh.curve.at_minus(c_lower)
       << " below c_L = " << c_lower << "; the two estimands differ";
    throw std::invalid_argument(os.str());
  }
  const StepCurve* curves[] = {&aj.curve, &fresh.curve};
  auto knots = merged_knots(curves);
  std::vector<double> values;
  values.reserve(knots.size());
  for (double t : knots) values.push_back(0.5 * aj.curve.at(t) + 0.5 * fresh.curve.at(t));

  CifEstimate out;
  out.estimator = EstimatorKind::combination;
  out.estimand = EstimandTag::combined;
  out.design = fresh.design;
  out.n_used = fresh.n_used;
  out.n_prevalent_used = fresh.n_prevalent_used;
  out.curve = StepCurve(std::move(knots), std::move(values),
                        0.5 * aj.curve.value_before_first() + 0.5 * fresh.curve.value_before_first());
  return out;
}

std::optional<std::string> insufficient_data_warning(const CifEstimate& aj, const CifEstimate& fresh) {
  const double tau = fresh.design.tau;
  const double g_new = fresh.curve.at(tau);
  const double g_aj = aj.curve.at(tau);
  if (g_new < 0.8 * g_aj) {
    std::ostringstream os;
    os << "new estimate at tau (" << g_new << ") is below 0.8 x Aalen-Johansen (" << g_aj
       << "): insufficient data for properly estimating the conditional onset distribution S(t1|t2)";
    return os.str();
  }
  return std::nullopt;
}

}  // namespace biocif
