#include "biocif/km.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

#include "biocif/errors.hpp"

namespace biocif {

RiskSetTable::RiskSetTable(RiskKind kind, std::size_t n_cohort, std::vector<double> entries,
                           std::vector<double> exits, std::vector<RiskSetRow> rows)
    : kind_(kind),
      n_cohort_(n_cohort),
      entries_(std::move(entries)),
      exits_(std::move(exits)),
      rows_(std::move(rows)) {
  std::sort(entries_.begin(), entries_.end());
  std::sort(exits_.begin(), exits_.end());
}

std::size_t RiskSetTable::at_risk(double t) const {
  auto entered = std::upper_bound(entries_.begin(), entries_.end(), t) - entries_.begin();
  auto left = std::lower_bound(exits_.begin(), exits_.end(), t) - exits_.begin();
  return static_cast<std::size_t>(entered - left);
}

RiskSetTable build_risk_table(const Cohort& c, RiskKind kind) {
  std::vector<double> entries, exits;
  entries.reserve(c.size());
  exits.reserve(c.size());
  struct Counts {
    std::size_t events = 0;
    std::size_t disease = 0;
  };
  std::map<double, Counts> by_age;
  for (const auto& s : c.subjects()) {
    if (kind == RiskKind::death) {
      entries.push_back(s.r);
      exits.push_back(s.v2);
      if (s.delta2 == 1) ++by_age[s.v2].events;
    } else {
      if (!s.event_free_at_entry()) continue;
      entries.push_back(s.r);
      exits.push_back(s.v1);
      if (s.delta1 == 1 || s.delta2 == 1) {
        auto& cnt = by_age[s.v1];
        ++cnt.events;
        if (s.delta1 == 1) ++cnt.disease;
      }
    }
  }
  RiskSetTable probe(kind, c.size(), entries, exits, {});
  std::vector<RiskSetRow> rows;
  rows.reserve(by_age.size());
  for (const auto& [age, cnt] : by_age)
    rows.push_back({age, probe.at_risk(age), cnt.events, cnt.disease});
  return RiskSetTable(kind, c.size(), std::move(entries), std::move(exits), std::move(rows));
}

RiskSetTable risk_process(const Cohort& c, RiskKind kind) {
  auto table = build_risk_table(c, kind);
  if (table.empty())
    throw NumericError(kind == RiskKind::death ? "risk_process: no observed deaths"
                                               : "risk_process: no observed first events");
  return table;
}

StepCurve km_left_truncated(const RiskSetTable& table) {
  std::vector<double> knots, values;
  knots.reserve(table.rows().size());
  values.reserve(table.rows().size());
  double surv = 1.0;
  for (const auto& row : table.rows()) {
    assert(row.at_risk >= row.events);
    if (row.at_risk == 0) {
      std::ostringstream os;
      os << "km_left_truncated: event at age " << row.age << " with empty risk set";
      throw NumericError(os.str());
    }
    surv *= 1.0 - static_cast<double>(row.events) / static_cast<double>(row.at_risk);
    knots.push_back(row.age);
    values.push_back(surv);
  }
  return StepCurve(std::move(knots), std::move(values), 1.0);
}

DeathWeight::DeathWeight(const Cohort& c)
    : table_(build_risk_table(c, RiskKind::death)), survival_(km_left_truncated(table_)) {}

double DeathWeight::risk_proportion(double v) const {
  return static_cast<double>(table_.at_risk(v)) / static_cast<double>(table_.n_cohort());
}

double DeathWeight::operator()(double v) const {
  const std::size_t y = table_.at_risk(v);
  if (y == 0) {
    std::ostringstream os;
    os << "death weight undefined at age " << v << ": nobody at risk";
    throw NumericError(os.str());
  }
  return survival_.at_minus(v) * static_cast<double>(table_.n_cohort()) / static_cast<double>(y);
}

}  // namespace biocif
