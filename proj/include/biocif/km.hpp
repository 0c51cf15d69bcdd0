#pragma once

#include <cstddef>
#include <vector>

#include "biocif/core_data.hpp"
#include "biocif/step_curve.hpp"

namespace biocif {

enum class RiskKind {
  // All subjects; at risk on [r, v2]; event is an observed death at v2.
  death,
  // Subjects event-free at recruitment only; at risk on [r, v1]; event is
  // the first transition (disease, or death without disease) at v1.
  first_event,
};

struct RiskSetRow {
  double age = 0.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
  // Disease events among `events` (first_event tables only).
  std::size_t disease_events = 0;
};

// Counting-process summary over the distinct observed event ages. Also
// answers risk counts at arbitrary ages from the sorted entry/exit ages.
class RiskSetTable {
 public:
  RiskSetTable() = default;
  RiskSetTable(RiskKind kind, std::size_t n_cohort, std::vector<double> entries,
               std::vector<double> exits, std::vector<RiskSetRow> rows);

  RiskKind kind() const { return kind_; }
  // Size of the whole cohort (the denominator of risk proportions).
  std::size_t n_cohort() const { return n_cohort_; }
  // Subjects eligible for this process (n for death, n0 for first_event).
  std::size_t n_eligible() const { return entries_.size(); }
  const std::vector<RiskSetRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  // Number of eligible subjects with entry <= t <= exit.
  std::size_t at_risk(double t) const;

 private:
  RiskKind kind_ = RiskKind::death;
  std::size_t n_cohort_ = 0;
  std::vector<double> entries_;  // sorted
  std::vector<double> exits_;    // sorted
  std::vector<RiskSetRow> rows_;
};

// Never throws on a cohort without events; returns an empty table.
RiskSetTable build_risk_table(const Cohort& c, RiskKind kind);

// As build_risk_table, but throws NumericError when the cohort has no
// events of the requested kind.
RiskSetTable risk_process(const Cohort& c, RiskKind kind);

// Product-limit estimate with delayed entry. Equal to 1 before the first
// event age and where the table is empty.
StepCurve km_left_truncated(const RiskSetTable& table);

// The weight v -> S2(v-) / Ybar(v), with S2 the left-truncated KM of death
// and Ybar the proportion of the cohort at risk at v.
class DeathWeight {
 public:
  explicit DeathWeight(const Cohort& c);

  // Throws NumericError when no subject is at risk at v.
  double operator()(double v) const;

  double survival_minus(double v) const { return survival_.at_minus(v); }
  double risk_proportion(double v) const;

  const StepCurve& survival() const { return survival_; }
  const RiskSetTable& table() const { return table_; }

 private:
  RiskSetTable table_;
  StepCurve survival_;
};

inline DeathWeight khat(const Cohort& c) { return DeathWeight(c); }

}  // namespace biocif
