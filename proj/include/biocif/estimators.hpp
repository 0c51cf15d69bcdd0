#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "biocif/core_data.hpp"
#include "biocif/step_curve.hpp"

namespace biocif {

enum class EstimandTag {
  // G1(t | T1 >= c_L, T2 >= c_L)
  aj_conditional,
  // G1(t | T2 >= c_L), restricted to deaths by tau
  new_conditional,
  combined,
};

const char* to_string(EstimandTag tag);

enum class EstimatorKind { aj, new_estimator, tie_general, combination };

const char* to_string(EstimatorKind kind);

struct CifEstimate {
  EstimatorKind estimator = EstimatorKind::new_estimator;
  EstimandTag estimand = EstimandTag::new_conditional;
  StepCurve curve;
  StudyDesign design;
  std::size_t n_used = 0;
  std::size_t n_prevalent_used = 0;
  std::vector<std::string> warnings;
};

// Aalen-Johansen with delayed entry. Prevalent subjects (v1 < r) are
// dropped internally. Throws NumericError on an empty remaining cohort.
CifEstimate aalen_johansen(const Cohort& c);

struct HazardIncrement {
  double t1 = 0.0;
  std::size_t events = 0;
  std::size_t at_risk = 0;
  double increment = 0.0;
};

// Discrete conditional disease hazard given death at t2, over the disease
// ages of subjects who died at t2. Throws std::invalid_argument when t2 is
// not an observed death age.
std::vector<HazardIncrement> conditional_hazard(const Cohort& c, double t2);

// Product integral of the increments up to and including t1.
double conditional_survival(const std::vector<HazardIncrement>& increments, double t1);

// Mixture of conditional disease distributions over the distinct death
// ages up to tau, weighted by the KM death-distribution jumps.
CifEstimate tie_general_cif(const Cohort& c);

// The prevalent-inclusive estimator
//   G1(t) = n^-1 sum_i delta1 delta2 I(v1 <= t) S2(v2-) / Ybar(v2),
// summed over subjects with v2 <= tau.
CifEstimate new_cif(const Cohort& c);

// Pointwise 0.5/0.5 average. Refuses (std::invalid_argument) when the new
// estimate has mass below c_L unless allow_mixed_estimand is set.
CifEstimate combination_cif(const CifEstimate& aj, const CifEstimate& fresh,
                            bool allow_mixed_estimand = false);

// Warning text when the new estimate at tau falls below 0.8 times the
// Aalen-Johansen estimate, which signals too few post-diagnosis deaths to
// estimate the conditional onset distribution.
std::optional<std::string> insufficient_data_warning(const CifEstimate& aj, const CifEstimate& fresh);

}  // namespace biocif
