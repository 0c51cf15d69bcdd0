#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "biocif/core_data.hpp"
#include "biocif/estimators.hpp"
#include "biocif/inference.hpp"
#include "biocif/step_curve.hpp"

namespace biocif {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest text that parses back to the same double.
std::string format_number(double x);

// Cohort CSV: header `id,v1,v2,delta1,delta2,r`; the id column is optional
// and ignored. Rows are numbered from 1 after the header.
std::vector<RawRecord> read_cohort_csv(std::istream& in);
std::vector<RawRecord> read_cohort_csv(const std::filesystem::path& path);
Cohort load_cohort(const std::filesystem::path& path, const StudyDesign& design);
void write_cohort_csv(std::ostream& out, const Cohort& c);

// `age,<value_name>` with a first row at age 0 holding the value before the
// first knot, then one row per knot.
std::string step_curve_csv(const StepCurve& curve, const std::string& value_name);

std::string curve_csv(const CifEstimate& est);
nlohmann::json curve_json(const CifEstimate& est);

// `age,estimate,lower,upper`
std::string interval_csv(const std::vector<double>& ages, const std::vector<double>& estimate,
                         const std::vector<double>& lower, const std::vector<double>& upper);
std::string ci_csv(const PointwiseCI& ci);
nlohmann::json ci_json(const PointwiseCI& ci);
std::string band_csv(const BandResult& band);
nlohmann::json band_json(const BandResult& band);

// Writes or throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace biocif
