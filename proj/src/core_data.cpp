#include "biocif/core_data.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

namespace biocif {

void StudyDesign::check() const {
  if (!(c_lower > 0.0 && c_lower <= c_upper && c_upper < tau)) {
    std::ostringstream os;
    os << "study design requires 0 < c_lower <= c_upper < tau (got c_lower=" << c_lower
       << ", c_upper=" << c_upper << ", tau=" << tau << ")";
    throw std::invalid_argument(os.str());
  }
}

const char* to_string(SubjectClass c) {
  switch (c) {
    case SubjectClass::prevalent: return "prevalent";
    case SubjectClass::incident: return "incident";
    case SubjectClass::died_disease_free: return "died_disease_free";
    case SubjectClass::alive_disease_free: return "alive_disease_free";
  }
  return "unknown";
}

SubjectClass classify_subject(const SubjectRecord& s) {
  if (s.delta1 == 1) return s.v1 < s.r ? SubjectClass::prevalent : SubjectClass::incident;
  return s.delta2 == 1 ? SubjectClass::died_disease_free : SubjectClass::alive_disease_free;
}

Cohort::Cohort(std::vector<SubjectRecord> subjects, StudyDesign design)
    : subjects_(std::move(subjects)), design_(design) {}

ClassCounts Cohort::class_counts() const {
  ClassCounts out;
  for (const auto& s : subjects_) {
    switch (classify_subject(s)) {
      case SubjectClass::prevalent:
        ++out.prevalent;
        if (s.v1 < design_.c_lower) ++out.prevalent_before_lower;
        break;
      case SubjectClass::incident: ++out.incident; break;
      case SubjectClass::died_disease_free: ++out.died_disease_free; break;
      case SubjectClass::alive_disease_free: ++out.alive_disease_free; break;
    }
  }
  return out;
}

namespace {

std::string describe(const std::vector<RowRejection>& rejections) {
  std::ostringstream os;
  os << rejections.size() << " row(s) rejected";
  for (const auto& r : rejections) os << "\n  row " << r.row << ": " << r.rule;
  return os.str();
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  if (first == last) return false;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_flag(const std::string& text, int& out) {
  double v = 0.0;
  if (!parse_double(text, v)) return false;
  if (v != 0.0 && v != 1.0) return false;
  out = static_cast<int>(v);
  return true;
}

}  // namespace

ValidationError::ValidationError(std::vector<RowRejection> rejections)
    : std::runtime_error(describe(rejections)), rejections_(std::move(rejections)) {}

ValidationError::ValidationError(const std::string& what) : std::runtime_error(what) {}

std::string check_record(const SubjectRecord& s, const StudyDesign& design) {
  if (!std::isfinite(s.v1) || !std::isfinite(s.v2) || !std::isfinite(s.r))
    return "non-finite age";
  if (s.delta1 != 0 && s.delta1 != 1) return "delta1 outside {0,1}";
  if (s.delta2 != 0 && s.delta2 != 1) return "delta2 outside {0,1}";
  if (!(s.v1 > 0.0)) return "v1 must be positive";
  if (s.v1 > s.v2) return "v1 > v2";
  if (s.delta1 == 0 && s.v1 != s.v2) return "delta1 = 0 requires v1 = v2";
  if (s.r > s.v2) return "r > v2";
  if (s.r < design.c_lower || s.r > design.c_upper) return "r outside [c_lower, c_upper]";
  return {};
}

Cohort validate_cohort(const std::vector<RawRecord>& raw, const StudyDesign& design) {
  design.check();
  if (raw.empty()) throw ValidationError("empty input: no subject records");

  static const char* names[5] = {"v1", "v2", "delta1", "delta2", "r"};
  std::vector<SubjectRecord> accepted;
  std::vector<RowRejection> rejected;
  accepted.reserve(raw.size());
  for (const auto& row : raw) {
    SubjectRecord s;
    double* ages[3] = {&s.v1, &s.v2, &s.r};
    const int age_field[3] = {0, 1, 4};
    std::string rule;
    for (int k = 0; k < 3 && rule.empty(); ++k)
      if (!parse_double(row.fields[age_field[k]], *ages[k]))
        rule = std::string("non-numeric field ") + names[age_field[k]];
    for (int k = 0; k < 2 && rule.empty(); ++k) {
      int& flag = k == 0 ? s.delta1 : s.delta2;
      double v = 0.0;
      if (!parse_double(row.fields[2 + k], v))
        rule = std::string("non-numeric field ") + names[2 + k];
      else if (!parse_flag(row.fields[2 + k], flag))
        rule = std::string(names[2 + k]) + " outside {0,1}";
    }
    if (rule.empty()) rule = check_record(s, design);
    if (rule.empty())
      accepted.push_back(s);
    else
      rejected.push_back({row.row, rule});
  }
  if (!rejected.empty()) throw ValidationError(std::move(rejected));
  return Cohort(std::move(accepted), design);
}

Cohort validate_cohort(const std::vector<SubjectRecord>& records, const StudyDesign& design) {
  design.check();
  if (records.empty()) throw ValidationError("empty input: no subject records");
  std::vector<RowRejection> rejected;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto rule = check_record(records[i], design);
    if (!rule.empty()) rejected.push_back({i + 1, rule});
  }
  if (!rejected.empty()) throw ValidationError(std::move(rejected));
  return Cohort(records, design);
}

Cohort restrict_t1_after(const Cohort& c, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("restrict_t1_after: threshold must be >= 0");
  std::vector<SubjectRecord> kept;
  kept.reserve(c.size());
  for (const auto& s : c.subjects())
    if (!(s.delta1 == 1 && s.v1 < threshold)) kept.push_back(s);
  if (kept.empty()) throw ValidationError("restrict_t1_after: resulting cohort is empty");
  return Cohort(std::move(kept), c.design());
}

}  // namespace biocif
