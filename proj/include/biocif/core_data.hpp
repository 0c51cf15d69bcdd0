#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace biocif {

// One cohort member's observed tuple. Ages are in years.
//   v1     first-event age, min(T1, T2, C)
//   v2     exit age, min(T2, C)
//   delta1 disease observed
//   delta2 death observed
//   r      recruitment age
// Disease-free subjects carry v1 == v2 with delta1 == 0.
struct SubjectRecord {
  double v1 = 0.0;
  double v2 = 0.0;
  int delta1 = 0;
  int delta2 = 0;
  double r = 0.0;

  bool diseased() const { return delta1 == 1; }
  bool died() const { return delta2 == 1; }
  // Disease and death both observed (delta1 * delta2 == 1).
  bool case_death() const { return delta1 == 1 && delta2 == 1; }
  // Alive and disease-free at recruitment.
  bool event_free_at_entry() const { return v1 >= r; }
};

struct StudyDesign {
  double c_lower = 40.0;
  double c_upper = 69.0;
  double tau = 80.0;

  // Throws std::invalid_argument unless 0 < c_lower <= c_upper < tau.
  void check() const;
};

enum class SubjectClass { prevalent, incident, died_disease_free, alive_disease_free };

const char* to_string(SubjectClass c);

SubjectClass classify_subject(const SubjectRecord& s);

struct ClassCounts {
  std::size_t prevalent = 0;
  std::size_t incident = 0;
  std::size_t died_disease_free = 0;
  std::size_t alive_disease_free = 0;
  // Prevalent onsets strictly before c_lower.
  std::size_t prevalent_before_lower = 0;

  std::size_t total() const {
    return prevalent + incident + died_disease_free + alive_disease_free;
  }
};

class Cohort {
 public:
  // Does not re-validate; use validate_cohort for untrusted input.
  Cohort(std::vector<SubjectRecord> subjects, StudyDesign design);

  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  const StudyDesign& design() const { return design_; }
  std::size_t size() const { return subjects_.size(); }
  const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }

  ClassCounts class_counts() const;

 private:
  std::vector<SubjectRecord> subjects_;
  StudyDesign design_;
};

// A raw row before validation: the five numeric fields as text, plus the
// line number it came from (1-based, header excluded) for reporting.
struct RawRecord {
  std::size_t row = 0;
  std::array<std::string, 5> fields;  // v1, v2, delta1, delta2, r
};

struct RowRejection {
  std::size_t row = 0;
  std::string rule;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<RowRejection> rejections);
  // Error with no row context (e.g. empty input).
  explicit ValidationError(const std::string& what);

  const std::vector<RowRejection>& rejections() const { return rejections_; }

 private:
  std::vector<RowRejection> rejections_;
};

// Strict-reject validation. Either every row satisfies the record
// invariants and lies inside the design's recruitment window, or a
// ValidationError listing every rejected row is thrown.
Cohort validate_cohort(const std::vector<RawRecord>& raw, const StudyDesign& design);

// Numeric overload used by simulation and tests.
Cohort validate_cohort(const std::vector<SubjectRecord>& records, const StudyDesign& design);

// Returns the violated rule for a single record, or an empty string.
std::string check_record(const SubjectRecord& s, const StudyDesign& design);

// Drops subjects with delta1 == 1 and v1 < threshold. Throws
// std::invalid_argument on a negative threshold and ValidationError when
// nothing remains.
Cohort restrict_t1_after(const Cohort& c, double threshold);

}  // namespace biocif
