#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "biocif/core_data.hpp"
#include "biocif/simulate.hpp"

namespace testing_support {

struct Row {
  double v1, v2;
  int d1, d2;
  double r;
};

inline biocif::Cohort make_cohort(std::initializer_list<Row> rows, biocif::StudyDesign design = {}) {
  std::vector<biocif::SubjectRecord> out;
  for (const auto& x : rows) out.push_back({x.v1, x.v2, x.d1, x.d2, x.r});
  return biocif::Cohort(std::move(out), design);
}

// Simulated cohorts over every scenario family, small enough for the
// brute-force oracles.
inline std::vector<biocif::Cohort> small_corpus(std::size_t n = 60) {
  std::vector<biocif::Cohort> out;
  const char* codes[] = {"1111", "1222", "2111", "2212", "3111", "3221"};
  std::uint64_t seed = 11;
  for (const char* code : codes)
    for (int k = 0; k < 3; ++k) out.push_back(biocif::sample_cohort(biocif::parse_scenario_code(code), n, seed++));
  return out;
}

// Ages rounded to whole years, so deaths and onsets tie often.
inline biocif::Cohort rounded(const biocif::Cohort& c) {
  std::vector<biocif::SubjectRecord> out;
  for (auto s : c.subjects()) {
    s.r = std::floor(s.r);
    s.v1 = std::ceil(s.v1);
    s.v2 = std::ceil(s.v2);
    if (s.delta1 == 0) s.v1 = s.v2;
    out.push_back(s);
  }
  return biocif::Cohort(std::move(out), c.design());
}

}  // namespace testing_support
