#include "biocif/step_curve.hpp"

#include <algorithm>
#include <stdexcept>

namespace biocif {

StepCurve::StepCurve(std::vector<double> knots, std::vector<double> values, double value_before_first)
    : knots_(std::move(knots)), values_(std::move(values)), before_(value_before_first) {
  if (knots_.size() != values_.size())
    throw std::invalid_argument("StepCurve: knots and values differ in length");
  for (std::size_t k = 1; k < knots_.size(); ++k)
    if (!(knots_[k - 1] < knots_[k]))
      throw std::invalid_argument("StepCurve: knots must be strictly increasing");
}

StepCurve StepCurve::from_jumps(std::vector<std::pair<double, double>> jumps, double start) {
  std::sort(jumps.begin(), jumps.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> knots, values;
  double level = start;
  for (std::size_t i = 0; i < jumps.size();) {
    const double age = jumps[i].first;
    for (; i < jumps.size() && jumps[i].first == age; ++i) level += jumps[i].second;
    knots.push_back(age);
    values.push_back(level);
  }
  return StepCurve(std::move(knots), std::move(values), start);
}

double StepCurve::at(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return before_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepCurve::at_minus(double t) const {
  auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return before_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

std::vector<double> StepCurve::evaluate(std::span<const double> ages) const {
  std::vector<double> out;
  out.reserve(ages.size());
  for (double a : ages) out.push_back(at(a));
  return out;
}

bool StepCurve::nondecreasing() const {
  double prev = before_;
  for (double v : values_) {
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

bool StepCurve::nonincreasing() const {
  double prev = before_;
  for (double v : values_) {
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

std::vector<double> merged_knots(std::span<const StepCurve* const> curves) {
  std::vector<double> all;
  for (const auto* c : curves) all.insert(all.end(), c->knots().begin(), c->knots().end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

}  // namespace biocif
