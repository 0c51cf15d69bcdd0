#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace biocif {

// Right-continuous piecewise-constant function of age. The value at knot k
// holds on [knots[k], knots[k+1]); before the first knot the curve takes
// value_before_first.
class StepCurve {
 public:
  StepCurve() = default;
  explicit StepCurve(double value_before_first) : before_(value_before_first) {}
  // Throws std::invalid_argument unless knots are strictly increasing and
  // the two vectors have equal length.
  StepCurve(std::vector<double> knots, std::vector<double> values, double value_before_first);

  // Builds a curve from (age, jump) pairs in any order; equal ages are
  // merged and zero jumps are kept as knots.
  static StepCurve from_jumps(std::vector<std::pair<double, double>> jumps, double start = 0.0);

  double at(double t) const;
  // Left limit: value just before t (strict-inequality knot search).
  double at_minus(double t) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double value_before_first() const { return before_; }
  std::size_t size() const { return knots_.size(); }
  bool empty() const { return knots_.empty(); }

  std::vector<double> evaluate(std::span<const double> ages) const;

  bool nondecreasing() const;
  bool nonincreasing() const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double before_ = 0.0;
};

// Sorted union of knots of several curves.
std::vector<double> merged_knots(std::span<const StepCurve* const> curves);

}  // namespace biocif
