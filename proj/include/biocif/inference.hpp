#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biocif/core_data.hpp"
#include "biocif/estimators.hpp"
#include "biocif/step_curve.hpp"

namespace biocif {

enum class InfluenceTerms { main_only, main_plus_auxiliary };

const char* to_string(InfluenceTerms terms);

// Estimated influence values psi_i(t_k): one row per cohort subject, one
// column per grid age. The main term is centred so that every column of
// main_term() has mean zero over all n subjects.
class InfluenceMatrix {
 public:
  InfluenceMatrix() = default;
  InfluenceMatrix(std::vector<double> grid, Eigen::MatrixXd main, Eigen::MatrixXd auxiliary,
                  InfluenceTerms terms);

  const std::vector<double>& grid() const { return grid_; }
  InfluenceTerms terms() const { return terms_; }
  std::size_t rows() const { return static_cast<std::size_t>(psi_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(psi_.cols()); }

  // Full estimate (main, plus auxiliary when included).
  const Eigen::MatrixXd& values() const { return psi_; }
  const Eigen::MatrixXd& main_term() const { return terms_ == InfluenceTerms::main_only ? psi_ : main_; }

  std::vector<std::string> warnings;

 private:
  std::vector<double> grid_;
  Eigen::MatrixXd psi_;
  Eigen::MatrixXd main_;  // empty when main_only
  InfluenceTerms terms_ = InfluenceTerms::main_only;
};

// Influence matrix of the new estimator. The auxiliary part adds the
// terms for estimating the death survival curve and subtracts the term for
// estimating the risk proportion. Grid ages must not exceed tau.
InfluenceMatrix influence_new(const Cohort& c, std::span<const double> grid,
                              InfluenceTerms terms = InfluenceTerms::main_only);

// Influence matrix of the Aalen-Johansen estimator, over all n subjects;
// rows of prevalent subjects are zero.
InfluenceMatrix influence_aj(const Cohort& c, std::span<const double> grid,
                             InfluenceTerms terms = InfluenceTerms::main_only);

// Influence of the 0.5/0.5 combination; both inputs must share a grid.
InfluenceMatrix influence_combination(const InfluenceMatrix& aj, const InfluenceMatrix& fresh);

// s^2(t) = n^-1 sum_i psi_i(t)^2 at the grid ages.
struct VarianceCurve {
  std::vector<double> grid;
  std::vector<double> s2;
  std::size_t n = 0;

  double standard_error(std::size_t k) const;
  // Knots at the grid ages, zero before the first.
  StepCurve as_step_curve() const;
};

VarianceCurve variance_curve(const InfluenceMatrix& psi);

enum class TransformKind { identity, log_complement, arcsine_root };

const char* to_string(TransformKind kind);
TransformKind parse_transform(const std::string& name);

// Monotone scale used for intervals: identity, g(u) = -log(1-u), or
// g(u) = pi/2 - asin(sqrt(1-u)).
struct Transform {
  TransformKind kind = TransformKind::identity;

  double g(double u) const;
  double derivative(double u) const;
  double inverse(double y) const;
  // Image of [0, 1] under g.
  double lower_limit() const;
  double upper_limit() const;
};

struct PointwiseCI {
  std::vector<double> ages;
  std::vector<double> estimate;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> standard_error;
  std::vector<bool> degenerate;
  double alpha = 0.05;
  Transform transform;
};

// Intervals at the variance curve's grid ages. Bounds lie in [0, 1];
// intervals at an estimate of 1 under a non-identity transform are
// degenerate and flagged.
PointwiseCI pointwise_ci(const CifEstimate& est, const VarianceCurve& var, const Transform& transform,
                         double alpha);

double normal_quantile(double p);

// Standard normal multipliers Z_bi, one row per draw b. Row b comes from
// its own substream of the seed, so the matrix does not depend on how the
// draws are scheduled.
using MultiplierDraws = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MultiplierDraws draw_multipliers(std::size_t n, std::size_t draws, std::uint64_t seed);

struct BandResult {
  std::vector<double> ages;
  std::vector<double> estimate;
  std::vector<double> lower;
  std::vector<double> upper;
  double range_lower = 0.0;
  double range_upper = 0.0;
  double critical_value = 0.0;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  Transform transform;
  // Grid ages in range excluded from the maximum because s(t) = 0.
  std::vector<double> dropped_ages;
  std::vector<double> maxima;
  std::vector<std::string> warnings;
};

// Grid for a band over [lo, hi]: lo itself plus every knot of the curves
// inside (lo, hi]. The supremum of a step process over [lo, hi] is
// attained on this set.
std::vector<double> band_grid(std::span<const StepCurve* const> curves, double lo, double hi);

// Equal-precision simultaneous band from multiplier resampling of psi.
// The critical value is the ceil((1 - alpha) B)-th order statistic of the
// B suprema.
BandResult multiplier_band(const InfluenceMatrix& psi, const CifEstimate& est, const VarianceCurve& var,
                           double range_lower, double range_upper, std::size_t draws, double alpha,
                           const Transform& transform, std::uint64_t seed);

// Same, with caller-supplied multipliers (rows = draws, cols = subjects).
BandResult multiplier_band(const InfluenceMatrix& psi, const CifEstimate& est, const VarianceCurve& var,
                           double range_lower, double range_upper, const MultiplierDraws& z,
                           double alpha, const Transform& transform, std::uint64_t seed = 0);

}  // namespace biocif
