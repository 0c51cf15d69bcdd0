#pragma once

#include <stdexcept>
#include <string>

namespace biocif {

// Numeric failure inside an estimator or inference routine (empty risk
// set, degenerate variance, non-convergent quadrature).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace biocif
