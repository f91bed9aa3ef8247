#pragma once

// Least-squares line fits for convergence-rate studies.

#include <vector>

#include "mfl/common.hpp"

namespace mfl {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;  ///< coefficient of determination of the linear model
    int n = 0;
};

/// Ordinary least squares of y against x. Throws ConfigError for n < 2.
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Fits ln|y| against ln x (log-log slope). Non-positive or non-finite samples
/// are rejected with NumericError; callers should filter floor-level values.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfl
