#pragma once

#include <span>

namespace loglap {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// ordinary least squares y ~ intercept + slope * x
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// slope of ln y against ln x; NaN if any entry is non-positive
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace loglap
