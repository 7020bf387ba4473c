#pragma once

#include <span>

namespace polyneck {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

// Least-squares line through (log x, log y). Requires two or more positive pairs.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

// max / min of positive values.
double spread_ratio(std::span<const double> values);

}  // namespace polyneck
