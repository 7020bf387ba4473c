#pragma once

#include "polyneck/geometry.hpp"

#include <functional>
#include <span>
#include <vector>

namespace polyneck {

// Central differences at steps h, h/2, ..., h/2^(levels-1), combined by
// Richardson extrapolation in h^2. Per-coordinate steps override `step`.
struct DerivativeScheme {
  double step = 1e-3;
  std::vector<double> steps;
  int levels = 3;

  double step_for(int coord) const;
  void validate(int dim) const;
};

inline DerivativeScheme scheme_with_step(double step, int levels = 3) {
  DerivativeScheme s;
  s.step = step;
  s.levels = levels;
  return s;
}

// A value together with the Richardson error estimate.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct ChristoffelSymbols {
  int dim = 0;
  std::vector<double> value;
  std::vector<double> error;

  double operator()(int a, int b, int c) const { return value[(a * dim + b) * dim + c]; }
  double error_at(int a, int b, int c) const { return error[(a * dim + b) * dim + c]; }
};

using ScalarField = std::function<double(ChartId, std::span<const double>)>;

inline constexpr double kMaxConditionNumber = 1e12;

// Throws OutOfChart, StencilOutOfChart or IllConditionedMetric.
ChristoffelSymbols christoffel(const MetricField& field, const ChartPoint& point,
                               const DerivativeScheme& scheme = {});
Estimate scalar_curvature(const MetricField& field, const ChartPoint& point,
                          const DerivativeScheme& scheme = {});
Estimate laplace_beltrami(const MetricField& field, const ScalarField& u, const ChartPoint& point,
                          const DerivativeScheme& scheme = {});
// Scalar curvature of u^{4/(d-2)} g.
Estimate conformal_scalar(const MetricField& field, const ScalarField& u, const ChartPoint& point,
                          const DerivativeScheme& scheme, int d);

// Copy of `scheme` with each coordinate step shrunk so that the widest
// stencil (2 steps) keeps a margin inside the stencil domain at `point`.
DerivativeScheme fit_scheme(const MetricField& field, const ChartPoint& point,
                            const DerivativeScheme& scheme);

// Copy of `scheme` with each coordinate step shrunk so that the widest
// stencil (2 steps) keeps a margin inside the stencil domain at `point`.
DerivativeScheme fit_scheme(const MetricField& field, const ChartPoint& point,
                            const DerivativeScheme& scheme);

// Richardson extrapolation of samples taken at steps h, h/2, h/4, ... with
// an error expansion in even powers of h.
Estimate richardson(std::span<const double> samples);

}  // namespace polyneck
