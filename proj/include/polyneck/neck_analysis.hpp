#pragma once

#include "polyneck/curvature.hpp"
#include "polyneck/gluing.hpp"
#include "polyneck/linear_solver.hpp"

#include <vector>

namespace polyneck {

struct DeviationOptions {
  DerivativeScheme scheme;
  // Spacing of the default t-grid over [log eps + 1, -log eps - 1].
  double t_step = 0.05;
  // Throw NotResolved when no sample rises above its error bar.
  bool require_resolved = true;
  int jobs = 1;
};

// sup over the sampled orbit of |S_{g_eps} - S| along t.
struct DeviationProfile {
  double epsilon = 0.0;
  int n = 3;
  std::vector<double> t;
  std::vector<double> sup_dev;
  std::vector<double> fd_err;
  // Weighted sup W = max eps (ch t)^{n-1} |S_{g_eps} - S|, which also serves
  // as the fitted constant c in |S_{g_eps} - S| <= c eps^{-1} (ch t)^{1-n}.
  double weighted_sup = 0.0;
  double probe = 0.0;
  double probe_err = 0.0;
  bool resolved = true;

  // c eps^{-1} (ch t)^{1-n} with c the weighted sup.
  double bound(double t) const;
};

std::vector<double> default_t_grid(const GluingConfig& cfg, double step);

DeviationProfile deviation_profile(const GluingConfig& cfg, const std::vector<double>& t_grid,
                                   const DeviationOptions& opts = {});
DeviationProfile deviation_profile(const GluingConfig& cfg, const DeviationOptions& opts = {});

struct DeviationFit {
  std::vector<DeviationProfile> profiles;
  double weighted_ratio = 0.0;
  double max_constant = 0.0;
  // Log-log slope of the probe value against eps; only probes exceeding ten
  // times their error bar enter the fit.
  double probe_slope = 0.0;
  int probe_points = 0;
};

DeviationFit fit_deviation(std::vector<DeviationProfile> profiles);

// A scalar probe on the neck chart.
using NeckProbe = ScalarField;

// max over samples and probes of
// |Delta v - u^{-(n+2)/(n-2)} Lead(u v)| / (|x| u^{-4/(n-2)} |v|), where
// Lead = d_t^2 - ((n-2)/2)^2 + Delta_theta + u^{4/(n-2)} Delta_z and
// |x| = eps e^{|t|}. Samples must lie in the plateau |t| <= |log eps| - 1.
double conjugation_residual(const GluingConfig& cfg, const std::vector<ChartPoint>& samples,
                            const std::vector<NeckProbe>& probes,
                            const DerivativeScheme& scheme = {});
std::vector<NeckProbe> default_conjugation_probes(const GluingConfig& cfg);
std::vector<ChartPoint> default_conjugation_samples(const GluingConfig& cfg, int count);

// C = ((n-2)^2/4 - delta^2)/2, and the smallest admissible alpha, -log C.
double barrier_constant(int n, double delta);
double minimal_alpha(int n, double delta);

struct BarrierReport {
  double delta = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double C = 0.0;
  // Largest admissible epsilon, e^{-alpha}.
  double eps_alpha = 0.0;
  std::vector<double> t;
  std::vector<double> theta;
  // margins[i * theta.size() + j] at (t[i], theta[j]).
  std::vector<double> margins;
  std::vector<double> fd_err;
  double min_margin = 0.0;
};

struct BarrierOptions {
  DerivativeScheme scheme;
  int t_samples = 41;
  int theta_samples = 5;
  int jobs = 1;
};

// Throws DeltaOutOfRange, AlphaTooSmall or EpsilonTooLarge.
void check_barrier_preconditions(const GluingConfig& cfg);
BarrierReport barrier_margin(const GluingConfig& cfg, const BarrierOptions& opts = {});
// The barrier phi_delta on the neck chart.
double barrier_function(const GluingConfig& cfg, double t);

// Node range [lo, hi] of the grid covering |t| <= |log eps| - alpha.
std::pair<int, int> inner_neck_range(const GluingConfig& cfg, const RadialGrid& grid);

struct LocalProbe {
  std::vector<double> f;
  double v_lo = 0.0;
  double v_hi = 0.0;
};

// max over probes of sup|psi^{c-delta} v| / (sup|psi^{c+2-delta} f| +
// sup_boundary|psi^{c-delta} v|), with L v = f solved on the inner neck.
double local_estimate_ratio(const GluingConfig& cfg, const RadialGrid& grid,
                            const DiscreteOperator& op, const std::vector<LocalProbe>& probes);

}  // namespace polyneck
