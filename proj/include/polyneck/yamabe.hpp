#pragma once

#include "polyneck/curvature.hpp"
#include "polyneck/gluing.hpp"
#include "polyneck/linear_solver.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace polyneck {

struct YamabeConstants {
  int d = 5;
  double c = 0.0;  // -(d-2) / (4(d-1))
  double p = 0.0;  // (d+2) / (d-2)
};

YamabeConstants yamabe_constants(int d);

// `Full` keeps the factor p on the (S - S_g) v term; `Reduced` drops it.
enum class SourceVariant { Full, Reduced };

SourceVariant parse_source_variant(const std::string& name);
std::string_view to_string(SourceVariant variant);

// F(v) = c dS + c p dS v + c S ((1+v)^p - 1 - p v) with dS = S - S_g.
// Throws IterateOutOfBall when sup|v| > 1/2.
std::vector<double> F_eps(std::span<const double> v, std::span<const double> S_dev, double S,
                          const YamabeConstants& consts, SourceVariant variant = SourceVariant::Full);

struct PicardOptions {
  int resolution = 64;
  double tol = 1e-12;
  int max_iter = 200;
  SourceVariant variant = SourceVariant::Full;
  SolverOptions solver;
  DerivativeScheme scheme = scheme_with_step(5e-3);
};

struct FixedPointReport {
  double epsilon = 0.0;
  double delta = 0.0;
  RadialGrid grid;
  std::vector<double> curvature;  // S_{g_eps} at nodes
  std::vector<double> solution;   // v_eps at nodes
  std::vector<double> sup_history;
  std::vector<double> increments;
  int iterations = 0;
  double residual = 0.0;
  double min_abs_eigenvalue = 0.0;
  double estimate_constant = 0.0;  // C in the global a priori estimate
  double c_prime = 0.0;
  double c_double_prime = 0.0;
  double c_triple_prime = 0.0;
  double r_eps = 0.0;
  bool within_ball = false;
  double contraction = std::numeric_limits<double>::quiet_NaN();
  double sup_v = 0.0;
  double cap_sup_v = 0.0;
  double mirror_defect = 0.0;
  double pre_dev = 0.0;  // sup over nodes of |S_{g_eps} - S|
};

// Picard iteration v <- L^{-1} F(v) from v = 0. Throws IterationDiverged
// when an iterate exceeds 1/2 or max_iter is exhausted; NearSingularOperator
// propagates from the linear solve.
FixedPointReport picard_solve(const GluingConfig& cfg, const PicardOptions& opts = {});

// Same iteration on a prepared grid and curvature profile.
FixedPointReport picard_iterate(const GluingConfig& cfg, RadialGrid grid,
                                std::vector<double> curvature, const PicardOptions& opts);

struct CurvatureCheck {
  std::vector<double> coord;
  std::vector<double> pre;   // |S_{g_eps} - S|
  std::vector<double> post;  // |S_{u^{4/(d-2)} g_eps} - S|
  std::vector<double> fd_err;
  double pre_dev = 0.0;
  double post_dev = 0.0;
  double fd_floor = 0.0;
};

// Interpolant of a nodal function along the line, in the chart and
// coordinate of the query; built from the `order` nodes nearest to `center`.
ScalarField radial_interpolant(const RadialGrid& grid, const GluingConfig& cfg,
                               std::span<const double> values, int center, int order = 6);

// Lifts u = 1 + v to the glued metric and evaluates the conformal scalar
// curvature at every cell midpoint (or at `cells` when given).
CurvatureCheck verify_constant_curvature(const FixedPointReport& report, const GluingConfig& cfg,
                                         const DerivativeScheme& scheme = scheme_with_step(5e-3),
                                         const std::vector<int>& cells = {}, int jobs = 1);

struct SweepRow {
  double eps = 0.0;
  double delta = 0.0;
  double sup_v = std::numeric_limits<double>::quiet_NaN();
  double r_eps = std::numeric_limits<double>::quiet_NaN();
  double cap_sup_v = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double pre_dev = std::numeric_limits<double>::quiet_NaN();
  double post_dev = std::numeric_limits<double>::quiet_NaN();
  double fd_floor = std::numeric_limits<double>::quiet_NaN();
  double slope_so_far = std::numeric_limits<double>::quiet_NaN();
  double min_abs_eig = std::numeric_limits<double>::quiet_NaN();
  double c_triple_prime = std::numeric_limits<double>::quiet_NaN();
  bool within_ball = false;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct SweepOptions {
  PicardOptions picard;
  bool verify = true;
  int jobs = 1;
};

// Throws DeltaOutOfRange unless max(0, (n-4)/2) < delta < (n-2)/2; per-run
// failures are recorded in the row. Rows follow the order of `epsilons`.
std::vector<SweepRow> convergence_sweep(const GluingConfig& base, const std::vector<double>& epsilons,
                                        const SweepOptions& opts = {});
double sweep_slope(const std::vector<SweepRow>& rows);

}  // namespace polyneck
