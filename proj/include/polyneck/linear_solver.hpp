#pragma once

#include "polyneck/curvature.hpp"
#include "polyneck/gluing.hpp"

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace polyneck {

// One chart's worth of radial nodes, ordered along the line. Consecutive
// segments share their seam node (last of one, first of the next).
struct RadialSegment {
  ChartId chart = ChartId::Cap1;
  std::vector<double> coords;
};

// Composite 1-D mesh along a radial line of a symmetric metric. Cell i joins
// nodes i and i+1 and is measured in the chart of the segment it belongs to.
struct RadialGrid {
  int radial_index = 0;
  Coords base;
  std::vector<ChartId> chart;
  std::vector<double> coord;
  std::vector<bool> pole;
  // Orbit density W and radial coefficient A = g^{ss} at nodes (W = 0 at poles).
  std::vector<double> weight;
  std::vector<double> radial;
  // Dual-cell integral of W, the discrete mass of each node.
  std::vector<double> mass;
  // Per cell: chart, endpoints, and the flux coefficient (W A)(mid)/|ds|.
  std::vector<ChartId> cell_chart;
  std::vector<double> cell_lo;
  std::vector<double> cell_hi;
  std::vector<double> flux;

  int size() const { return static_cast<int>(coord.size()); }
  ChartPoint point(int i) const;
  // Indices of nodes in the given chart.
  std::vector<int> nodes_in(ChartId id) const;
};

using RadialFn = std::function<double(ChartId, double)>;

// Assembles a grid from W and A callbacks; `pole_lo`/`pole_hi` flag the
// first/last node as an orbit-collapse point where W is not evaluated.
RadialGrid from_profile(std::vector<RadialSegment> segments, const RadialFn& weight,
                        const RadialFn& radial, bool pole_lo, bool pole_hi);

// Samples W = sqrt(det g) / reference_density and A = g^{ss} from `field`
// along the line through base_points[0]; the remaining base points are used
// to check that W does not depend on the orbit coordinates (NonSymmetricModel).
RadialGrid build_radial_grid(const MetricField& field, int radial_index,
                             std::vector<RadialSegment> segments,
                             const std::function<double(std::span<const double>)>& reference_density,
                             const std::vector<Coords>& base_points, bool pole_lo, bool pole_hi);

// Glued grid: cap-1 from its pole to r = 1, the neck in t, cap-2 back to its
// pole. `resolution` is the number of cells per unit of t (or r).
RadialGrid build_grid(const GluingConfig& cfg, int resolution);
// Single summand over r in [0, r_max] (no gluing).
RadialGrid build_summand_grid(const ModelGeometry& model, int resolution);

// Canonical base point (z, theta) for radial lines of a model.
Coords radial_base(const ModelGeometry& model);

// Scalar curvature at every node; pole values are extrapolated.
std::vector<Estimate> curvature_profile(const MetricField& field, const RadialGrid& grid,
                                        const DerivativeScheme& scheme = {});
std::vector<double> values(const std::vector<Estimate>& estimates);

// Tridiagonal operator (1/M) K + diag(potential), with K the symmetric
// stiffness matrix built from cell fluxes.
struct DiscreteOperator {
  std::vector<double> lower;  // lower[i] couples i to i-1 (lower[0] unused)
  std::vector<double> diag;
  std::vector<double> upper;  // upper[i] couples i to i+1 (upper[n-1] unused)
  std::vector<double> mass;
  std::vector<double> potential;

  int size() const { return static_cast<int>(diag.size()); }
  std::vector<double> apply(std::span<const double> v) const;
  // Max relative violation of M-weighted symmetry.
  double asymmetry() const;
  double norm_inf() const;
};

// L = Delta + potential, the potential usually S_g / (m - 1).
DiscreteOperator assemble_L(const RadialGrid& grid, std::span<const double> potential);
std::vector<double> yamabe_potential(std::span<const double> curvature, int m);

struct SolverOptions {
  double tol = 1e-12;
  int max_refine = 5;
  double singular_threshold = 1e-8;
  int max_iter = 10000;
};

// LU factorization with partial pivoting of a general tridiagonal matrix.
class TridiagonalLU {
 public:
  explicit TridiagonalLU(const DiscreteOperator& op);

  bool singular() const { return singular_; }
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  int n_;
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<int> ipiv_;
  bool singular_ = false;
};

struct SolveReport {
  std::vector<double> solution;
  double residual = 0.0;
  int refinements = 0;
  double min_abs_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  double estimate_ratio = std::numeric_limits<double>::quiet_NaN();
  double c_prime = std::numeric_limits<double>::quiet_NaN();
  double c_double_prime = std::numeric_limits<double>::quiet_NaN();
  double c_triple_prime = std::numeric_limits<double>::quiet_NaN();
};

// Signed eigenvalue of smallest magnitude, by inverse iteration.
double smallest_eigenvalue(const DiscreteOperator& op, const SolverOptions& opts = {});

// Factored operator with a cached injectivity check; throws
// NearSingularOperator when the smallest |eigenvalue| is below threshold.
class LinearSolver {
 public:
  explicit LinearSolver(DiscreteOperator op, SolverOptions opts = {});

  const DiscreteOperator& op() const { return op_; }
  double min_abs_eigenvalue() const { return min_abs_eig_; }
  SolveReport solve(std::span<const double> f) const;

 private:
  DiscreteOperator op_;
  SolverOptions opts_;
  TridiagonalLU lu_;
  double min_abs_eig_;
};

std::vector<double> solve(const DiscreteOperator& op, std::span<const double> f,
                          const SolverOptions& opts = {});

// Solves L v = f on nodes lo+1..hi-1 with v fixed at lo and hi.
std::vector<double> solve_dirichlet(const DiscreteOperator& op, int lo, int hi,
                                    std::span<const double> f, double v_lo, double v_hi);

std::vector<double> psi_profile(const RadialGrid& grid, const GluingConfig& cfg);

// max over probes of sup|psi^{c-delta} v| / sup|psi^{c+2-delta} f| with
// L v = f and c = (n-2)/2.
double global_estimate_ratio(const GluingConfig& cfg, const RadialGrid& grid,
                             const LinearSolver& solver,
                             const std::vector<std::vector<double>>& probes);

}  // namespace polyneck
