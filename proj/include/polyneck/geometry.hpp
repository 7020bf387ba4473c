#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polyneck {

inline constexpr int kMaxDim = 8;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
// Points closer than this to a polar-coordinate axis are outside every chart.
inline constexpr double kAxisMargin = 1e-3;

using MetricMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Coords = std::vector<double>;

enum class ChartId { Cap1, Neck, Cap2, RawFermi };

std::string_view to_string(ChartId id);

struct ChartPoint {
  ChartId chart = ChartId::Cap1;
  Coords x;
};

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct ChartDescriptor {
  ChartId id = ChartId::Cap1;
  // Nominal chart domain, one interval per coordinate.
  std::vector<Interval> domain;
  // Region where the component callback still returns the exact metric;
  // finite-difference stencils may reach into it. Contains `domain`.
  std::vector<Interval> stencil_domain;
};

struct ChartTransition {
  ChartId from = ChartId::Cap1;
  ChartId to = ChartId::Cap1;
  std::function<Coords(std::span<const double>)> map;
  // d(x_to)/d(x_from), rows indexed by target coordinates.
  std::function<MetricMatrix(std::span<const double>)> jacobian;
};

// A chart atlas plus a callback returning metric components at a point.
// Immutable once built; evaluation is safe from many threads as long as the
// callbacks are.
class MetricField {
 public:
  using Components = std::function<MetricMatrix(ChartId, std::span<const double>)>;
  using ScalarFn = std::function<double(ChartId, std::span<const double>)>;

  MetricField(int dim, std::vector<ChartDescriptor> atlas, Components components,
              std::vector<ChartTransition> transitions = {});

  int dim() const { return dim_; }
  const std::vector<ChartDescriptor>& atlas() const { return atlas_; }
  const std::vector<ChartTransition>& transitions() const { return transitions_; }

  bool has_chart(ChartId id) const;
  const ChartDescriptor& chart(ChartId id) const;
  bool contains(const ChartPoint& p) const;

  // Components at an in-domain point; throws OutOfChart otherwise.
  MetricMatrix at(const ChartPoint& p) const;
  // Components without the nominal-domain check (used by stencils that were
  // validated against the stencil domain).
  MetricMatrix evaluate(ChartId chart, std::span<const double> x) const;

  ChartPoint transform(const ChartPoint& p, ChartId to) const;
  // Components at `p` obtained by evaluating in chart `via` and pulling back
  // through the transition map.
  MetricMatrix pullback(const ChartPoint& p, ChartId via) const;

  // The field factor * g.
  MetricField scaled(ScalarFn factor) const;

 private:
  const ChartTransition& transition(ChartId from, ChartId to) const;

  int dim_;
  std::vector<ChartDescriptor> atlas_;
  Components components_;
  std::vector<ChartTransition> transitions_;
};

enum class FactorKind { Torus, Sphere, Euclidean };

// One Riemannian product factor in its intrinsic coordinates: flat
// coordinates on a torus of side `size`, hyperspherical angles on a round
// sphere of radius `size`.
struct Factor {
  FactorKind kind = FactorKind::Torus;
  int dim = 1;
  double size = 1.0;

  double scalar_curvature() const;
  // Writes the factor metric into the diagonal block starting at `offset`.
  void write_metric(std::span<const double> coords, MetricMatrix& g, int offset) const;
  // sqrt(det) of the unit-size metric in these coordinates (orbit density).
  double reference_density(std::span<const double> coords) const;
  std::vector<Interval> coordinate_domain() const;
  // Distinct Laplace eigenvalues (as nonnegative numbers) up to `cutoff`.
  std::vector<double> spectrum(double cutoff) const;
};

// A built-in summand (M, g) = K x N with K the product of `tangential`
// factors and N the normal factor; the submanifold is K x {p}. Coordinates
// on polar Fermi charts are (z^1..z^k, r, theta^1..theta^{n-1}).
struct ModelGeometry {
  std::string name;
  int m = 0;
  int k = 0;
  int n = 0;
  double S = 0.0;
  std::vector<Factor> tangential;
  Factor normal;

  double r_max() const;
  // Warping function f(r) of the normal block dr^2 + f(r)^2 g_{S^{n-1}}.
  double normal_profile(double r) const;
  MetricMatrix polar_metric(std::span<const double> x) const;
  MetricMatrix cartesian_metric(std::span<const double> x) const;
  MetricMatrix tangential_metric(std::span<const double> z) const;
  double tangential_density(std::span<const double> z) const;
  std::vector<Interval> tangential_domain() const;
  bool is_compact() const { return normal.kind == FactorKind::Sphere; }
};

struct ModelSpec {
  std::string name = "torus2_x_sphere3";
  double torus_side = 2.0 * std::numbers::pi;
  double sphere2_radius_sq = 2.0;
  double sphere3_radius = 1.0;
};

// Built-ins: torus2_x_sphere3, sphere2_x_sphere3, torus2_x_sphere2 (rejected,
// codimension 2), sphere3 and sphere5 (k = 0, point gluing), and the
// synthetic sphere2_x_flat3 with a flat normal factor.
ModelGeometry make_model(const ModelSpec& spec);
ModelGeometry make_product_model(std::string name, std::vector<Factor> tangential,
                                 Factor normal);

// Exact metric of `model` around its submanifold: a polar Fermi chart
// (Cap1 for side 1, Cap2 for side 2) and a Cartesian RawFermi chart.
MetricField fermi_metric(const ModelGeometry& model, int side);

enum class SpectrumClass { Full, Symmetric };

// Distinct eigenvalues of -Delta_g up to `cutoff`. The symmetric class keeps
// functions constant along K and radial in the normal factor.
std::vector<double> laplace_spectrum(const ModelGeometry& model, double cutoff,
                                     SpectrumClass cls = SpectrumClass::Full);

// min over the spectrum below `cutoff` of |lambda - S/(m-1)|; 0 means the
// linearized operator Delta + S/(m-1) has a kernel.
double injectivity_gap(const ModelGeometry& model, double cutoff,
                       SpectrumClass cls = SpectrumClass::Full);

// Hyperspherical coordinates on S^d: theta_1..theta_{d-1} in (0, pi), the
// last angle periodic.
void write_sphere_metric(std::span<const double> theta, double radius_sq, MetricMatrix& g,
                         int offset);
double sphere_density(std::span<const double> theta);
Coords hyperspherical_to_cartesian(double r, std::span<const double> theta);
std::vector<Interval> sphere_angle_domain(int d);

}  // namespace polyneck
