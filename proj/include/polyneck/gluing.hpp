#pragma once

#include "polyneck/geometry.hpp"

#include <span>

namespace polyneck {

struct GluingConfig {
  double epsilon = 0.05;
  ModelGeometry model_1;
  ModelGeometry model_2;
  double alpha = 3.0;
  double delta = 0.3;
  double cutoff_width = 1.0;

  // Throws InvalidConfig, IncompatibleModels or DeltaOutOfRange.
  void validate() const;
  double log_eps() const;
  // Half-length |log eps| of the neck.
  double half_length() const { return -log_eps(); }
  int n() const { return model_1.n; }
  int m() const { return model_1.m; }
  // (n-2)/2, the decay exponent of the neck profiles.
  double neck_exponent() const { return 0.5 * (model_1.n - 2); }
  // Largest admissible epsilon.
  static double max_epsilon();
};

// Same summand on both sides.
GluingConfig make_config(const ModelGeometry& model, double epsilon, double delta = 0.3,
                         double alpha = 3.0, double cutoff_width = 1.0);

// B(s) = E(s) / (E(s) + E(w - s)) with E(s) = exp(-1/s) for s > 0, else 0.
double smooth_step(double s, double width);

// Throw OutOfNeck outside [log eps, -log eps].
double chi(double t, double epsilon, double width = 1.0);
double eta(double t, double epsilon, double width = 1.0);
double u_eps(double t, double epsilon, int n, double width = 1.0);
// The single-sided profiles eps^c e^{-ct} and eps^c e^{ct}, c = (n-2)/2.
double u_profile(int side, double t, double epsilon, int n);

// Coordinate changes between the neck and the two Fermi charts:
// x = eps e^{-t} theta on side 1, x = eps e^{t} theta on side 2.
struct NeckAtlas {
  double epsilon = 0.05;
  int n = 3;

  double radius(int side, double t) const;
  double t_from_radius(int side, double r) const;
  // Cartesian normal vector x for neck coordinates (t, theta).
  Coords to_normal(int side, double t, std::span<const double> theta) const;
  double t_from_normal(int side, std::span<const double> x) const;
  // Excision record: the tube V_side^rho is r < rho in the side's chart.
  bool in_tube(double r, double rho) const { return r < rho; }
};

// The glued metric on the atlas {cap-1, neck, cap-2}. Neck coordinates are
// (z, t, theta); cap coordinates are the summand's polar Fermi coordinates
// with r >= 1.
MetricField glued_metric(const GluingConfig& cfg);

// Weight equal to eps ch t on the inner neck, 1 on the caps, with a cosine
// ramp in log-space over |log eps| - alpha <= |t| <= |log eps|.
double psi_weight(const ChartPoint& point, const GluingConfig& cfg);

}  // namespace polyneck
