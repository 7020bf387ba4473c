#include "polyneck/gluing.hpp"

#include "polyneck/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace polyneck {

namespace {

// How far past the neck ends (in t) and below r = 1 (on caps) the
// components are still exact; finite-difference stencils may reach there.
constexpr double kSeamReach = 0.25;

double mollifier(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

void require_in_neck(double t, double epsilon) {
  const double L = -std::log(epsilon);
  if (!(t >= -L && t <= L)) {
    std::ostringstream os;
    os << "t = " << t << " outside the neck [" << -L << ", " << L << "]";
    throw Error(ErrorCode::OutOfNeck, os.str());
  }
}

double chi_raw(double t, double width) { return smooth_step(0.5 * (1.0 - t), width); }
double eta_raw(double t, double epsilon, double width) {
  return smooth_step(-std::log(epsilon) - t, width);
}

struct NeckBlend {
  double weight_1;
  double normal_scale;  // u^{4/(n-2)}
};

NeckBlend neck_blend(const GluingConfig& cfg, double t) {
  const double L = cfg.half_length();
  const double w = cfg.cutoff_width;
  if (t < -L) return {1.0, std::pow(cfg.epsilon * std::exp(-t), 2)};
  if (t > L) return {0.0, std::pow(cfg.epsilon * std::exp(t), 2)};
  const int n = cfg.n();
  const double c = cfg.neck_exponent();
  const double u = eta_raw(t, cfg.epsilon, w) * std::pow(cfg.epsilon, c) * std::exp(-c * t) +
                   eta_raw(-t, cfg.epsilon, w) * std::pow(cfg.epsilon, c) * std::exp(c * t);
  return {chi_raw(t, w), std::pow(u, 4.0 / (n - 2))};
}

// Neck components at (z, t, theta): tangential and cross blocks are
// chi-blends of the summands' pulled-back components; the normal block is
// the blend of (pulled-back normal block)/r_i^2 scaled by u^{4/(n-2)}.
MetricMatrix neck_components(const GluingConfig& cfg, std::span<const double> x) {
  const int m = cfg.m();
  const int k = cfg.model_1.k;
  const double t = x[k];
  const NeckBlend blend = neck_blend(cfg, t);
  MetricMatrix out = MetricMatrix::Zero(m, m);
  Coords y(x.begin(), x.end());
  for (int side = 1; side <= 2; ++side) {
    const double weight = side == 1 ? blend.weight_1 : 1.0 - blend.weight_1;
    if (weight == 0.0) continue;
    const ModelGeometry& model = side == 1 ? cfg.model_1 : cfg.model_2;
    const double r = side == 1 ? cfg.epsilon * std::exp(-t) : cfg.epsilon * std::exp(t);
    y[k] = r;
    MetricMatrix g = model.polar_metric(y);
    const double drdt = side == 1 ? -r : r;
    g.row(k) *= drdt;
    g.col(k) *= drdt;
    out.topLeftCorner(k, k) += weight * g.topLeftCorner(k, k);
    out.topRightCorner(k, m - k) += weight * g.topRightCorner(k, m - k);
    out.bottomLeftCorner(m - k, k) += weight * g.bottomLeftCorner(m - k, k);
    out.bottomRightCorner(m - k, m - k) += (weight / (r * r)) * g.bottomRightCorner(m - k, m - k);
  }
  out.bottomRightCorner(m - k, m - k) *= blend.normal_scale;
  return out;
}

MetricMatrix cap_components(const GluingConfig& cfg, int side, std::span<const double> x) {
  const int k = cfg.model_1.k;
  const double r = x[k];
  const ModelGeometry& model = side == 1 ? cfg.model_1 : cfg.model_2;
  if (r >= 1.0) return model.polar_metric(x);
  // Inside the seam the metric is the neck metric seen through r.
  const NeckAtlas atlas{cfg.epsilon, cfg.n()};
  Coords y(x.begin(), x.end());
  y[k] = atlas.t_from_radius(side, r);
  MetricMatrix g = neck_components(cfg, y);
  const double dtdr = side == 1 ? -1.0 / r : 1.0 / r;
  g.row(k) *= dtdr;
  g.col(k) *= dtdr;
  return g;
}

}  // namespace

double GluingConfig::log_eps() const { return std::log(epsilon); }

double GluingConfig::max_epsilon() { return std::exp(-1.0); }

void GluingConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < max_epsilon())) {
    std::ostringstream os;
    os << "epsilon = " << epsilon << " outside (0, e^-1)";
    throw Error(ErrorCode::InvalidConfig, os.str());
  }
  if (model_1.m != model_2.m || model_1.n != model_2.n || model_1.k != model_2.k) {
    throw Error(ErrorCode::IncompatibleModels, "summands have different dimensions");
  }
  if (std::abs(model_1.S - model_2.S) > 1e-12 * std::max(1.0, std::abs(model_1.S))) {
    throw Error(ErrorCode::IncompatibleModels, "summands have different scalar curvature");
  }
  if (model_1.n < 3) throw Error(ErrorCode::CodimensionTooSmall, "codimension below 3");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be positive");
  if (!(cutoff_width > 0.0 && cutoff_width <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "cutoff width must lie in (0, 1]");
  }
  const double c = neck_exponent();
  if (!(std::abs(delta) < c)) {
    std::ostringstream os;
    os << "delta = " << delta << " outside (" << -c << ", " << c << ")";
    throw Error(ErrorCode::DeltaOutOfRange, os.str());
  }
}

GluingConfig make_config(const ModelGeometry& model, double epsilon, double delta, double alpha,
                         double cutoff_width) {
  GluingConfig cfg;
  cfg.epsilon = epsilon;
  cfg.model_1 = model;
  cfg.model_2 = model;
  cfg.delta = delta;
  cfg.alpha = alpha;
  cfg.cutoff_width = cutoff_width;
  cfg.validate();
  return cfg;
}

double smooth_step(double s, double width) {
  const double a = mollifier(s);
  const double b = mollifier(width - s);
  return a / (a + b);
}

double chi(double t, double epsilon, double width) {
  require_in_neck(t, epsilon);
  return chi_raw(t, width);
}

double eta(double t, double epsilon, double width) {
  require_in_neck(t, epsilon);
  return eta_raw(t, epsilon, width);
}

double u_profile(int side, double t, double epsilon, int n) {
  const double c = 0.5 * (n - 2);
  return std::pow(epsilon, c) * std::exp(side == 1 ? -c * t : c * t);
}

double u_eps(double t, double epsilon, int n, double width) {
  require_in_neck(t, epsilon);
  return eta_raw(t, epsilon, width) * u_profile(1, t, epsilon, n) +
         eta_raw(-t, epsilon, width) * u_profile(2, t, epsilon, n);
}

double NeckAtlas::radius(int side, double t) const {
  return side == 1 ? epsilon * std::exp(-t) : epsilon * std::exp(t);
}

double NeckAtlas::t_from_radius(int side, double r) const {
  return side == 1 ? std::log(epsilon / r) : std::log(r / epsilon);
}

Coords NeckAtlas::to_normal(int side, double t, std::span<const double> theta) const {
  return hyperspherical_to_cartesian(radius(side, t), theta);
}

double NeckAtlas::t_from_normal(int side, std::span<const double> x) const {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return t_from_radius(side, std::sqrt(r2));
}

MetricField glued_metric(const GluingConfig& cfg) {
  cfg.validate();
  const int k = cfg.model_1.k;
  const int n = cfg.n();
  const double L = cfg.half_length();

  auto cap_chart = [&](int side) {
    const ModelGeometry& model = side == 1 ? cfg.model_1 : cfg.model_2;
    ChartDescriptor chart{side == 1 ? ChartId::Cap1 : ChartId::Cap2, model.tangential_domain(), {}};
    chart.domain.push_back({1.0, model.r_max() - kAxisMargin});
    for (const auto& iv : sphere_angle_domain(n - 1)) chart.domain.push_back(iv);
    chart.stencil_domain = chart.domain;
    chart.stencil_domain[k] = {1.0 - kSeamReach, model.r_max() - 1e-12};
    return chart;
  };
  ChartDescriptor neck{ChartId::Neck, cfg.model_1.tangential_domain(), {}};
  neck.domain.push_back({-L, L});
  for (const auto& iv : sphere_angle_domain(n - 1)) neck.domain.push_back(iv);
  neck.stencil_domain = neck.domain;
  neck.stencil_domain[k] = {-L - kSeamReach, L + kSeamReach};

  auto components = [cfg](ChartId chart, std::span<const double> x) -> MetricMatrix {
    switch (chart) {
      case ChartId::Neck: return neck_components(cfg, x);
      case ChartId::Cap1: return cap_components(cfg, 1, x);
      case ChartId::Cap2: return cap_components(cfg, 2, x);
      default: throw Error(ErrorCode::OutOfChart, "chart not in glued atlas");
    }
  };

  const NeckAtlas atlas{cfg.epsilon, n};
  std::vector<ChartTransition> transitions;
  for (int side = 1; side <= 2; ++side) {
    const ChartId cap = side == 1 ? ChartId::Cap1 : ChartId::Cap2;
    const double sign = side == 1 ? -1.0 : 1.0;
    ChartTransition to_neck{cap, ChartId::Neck, {}, {}};
    to_neck.map = [atlas, side, k](std::span<const double> x) {
      Coords y(x.begin(), x.end());
      y[k] = atlas.t_from_radius(side, x[k]);
      return y;
    };
    to_neck.jacobian = [sign, k, m = cfg.m()](std::span<const double> x) {
      MetricMatrix jac = MetricMatrix::Identity(m, m);
      jac(k, k) = sign / x[k];
      return jac;
    };
    ChartTransition from_neck{ChartId::Neck, cap, {}, {}};
    from_neck.map = [atlas, side, k](std::span<const double> x) {
      Coords y(x.begin(), x.end());
      y[k] = atlas.radius(side, x[k]);
      return y;
    };
    from_neck.jacobian = [atlas, side, sign, k, m = cfg.m()](std::span<const double> x) {
      MetricMatrix jac = MetricMatrix::Identity(m, m);
      jac(k, k) = sign * atlas.radius(side, x[k]);
      return jac;
    };
    transitions.push_back(to_neck);
    transitions.push_back(from_neck);
  }

  return MetricField(cfg.m(), {cap_chart(1), neck, cap_chart(2)}, components, transitions);
}

double psi_weight(const ChartPoint& point, const GluingConfig& cfg) {
  if (point.chart != ChartId::Neck) return 1.0;
  const int k = cfg.model_1.k;
  const double L = cfg.half_length();
  const double at = std::abs(point.x.at(k));
  if (at >= L) return 1.0;
  const double band = std::min(cfg.alpha, L);
  const double log_inner = std::log(cfg.epsilon * std::cosh(at));
  const double s = at - (L - band);
  if (s <= 0.0) return std::exp(log_inner);
  const double omega = 0.5 * (1.0 - std::cos(std::numbers::pi * s / band));
  return std::exp((1.0 - omega) * log_inner);
}

}  // namespace polyneck
