#include "polyneck/geometry.hpp"

#include "polyneck/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace polyneck {

namespace {

constexpr double kPi = std::numbers::pi;
// Stencils may approach a coordinate singularity this closely.
constexpr double kSingularGuard = 1e-12;

std::vector<double> merge_sums(const std::vector<double>& a, const std::vector<double>& b,
                               double cutoff) {
  std::vector<double> out;
  for (double x : a) {
    for (double y : b) {
      if (x + y <= cutoff + 1e-12) out.push_back(x + y);
    }
  }
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double v : out) {
    if (unique.empty() || v - unique.back() > 1e-12 * std::max(1.0, v)) unique.push_back(v);
  }
  return unique;
}

std::vector<double> sphere_spectrum(int d, double radius, double cutoff) {
  std::vector<double> out;
  for (int j = 0;; ++j) {
    const double lambda = j * (j + d - 1.0) / (radius * radius);
    if (lambda > cutoff + 1e-12) break;
    out.push_back(lambda);
  }
  return out;
}

void require_positive(double v, std::string_view what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << v;
    throw Error(ErrorCode::InvalidConfig, os.str());
  }
}

// d x / d(r, theta) for hyperspherical coordinates.
MetricMatrix hyperspherical_jacobian(double r, std::span<const double> theta) {
  const int n = static_cast<int>(theta.size()) + 1;
  MetricMatrix jac = MetricMatrix::Zero(n, n);
  const Coords unit = hyperspherical_to_cartesian(1.0, theta);
  for (int j = 0; j < n; ++j) jac(j, 0) = unit[j];
  for (int l = 0; l < n - 1; ++l) {
    for (int j = 0; j < n; ++j) {
      double prod = r;
      if (j < l) continue;
      for (int i = 0; i < std::min(j, n - 1); ++i) {
        prod *= (i == l) ? std::cos(theta[i]) : std::sin(theta[i]);
      }
      if (j < n - 1) {
        prod *= (j == l) ? -std::sin(theta[j]) : std::cos(theta[j]);
      }
      jac(j, l + 1) = prod;
    }
  }
  return jac;
}

Coords cartesian_to_hyperspherical(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  Coords out(n);
  double tail_sq = 0.0;
  for (double v : x) tail_sq += v * v;
  out[0] = std::sqrt(tail_sq);
  for (int j = 0; j < n - 1; ++j) {
    tail_sq -= x[j] * x[j];
    const double tail = std::sqrt(std::max(tail_sq, 0.0));
    if (j < n - 2) {
      out[j + 1] = std::atan2(tail, x[j]);
    } else {
      out[j + 1] = std::atan2(x[n - 1], x[n - 2]);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ChartId id) {
  switch (id) {
    case ChartId::Cap1: return "cap-1";
    case ChartId::Neck: return "neck";
    case ChartId::Cap2: return "cap-2";
    case ChartId::RawFermi: return "raw-fermi";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// MetricField

MetricField::MetricField(int dim, std::vector<ChartDescriptor> atlas, Components components,
                         std::vector<ChartTransition> transitions)
    : dim_(dim),
      atlas_(std::move(atlas)),
      components_(std::move(components)),
      transitions_(std::move(transitions)) {
  if (dim_ < 1 || dim_ > kMaxDim) {
    throw Error(ErrorCode::InvalidConfig, "metric dimension out of range");
  }
  for (auto& chart : atlas_) {
    if (static_cast<int>(chart.domain.size()) != dim_) {
      throw Error(ErrorCode::InvalidConfig, "chart domain has wrong dimension");
    }
    if (chart.stencil_domain.empty()) chart.stencil_domain = chart.domain;
  }
}

bool MetricField::has_chart(ChartId id) const {
  return std::any_of(atlas_.begin(), atlas_.end(), [id](const auto& c) { return c.id == id; });
}

const ChartDescriptor& MetricField::chart(ChartId id) const {
  for (const auto& c : atlas_) {
    if (c.id == id) return c;
  }
  throw Error(ErrorCode::OutOfChart, std::string("chart not in atlas: ") + std::string(to_string(id)));
}

bool MetricField::contains(const ChartPoint& p) const {
  if (!has_chart(p.chart) || static_cast<int>(p.x.size()) != dim_) return false;
  const auto& dom = chart(p.chart).domain;
  for (int a = 0; a < dim_; ++a) {
    if (!dom[a].contains(p.x[a])) return false;
  }
  return true;
}

MetricMatrix MetricField::at(const ChartPoint& p) const {
  if (!contains(p)) {
    std::ostringstream os;
    os << "point outside chart " << to_string(p.chart) << " (";
    for (std::size_t i = 0; i < p.x.size(); ++i) os << (i ? ", " : "") << p.x[i];
    os << ")";
    throw Error(ErrorCode::OutOfChart, os.str());
  }
  return components_(p.chart, p.x);
}

MetricMatrix MetricField::evaluate(ChartId chart, std::span<const double> x) const {
  return components_(chart, x);
}

const ChartTransition& MetricField::transition(ChartId from, ChartId to) const {
  for (const auto& t : transitions_) {
    if (t.from == from && t.to == to) return t;
  }
  throw Error(ErrorCode::OutOfChart, "no transition map between charts");
}

ChartPoint MetricField::transform(const ChartPoint& p, ChartId to) const {
  if (p.chart == to) return p;
  return ChartPoint{to, transition(p.chart, to).map(p.x)};
}

MetricMatrix MetricField::pullback(const ChartPoint& p, ChartId via) const {
  const auto& tr = transition(p.chart, via);
  const Coords q = tr.map(p.x);
  const MetricMatrix g = components_(via, q);
  const MetricMatrix jac = tr.jacobian(p.x);
  return jac.transpose() * g * jac;
}

MetricField MetricField::scaled(ScalarFn factor) const {
  auto base = components_;
  return MetricField(
      dim_, atlas_,
      [base, factor](ChartId c, std::span<const double> x) -> MetricMatrix {
        return factor(c, x) * base(c, x);
      },
      transitions_);
}

// ---------------------------------------------------------------------------
// Spheres

void write_sphere_metric(std::span<const double> theta, double radius_sq, MetricMatrix& g,
                         int offset) {
  double w = radius_sq;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    g(offset + i, offset + i) = w;
    const double s = std::sin(theta[i]);
    w *= s * s;
  }
}

double sphere_density(std::span<const double> theta) {
  const int d = static_cast<int>(theta.size());
  double out = 1.0;
  for (int i = 0; i + 1 < d; ++i) out *= std::pow(std::abs(std::sin(theta[i])), d - 1 - i);
  return out;
}

Coords hyperspherical_to_cartesian(double r, std::span<const double> theta) {
  const int n = static_cast<int>(theta.size()) + 1;
  Coords x(n);
  double prod = r;
  for (int j = 0; j < n - 1; ++j) {
    x[j] = prod * std::cos(theta[j]);
    prod *= std::sin(theta[j]);
  }
  x[n - 1] = prod;
  return x;
}

std::vector<Interval> sphere_angle_domain(int d) {
  std::vector<Interval> out;
  for (int i = 0; i < d; ++i) {
    if (i + 1 < d) {
      out.push_back({kAxisMargin, kPi - kAxisMargin});
    } else {
      out.push_back({-kInf, kInf});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Factor

double Factor::scalar_curvature() const {
  if (kind == FactorKind::Sphere) return dim * (dim - 1.0) / (size * size);
  return 0.0;
}

void Factor::write_metric(std::span<const double> coords, MetricMatrix& g, int offset) const {
  switch (kind) {
    case FactorKind::Torus:
    case FactorKind::Euclidean:
      for (int i = 0; i < dim; ++i) g(offset + i, offset + i) = 1.0;
      break;
    case FactorKind::Sphere:
      write_sphere_metric(coords.subspan(0, dim), size * size, g, offset);
      break;
  }
}

double Factor::reference_density(std::span<const double> coords) const {
  if (kind == FactorKind::Sphere) return sphere_density(coords.subspan(0, dim));
  return 1.0;
}

std::vector<Interval> Factor::coordinate_domain() const {
  if (kind == FactorKind::Sphere) return sphere_angle_domain(dim);
  return std::vector<Interval>(dim, Interval{});
}

std::vector<double> Factor::spectrum(double cutoff) const {
  switch (kind) {
    case FactorKind::Sphere:
      return sphere_spectrum(dim, size, cutoff);
    case FactorKind::Torus: {
      const double unit = std::pow(2.0 * kPi / size, 2);
      const int reach = static_cast<int>(std::floor(std::sqrt(cutoff / unit))) + 1;
      std::vector<double> sums{0.0};
      std::vector<double> line;
      for (int v = -reach; v <= reach; ++v) line.push_back(unit * v * v);
      for (int i = 0; i < dim; ++i) sums = merge_sums(sums, line, cutoff);
      return sums;
    }
    case FactorKind::Euclidean:
      throw Error(ErrorCode::InvalidConfig, "Euclidean factor has continuous spectrum");
  }
  return {};
}

// ---------------------------------------------------------------------------
// ModelGeometry

double ModelGeometry::r_max() const {
  return normal.kind == FactorKind::Sphere ? kPi * normal.size : kInf;
}

double ModelGeometry::normal_profile(double r) const {
  if (normal.kind == FactorKind::Sphere) return normal.size * std::sin(r / normal.size);
  return r;
}

MetricMatrix ModelGeometry::tangential_metric(std::span<const double> z) const {
  MetricMatrix g = MetricMatrix::Zero(k, k);
  int offset = 0;
  for (const auto& f : tangential) {
    f.write_metric(z.subspan(offset), g, offset);
    offset += f.dim;
  }
  return g;
}

double ModelGeometry::tangential_density(std::span<const double> z) const {
  double out = 1.0;
  int offset = 0;
  for (const auto& f : tangential) {
    out *= f.reference_density(z.subspan(offset));
    offset += f.dim;
  }
  return out;
}

std::vector<Interval> ModelGeometry::tangential_domain() const {
  std::vector<Interval> out;
  for (const auto& f : tangential) {
    auto d = f.coordinate_domain();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

MetricMatrix ModelGeometry::polar_metric(std::span<const double> x) const {
  MetricMatrix g = MetricMatrix::Zero(m, m);
  if (k > 0) g.topLeftCorner(k, k) = tangential_metric(x.subspan(0, k));
  const double f = normal_profile(x[k]);
  g(k, k) = 1.0;
  write_sphere_metric(x.subspan(k + 1, n - 1), f * f, g, k + 1);
  return g;
}

MetricMatrix ModelGeometry::cartesian_metric(std::span<const double> x) const {
  MetricMatrix g = MetricMatrix::Zero(m, m);
  if (k > 0) g.topLeftCorner(k, k) = tangential_metric(x.subspan(0, k));
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = x[k + i];
  const double r = v.norm();
  if (r >= r_max()) throw Error(ErrorCode::OutOfChart, "raw Fermi point beyond the normal diameter");
  double ratio_sq = 1.0;
  if (r > 1e-8) {
    const double q = normal_profile(r) / r;
    ratio_sq = q * q;
    v /= r;
  } else {
    v.setZero();
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double proj = v(a) * v(b);
      g(k + a, k + b) = proj + ratio_sq * ((a == b ? 1.0 : 0.0) - proj);
    }
  }
  return g;
}

ModelGeometry make_product_model(std::string name, std::vector<Factor> tangential,
                                 Factor normal) {
  ModelGeometry model;
  model.name = std::move(name);
  model.tangential = std::move(tangential);
  model.normal = normal;
  for (const auto& f : model.tangential) {
    if (f.kind == FactorKind::Euclidean) {
      throw Error(ErrorCode::InvalidConfig, "submanifold factors must be compact");
    }
    require_positive(f.size, "factor size");
    model.k += f.dim;
  }
  if (normal.kind == FactorKind::Torus) {
    throw Error(ErrorCode::InvalidConfig, "normal factor must be a sphere or Euclidean space");
  }
  if (normal.kind == FactorKind::Sphere) require_positive(normal.size, "normal sphere radius");
  model.n = normal.dim;
  model.m = model.k + model.n;
  if (model.n < 3) {
    throw Error(ErrorCode::CodimensionTooSmall,
                "codimension " + std::to_string(model.n) + " of K is below 3");
  }
  if (model.m > kMaxDim) throw Error(ErrorCode::InvalidConfig, "total dimension too large");
  model.S = normal.scalar_curvature();
  for (const auto& f : model.tangential) model.S += f.scalar_curvature();
  if (std::abs(model.S) < 1e-14) {
    throw Error(ErrorCode::ZeroScalarCurvature, "summand scalar curvature vanishes");
  }
  if (normal.kind == FactorKind::Sphere && model.r_max() <= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "normal sphere must have diameter above 1");
  }
  return model;
}

ModelGeometry make_model(const ModelSpec& spec) {
  const double rho = spec.sphere3_radius;
  if (spec.name == "torus2_x_sphere3") {
    return make_product_model(spec.name, {{FactorKind::Torus, 2, spec.torus_side}},
                              {FactorKind::Sphere, 3, rho});
  }
  if (spec.name == "sphere2_x_sphere3") {
    require_positive(spec.sphere2_radius_sq, "sphere2 radius squared");
    return make_product_model(spec.name,
                              {{FactorKind::Sphere, 2, std::sqrt(spec.sphere2_radius_sq)}},
                              {FactorKind::Sphere, 3, rho});
  }
  if (spec.name == "torus2_x_sphere2") {
    return make_product_model(spec.name, {{FactorKind::Torus, 2, spec.torus_side}},
                              {FactorKind::Sphere, 2, rho});
  }
  if (spec.name == "sphere3") return make_product_model(spec.name, {}, {FactorKind::Sphere, 3, rho});
  if (spec.name == "sphere5") return make_product_model(spec.name, {}, {FactorKind::Sphere, 5, rho});
  if (spec.name == "sphere2_x_flat3") {
    require_positive(spec.sphere2_radius_sq, "sphere2 radius squared");
    return make_product_model(spec.name,
                              {{FactorKind::Sphere, 2, std::sqrt(spec.sphere2_radius_sq)}},
                              {FactorKind::Euclidean, 3, 0.0});
  }
  throw Error(ErrorCode::UnknownModel, "unknown model '" + spec.name + "'");
}

MetricField fermi_metric(const ModelGeometry& model, int side) {
  if (side != 1 && side != 2) throw Error(ErrorCode::InvalidConfig, "side must be 1 or 2");
  const ChartId polar = side == 1 ? ChartId::Cap1 : ChartId::Cap2;
  const int k = model.k;
  const int n = model.n;
  const double rmax = model.r_max();

  ChartDescriptor polar_chart{polar, model.tangential_domain(), {}};
  polar_chart.domain.push_back({kAxisMargin, rmax - kAxisMargin});
  for (const auto& iv : sphere_angle_domain(n - 1)) polar_chart.domain.push_back(iv);
  polar_chart.stencil_domain = polar_chart.domain;
  polar_chart.stencil_domain[k] = {kSingularGuard, rmax - kSingularGuard};
  for (int i = 0; i + 2 < n; ++i) polar_chart.stencil_domain[k + 1 + i] = {kSingularGuard, kPi - kSingularGuard};

  ChartDescriptor raw_chart{ChartId::RawFermi, model.tangential_domain(), {}};
  for (int i = 0; i < n; ++i) raw_chart.domain.push_back({-rmax, rmax});
  raw_chart.stencil_domain = raw_chart.domain;

  auto components = [model, polar](ChartId c, std::span<const double> x) -> MetricMatrix {
    if (c == polar) return model.polar_metric(x);
    if (c == ChartId::RawFermi) return model.cartesian_metric(x);
    throw Error(ErrorCode::OutOfChart, "chart not in Fermi atlas");
  };

  ChartTransition to_raw{polar, ChartId::RawFermi, {}, {}};
  to_raw.map = [k](std::span<const double> x) {
    Coords out(x.begin(), x.begin() + k);
    const Coords c = hyperspherical_to_cartesian(x[k], x.subspan(k + 1));
    out.insert(out.end(), c.begin(), c.end());
    return out;
  };
  to_raw.jacobian = [k, n](std::span<const double> x) {
    MetricMatrix jac = MetricMatrix::Identity(k + n, k + n);
    jac.bottomRightCorner(n, n) = hyperspherical_jacobian(x[k], x.subspan(k + 1));
    return jac;
  };
  ChartTransition to_polar{ChartId::RawFermi, polar, {}, {}};
  to_polar.map = [k](std::span<const double> x) {
    Coords out(x.begin(), x.begin() + k);
    const Coords p = cartesian_to_hyperspherical(x.subspan(k));
    out.insert(out.end(), p.begin(), p.end());
    return out;
  };
  to_polar.jacobian = [k, n, to_polar_map = to_polar.map](std::span<const double> x) {
    const Coords p = to_polar_map(x);
    MetricMatrix jac = MetricMatrix::Identity(k + n, k + n);
    const MetricMatrix forward = hyperspherical_jacobian(p[k], std::span<const double>(p).subspan(k + 1));
    jac.bottomRightCorner(n, n) = forward.inverse();
    return jac;
  };

  return MetricField(model.m, {polar_chart, raw_chart}, components, {to_raw, to_polar});
}

// ---------------------------------------------------------------------------
// Spectra

std::vector<double> laplace_spectrum(const ModelGeometry& model, double cutoff,
                                     SpectrumClass cls) {
  if (!model.is_compact()) {
    throw Error(ErrorCode::InvalidConfig, "spectrum requires a compact normal factor");
  }
  std::vector<double> sums = model.normal.spectrum(cutoff);
  if (cls == SpectrumClass::Symmetric) return sums;
  for (const auto& f : model.tangential) sums = merge_sums(sums, f.spectrum(cutoff), cutoff);
  return sums;
}

double injectivity_gap(const ModelGeometry& model, double cutoff, SpectrumClass cls) {
  const double shift = model.S / (model.m - 1.0);
  if (!(cutoff > std::abs(shift))) {
    throw Error(ErrorCode::InvalidConfig, "cutoff must exceed |S|/(m-1)");
  }
  double gap = kInf;
  for (double lambda : laplace_spectrum(model, cutoff, cls)) {
    gap = std::min(gap, std::abs(lambda - shift));
  }
  return gap;
}

}  // namespace polyneck
