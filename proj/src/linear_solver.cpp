#include "polyneck/linear_solver.hpp"

#include "polyneck/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace polyneck {

namespace {

constexpr double kSymmetryTolerance = 1e-8;

// Two-point Gauss rule for the integral of W over [a, b] in `chart`.
double gauss_mass(const RadialFn& weight, ChartId chart, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double off = half / std::sqrt(3.0);
  return std::abs(half) * (weight(chart, mid - off) + weight(chart, mid + off));
}

std::vector<double> uniform(double from, double to, int cells) {
  std::vector<double> out(cells + 1);
  for (int i = 0; i <= cells; ++i) out[i] = from + (to - from) * i / cells;
  out.back() = to;
  return out;
}

double lagrange_extrapolate(std::span<const double> xs, std::span<const double> ys, double x) {
  double out = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double basis = 1.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j != i) basis *= (x - xs[j]) / (xs[i] - xs[j]);
    }
    out += basis * ys[i];
  }
  return out;
}

double max_abs(std::span<const double> v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

double m_dot(std::span<const double> mass, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += mass[i] * a[i] * b[i];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids

ChartPoint RadialGrid::point(int i) const {
  Coords x = base;
  x[radial_index] = coord.at(i);
  return {chart.at(i), std::move(x)};
}

std::vector<int> RadialGrid::nodes_in(ChartId id) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (chart[i] == id) out.push_back(i);
  }
  return out;
}

RadialGrid from_profile(std::vector<RadialSegment> segments, const RadialFn& weight,
                        const RadialFn& radial, bool pole_lo, bool pole_hi) {
  if (segments.empty()) throw Error(ErrorCode::InvalidConfig, "no radial segments");
  RadialGrid grid;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (seg.coords.size() < 2) throw Error(ErrorCode::InvalidConfig, "segment needs two nodes");
    for (std::size_t j = 0; j < seg.coords.size(); ++j) {
      if (s > 0 && j == 0) {
        // Shared seam node; it is labelled by the neck chart when one side is the neck.
        if (seg.chart == ChartId::Neck) {
          grid.chart.back() = seg.chart;
          grid.coord.back() = seg.coords[0];
        }
        continue;
      }
      grid.chart.push_back(seg.chart);
      grid.coord.push_back(seg.coords[j]);
    }
    for (std::size_t j = 0; j + 1 < seg.coords.size(); ++j) {
      const double a = seg.coords[j];
      const double b = seg.coords[j + 1];
      if (!(std::abs(b - a) > 0.0)) throw Error(ErrorCode::InvalidConfig, "repeated radial node");
      grid.cell_chart.push_back(seg.chart);
      grid.cell_lo.push_back(a);
      grid.cell_hi.push_back(b);
    }
  }
  const int n = grid.size();
  grid.pole.assign(n, false);
  if (pole_lo) grid.pole.front() = true;
  if (pole_hi) grid.pole.back() = true;
  grid.weight.resize(n);
  grid.radial.resize(n);
  for (int i = 0; i < n; ++i) {
    if (grid.pole[i]) {
      // A is smooth through the pole; sample it half a cell inside.
      const int c = i == 0 ? 0 : n - 2;
      grid.weight[i] = 0.0;
      grid.radial[i] = radial(grid.cell_chart[c], 0.5 * (grid.cell_lo[c] + grid.cell_hi[c]));
    } else {
      grid.weight[i] = weight(grid.chart[i], grid.coord[i]);
      grid.radial[i] = radial(grid.chart[i], grid.coord[i]);
    }
  }
  grid.mass.assign(n, 0.0);
  grid.flux.resize(grid.cell_chart.size());
  for (std::size_t c = 0; c < grid.cell_chart.size(); ++c) {
    const ChartId ch = grid.cell_chart[c];
    const double a = grid.cell_lo[c];
    const double b = grid.cell_hi[c];
    const double mid = 0.5 * (a + b);
    grid.flux[c] = weight(ch, mid) * radial(ch, mid) / std::abs(b - a);
    grid.mass[c] += gauss_mass(weight, ch, a, mid);
    grid.mass[c + 1] += gauss_mass(weight, ch, mid, b);
  }
  for (int i = 0; i < n; ++i) {
    if (!(grid.mass[i] > 0.0) || !std::isfinite(grid.mass[i])) {
      throw Error(ErrorCode::InvalidConfig, "nonpositive node mass");
    }
  }
  return grid;
}

RadialGrid build_radial_grid(const MetricField& field, int radial_index,
                             std::vector<RadialSegment> segments,
                             const std::function<double(std::span<const double>)>& reference_density,
                             const std::vector<Coords>& base_points, bool pole_lo, bool pole_hi) {
  if (base_points.empty()) throw Error(ErrorCode::InvalidConfig, "no base point for radial line");
  auto sample = [&](const Coords& base, ChartId chart, double s) {
    Coords x = base;
    x[radial_index] = s;
    const MetricMatrix g = field.evaluate(chart, x);
    const double det = g.determinant();
    if (!(det > 0.0)) throw Error(ErrorCode::IllConditionedMetric, "metric not positive definite");
    const double w = std::sqrt(det) / reference_density(x);
    const double a = g.inverse()(radial_index, radial_index);
    return std::pair{w, a};
  };
  const Coords& base = base_points.front();
  RadialFn weight = [&](ChartId c, double s) { return sample(base, c, s).first; };
  RadialFn radial = [&](ChartId c, double s) { return sample(base, c, s).second; };

  // W must not depend on the orbit coordinates.
  for (const auto& seg : segments) {
    const std::size_t count = seg.coords.size();
    for (std::size_t j : {std::size_t{1}, count / 2, count - 2}) {
      if (j == 0 || j + 1 >= count) continue;
      const double ref = weight(seg.chart, seg.coords[j]);
      for (std::size_t b = 1; b < base_points.size(); ++b) {
        const double other = sample(base_points[b], seg.chart, seg.coords[j]).first;
        if (std::abs(other - ref) > kSymmetryTolerance * std::max(std::abs(ref), 1e-300)) {
          std::ostringstream os;
          os << "orbit density varies along the orbit in chart " << to_string(seg.chart) << " ("
             << ref << " vs " << other << ")";
          throw Error(ErrorCode::NonSymmetricModel, os.str());
        }
      }
    }
  }
  RadialGrid grid = from_profile(std::move(segments), weight, radial, pole_lo, pole_hi);
  grid.radial_index = radial_index;
  grid.base = base;
  return grid;
}

Coords radial_base(const ModelGeometry& model) {
  Coords x;
  for (const auto& f : model.tangential) {
    for (int i = 0; i < f.dim; ++i) {
      x.push_back(f.kind == FactorKind::Sphere && i + 1 < f.dim ? 0.5 * std::numbers::pi : 0.0);
    }
  }
  x.push_back(0.0);
  for (int i = 0; i < model.n - 1; ++i) x.push_back(i + 2 < model.n ? 0.5 * std::numbers::pi : 0.0);
  return x;
}

namespace {

std::vector<Coords> symmetry_probes(const ModelGeometry& model) {
  std::vector<Coords> out{radial_base(model)};
  const double shifts[2][2] = {{0.4, 1.1}, {-0.7, 0.9}};
  for (const auto& shift : shifts) {
    Coords x = radial_base(model);
    for (int i = 0; i < static_cast<int>(x.size()); ++i) {
      if (i == model.k) continue;
      x[i] += shift[i % 2];
    }
    out.push_back(x);
  }
  return out;
}

double reference_density_of(const ModelGeometry& model, std::span<const double> x) {
  return model.tangential_density(x.subspan(0, model.k)) *
         sphere_density(x.subspan(model.k + 1, model.n - 1));
}

}  // namespace

RadialGrid build_grid(const GluingConfig& cfg, int resolution) {
  cfg.validate();
  if (resolution < 16) throw Error(ErrorCode::InvalidConfig, "resolution must be at least 16");
  if (!cfg.model_1.is_compact() || !cfg.model_2.is_compact()) {
    throw Error(ErrorCode::InvalidConfig, "glued grid requires compact summands");
  }
  const double L = cfg.half_length();
  const double r1 = cfg.model_1.r_max();
  const double r2 = cfg.model_2.r_max();
  std::vector<RadialSegment> segments{
      {ChartId::Cap1, uniform(r1, 1.0, static_cast<int>(std::ceil((r1 - 1.0) * resolution)))},
      {ChartId::Neck, uniform(-L, L, static_cast<int>(std::ceil(2.0 * L * resolution)))},
      {ChartId::Cap2, uniform(1.0, r2, static_cast<int>(std::ceil((r2 - 1.0) * resolution)))}};
  const MetricField field = glued_metric(cfg);
  const ModelGeometry& model = cfg.model_1;
  return build_radial_grid(
      field, model.k, std::move(segments),
      [&model](std::span<const double> x) { return reference_density_of(model, x); },
      symmetry_probes(model), true, true);
}

RadialGrid build_summand_grid(const ModelGeometry& model, int resolution) {
  if (resolution < 16) throw Error(ErrorCode::InvalidConfig, "resolution must be at least 16");
  if (!model.is_compact()) throw Error(ErrorCode::InvalidConfig, "summand grid requires a compact model");
  const double rmax = model.r_max();
  std::vector<RadialSegment> segments{
      {ChartId::Cap1, uniform(0.0, rmax, static_cast<int>(std::ceil(rmax * resolution)))}};
  // Unit-size polar chart without domain restrictions; W and A are sampled
  // strictly inside (0, r_max).
  const MetricField field(
      model.m,
      {ChartDescriptor{ChartId::Cap1, std::vector<Interval>(model.m), {}}},
      [model](ChartId, std::span<const double> x) { return model.polar_metric(x); });
  return build_radial_grid(
      field, model.k, std::move(segments),
      [&model](std::span<const double> x) { return reference_density_of(model, x); },
      symmetry_probes(model), true, true);
}

std::vector<Estimate> curvature_profile(const MetricField& field, const RadialGrid& grid,
                                        const DerivativeScheme& scheme) {
  const int n = grid.size();
  std::vector<Estimate> out(n);
  for (int i = 0; i < n; ++i) {
    if (grid.pole[i]) continue;
    const ChartPoint p = grid.point(i);
    out[i] = scalar_curvature(field, p, fit_scheme(field, p, scheme));
  }
  for (int i = 0; i < n; ++i) {
    if (!grid.pole[i]) continue;
    const int dir = i == 0 ? 1 : -1;
    double xs[3], ys[3];
    double err = 0.0;
    for (int j = 0; j < 3; ++j) {
      const int idx = i + dir * (j + 1);
      xs[j] = grid.coord[idx];
      ys[j] = out[idx].value;
      err = std::max(err, out[idx].error);
    }
    out[i].value = lagrange_extrapolate(xs, ys, grid.coord[i]);
    out[i].error = err;
  }
  return out;
}

std::vector<double> values(const std::vector<Estimate>& estimates) {
  std::vector<double> out(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) out[i] = estimates[i].value;
  return out;
}

// ---------------------------------------------------------------------------
// Operator

std::vector<double> DiscreteOperator::apply(std::span<const double> v) const {
  const int n = size();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += lower[i] * v[i - 1];
    if (i + 1 < n) s += upper[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

double DiscreteOperator::asymmetry() const {
  double worst = 0.0;
  double scale = 0.0;
  for (int i = 0; i + 1 < size(); ++i) {
    const double a = mass[i] * upper[i];
    const double b = mass[i + 1] * lower[i + 1];
    worst = std::max(worst, std::abs(a - b));
    scale = std::max(scale, std::max(std::abs(a), std::abs(b)));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

double DiscreteOperator::norm_inf() const {
  double out = 0.0;
  for (int i = 0; i < size(); ++i) {
    double row = std::abs(diag[i]);
    if (i > 0) row += std::abs(lower[i]);
    if (i + 1 < size()) row += std::abs(upper[i]);
    out = std::max(out, row);
  }
  return out;
}

DiscreteOperator assemble_L(const RadialGrid& grid, std::span<const double> potential) {
  const int n = grid.size();
  if (static_cast<int>(potential.size()) != n) {
    throw Error(ErrorCode::InvalidConfig, "potential length differs from grid size");
  }
  DiscreteOperator op;
  op.lower.assign(n, 0.0);
  op.upper.assign(n, 0.0);
  op.diag.assign(n, 0.0);
  op.mass = grid.mass;
  op.potential.assign(potential.begin(), potential.end());
  for (int c = 0; c + 1 < n; ++c) {
    const double k = grid.flux[c];
    op.upper[c] += k / grid.mass[c];
    op.diag[c] -= k / grid.mass[c];
    op.lower[c + 1] += k / grid.mass[c + 1];
    op.diag[c + 1] -= k / grid.mass[c + 1];
  }
  for (int i = 0; i < n; ++i) op.diag[i] += potential[i];
  return op;
}

std::vector<double> yamabe_potential(std::span<const double> curvature, int m) {
  std::vector<double> out(curvature.size());
  for (std::size_t i = 0; i < curvature.size(); ++i) out[i] = curvature[i] / (m - 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Tridiagonal LU

TridiagonalLU::TridiagonalLU(const DiscreteOperator& op) : n_(op.size()) {
  const int n = n_;
  d_ = op.diag;
  dl_.assign(std::max(n - 1, 0), 0.0);
  du_.assign(std::max(n - 1, 0), 0.0);
  du2_.assign(std::max(n - 2, 0), 0.0);
  ipiv_.resize(n);
  for (int i = 0; i < n; ++i) ipiv_[i] = i;
  for (int i = 0; i + 1 < n; ++i) {
    dl_[i] = op.lower[i + 1];
    du_[i] = op.upper[i];
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(d_[i]) >= std::abs(dl_[i])) {
      if (d_[i] != 0.0) {
        const double fact = dl_[i] / d_[i];
        dl_[i] = fact;
        d_[i + 1] -= fact * du_[i];
      }
    } else {
      const double fact = d_[i] / dl_[i];
      d_[i] = dl_[i];
      dl_[i] = fact;
      const double temp = du_[i];
      du_[i] = d_[i + 1];
      d_[i + 1] = temp - fact * d_[i + 1];
      if (i + 2 < n) {
        du2_[i] = du_[i + 1];
        du_[i + 1] = -fact * du_[i + 1];
      }
      ipiv_[i] = i + 1;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (d_[i] == 0.0) singular_ = true;
  }
}

std::vector<double> TridiagonalLU::solve(std::span<const double> rhs) const {
  if (singular_) throw Error(ErrorCode::NearSingularOperator, "operator is exactly singular");
  const int n = n_;
  std::vector<double> b(rhs.begin(), rhs.end());
  for (int i = 0; i + 1 < n; ++i) {
    const int ip = ipiv_[i];
    const double temp = b[i + 1 - ip + i] - dl_[i] * b[ip];
    b[i] = b[ip];
    b[i + 1] = temp;
  }
  b[n - 1] /= d_[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
  for (int i = n - 3; i >= 0; --i) {
    b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
  }
  return b;
}

// ---------------------------------------------------------------------------
// Eigenvalue and solves

double smallest_eigenvalue(const DiscreteOperator& op, const SolverOptions& opts) {
  const TridiagonalLU lu(op);
  if (lu.singular()) return 0.0;
  const int n = op.size();
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::cos(0.37 * i);
  const double floor = 1e-15 * op.norm_inf();
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    std::vector<double> y = lu.solve(x);
    const double norm = std::sqrt(m_dot(op.mass, y, y));
    if (!std::isfinite(norm) || norm == 0.0) return 0.0;
    for (double& v : y) v /= norm;
    const std::vector<double> ly = op.apply(y);
    const double rayleigh = m_dot(op.mass, y, ly);
    x = std::move(y);
    if (std::abs(rayleigh - previous) <= 1e-13 * std::abs(rayleigh) + floor) return rayleigh;
    previous = rayleigh;
  }
  // Eigenvalues of equal modulus and opposite sign stall inverse iteration;
  // fall back to the mass-symmetrized tridiagonal eigenproblem.
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int i = 0; i < n; ++i) diag(i) = op.diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    const double prod = op.upper[i] * op.lower[i + 1];
    if (prod < 0.0) throw Error(ErrorCode::NoConvergence, "inverse iteration did not converge");
    sub(i) = std::copysign(std::sqrt(prod), op.upper[i]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "tridiagonal eigensolver failed");
  Eigen::Index at = 0;
  eig.eigenvalues().cwiseAbs().minCoeff(&at);
  return eig.eigenvalues()(at);
}

LinearSolver::LinearSolver(DiscreteOperator op, SolverOptions opts)
    : op_(std::move(op)), opts_(opts), lu_(op_), min_abs_eig_(std::abs(smallest_eigenvalue(op_, opts_))) {
  if (lu_.singular() || min_abs_eig_ < opts_.singular_threshold) {
    std::ostringstream os;
    os << "smallest |eigenvalue| " << min_abs_eig_ << " below " << opts_.singular_threshold;
    throw Error(ErrorCode::NearSingularOperator, os.str());
  }
}

SolveReport LinearSolver::solve(std::span<const double> f) const {
  SolveReport report;
  report.min_abs_eigenvalue = min_abs_eig_;
  std::vector<double> v = lu_.solve(f);
  const double f_norm = max_abs(f);
  const double op_norm = op_.norm_inf();
  auto residual_of = [&](const std::vector<double>& x, std::vector<double>& r) {
    const std::vector<double> lx = op_.apply(x);
    r.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = f[i] - lx[i];
    const double scale = f_norm + op_norm * max_abs(x);
    return scale > 0.0 ? max_abs(r) / scale : 0.0;
  };
  std::vector<double> r;
  report.residual = residual_of(v, r);
  while (report.residual > opts_.tol && report.refinements < opts_.max_refine) {
    const std::vector<double> dv = lu_.solve(r);
    std::vector<double> trial = v;
    for (std::size_t i = 0; i < v.size(); ++i) trial[i] += dv[i];
    std::vector<double> r_trial;
    const double res = residual_of(trial, r_trial);
    ++report.refinements;
    if (!(res < report.residual)) break;
    v = std::move(trial);
    r = std::move(r_trial);
    report.residual = res;
  }
  report.solution = std::move(v);
  return report;
}

std::vector<double> solve(const DiscreteOperator& op, std::span<const double> f,
                          const SolverOptions& opts) {
  return LinearSolver(op, opts).solve(f).solution;
}

std::vector<double> solve_dirichlet(const DiscreteOperator& op, int lo, int hi,
                                    std::span<const double> f, double v_lo, double v_hi) {
  if (lo < 0 || hi >= op.size() || hi - lo < 2) {
    throw Error(ErrorCode::InvalidConfig, "invalid Dirichlet range");
  }
  DiscreteOperator sub;
  const int n = hi - lo - 1;
  std::vector<double> rhs(n);
  for (int j = 0; j < n; ++j) {
    const int i = lo + 1 + j;
    sub.lower.push_back(op.lower[i]);
    sub.diag.push_back(op.diag[i]);
    sub.upper.push_back(op.upper[i]);
    sub.mass.push_back(op.mass[i]);
    sub.potential.push_back(op.potential[i]);
    rhs[j] = f[i];
  }
  rhs.front() -= op.lower[lo + 1] * v_lo;
  rhs.back() -= op.upper[hi - 1] * v_hi;
  const TridiagonalLU lu(sub);
  const std::vector<double> inner = lu.solve(rhs);
  std::vector<double> out;
  out.reserve(n + 2);
  out.push_back(v_lo);
  out.insert(out.end(), inner.begin(), inner.end());
  out.push_back(v_hi);
  return out;
}

std::vector<double> psi_profile(const RadialGrid& grid, const GluingConfig& cfg) {
  std::vector<double> out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out[i] = psi_weight(grid.point(i), cfg);
  return out;
}

double global_estimate_ratio(const GluingConfig& cfg, const RadialGrid& grid,
                             const LinearSolver& solver,
                             const std::vector<std::vector<double>>& probes) {
  if (probes.empty()) throw Error(ErrorCode::InvalidConfig, "no probes");
  const std::vector<double> psi = psi_profile(grid, cfg);
  const double c = cfg.neck_exponent();
  double worst = 0.0;
  for (const auto& f : probes) {
    const std::vector<double> v = solver.solve(f).solution;
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
      num = std::max(num, std::pow(psi[i], c - cfg.delta) * std::abs(v[i]));
      den = std::max(den, std::pow(psi[i], c + 2.0 - cfg.delta) * std::abs(f[i]));
    }
    if (!(den > 0.0)) throw Error(ErrorCode::InvalidConfig, "probe vanishes");
    worst = std::max(worst, num / den);
  }
  return worst;
}

}  // namespace polyneck
