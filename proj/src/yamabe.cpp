#include "polyneck/yamabe.hpp"

#include "polyneck/error.hpp"
#include "polyneck/fit.hpp"
#include "polyneck/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polyneck {

namespace {

double sup_abs(std::span<const double> v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

// Coordinate of grid node i expressed in `chart`.
double node_coordinate(const RadialGrid& grid, const GluingConfig& cfg, int i, ChartId chart) {
  const ChartId own = grid.chart[i];
  const double s = grid.coord[i];
  if (own == chart) return s;
  const NeckAtlas atlas{cfg.epsilon, cfg.n()};
  if (own == ChartId::Neck) {
    if (chart == ChartId::Cap1) return atlas.radius(1, s);
    if (chart == ChartId::Cap2) return atlas.radius(2, s);
  } else if (chart == ChartId::Neck) {
    return atlas.t_from_radius(own == ChartId::Cap1 ? 1 : 2, s);
  }
  throw Error(ErrorCode::OutOfChart, "no transition between cap charts");
}

}  // namespace

YamabeConstants yamabe_constants(int d) {
  if (d < 3) throw Error(ErrorCode::InvalidConfig, "conformal dimension must be at least 3");
  return {d, -(d - 2.0) / (4.0 * (d - 1.0)), (d + 2.0) / (d - 2.0)};
}

SourceVariant parse_source_variant(const std::string& name) {
  if (name == "full") return SourceVariant::Full;
  if (name == "reduced") return SourceVariant::Reduced;
  throw Error(ErrorCode::InvalidConfig, "unknown source variant '" + name + "' (full|reduced)");
}

std::string_view to_string(SourceVariant variant) {
  return variant == SourceVariant::Full ? "full" : "reduced";
}

std::vector<double> F_eps(std::span<const double> v, std::span<const double> S_dev, double S,
                          const YamabeConstants& consts, SourceVariant variant) {
  if (v.size() != S_dev.size()) throw Error(ErrorCode::InvalidConfig, "length mismatch in F");
  const double sup = sup_abs(v);
  if (!(sup <= 0.5)) {
    std::ostringstream os;
    os << "sup|v| = " << sup << " exceeds 1/2";
    throw Error(ErrorCode::IterateOutOfBall, os.str());
  }
  const double c = consts.c;
  const double p = consts.p;
  const double linear = variant == SourceVariant::Full ? c * p : c;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double nonlinear = std::pow(1.0 + v[i], p) - 1.0 - p * v[i];
    out[i] = c * S_dev[i] + linear * S_dev[i] * v[i] + c * S * nonlinear;
  }
  return out;
}

FixedPointReport picard_iterate(const GluingConfig& cfg, RadialGrid grid,
                                std::vector<double> curvature, const PicardOptions& opts) {
  const int N = grid.size();
  if (static_cast<int>(curvature.size()) != N) {
    throw Error(ErrorCode::InvalidConfig, "curvature profile length differs from grid size");
  }
  const int m = cfg.m();
  const double S = cfg.model_1.S;
  const YamabeConstants consts = yamabe_constants(m);
  const LinearSolver solver(assemble_L(grid, yamabe_potential(curvature, m)), opts.solver);

  FixedPointReport report;
  report.epsilon = cfg.epsilon;
  report.delta = cfg.delta;
  report.min_abs_eigenvalue = solver.min_abs_eigenvalue();
  std::vector<double> S_dev(N);
  for (int i = 0; i < N; ++i) S_dev[i] = S - curvature[i];
  report.pre_dev = sup_abs(S_dev);

  const double eps = cfg.epsilon;
  const double c = cfg.neck_exponent();
  const double delta = cfg.delta;
  const int n = cfg.n();
  const std::vector<double> psi = psi_profile(grid, cfg);

  std::vector<double> v(N, 0.0);
  std::vector<std::vector<double>> sources;
  bool converged = false;
  for (int j = 0; j < opts.max_iter; ++j) {
    std::vector<double> f = F_eps(v, S_dev, S, consts, opts.variant);
    std::vector<double> next = solver.solve(f).solution;
    sources.push_back(std::move(f));
    double inc = 0.0;
    for (int i = 0; i < N; ++i) inc = std::max(inc, std::abs(next[i] - v[i]));
    const double sup = sup_abs(next);
    report.increments.push_back(inc);
    report.sup_history.push_back(sup);
    report.iterations = j + 1;
    if (!std::isfinite(sup) || sup > 0.5) {
      std::ostringstream os;
      os << "iterate " << j + 1 << " has sup|v| = " << sup << " > 1/2";
      throw Error(ErrorCode::IterationDiverged, os.str());
    }
    v = std::move(next);
    if (inc <= opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "no convergence within " << opts.max_iter << " iterations (last increment "
       << report.increments.back() << ")";
    throw Error(ErrorCode::IterationDiverged, os.str());
  }

  const std::vector<double> lv = solver.op().apply(v);
  const std::vector<double> fv = F_eps(v, S_dev, S, consts, opts.variant);
  for (int i = 0; i < N; ++i) report.residual = std::max(report.residual, std::abs(lv[i] - fv[i]));

  // Empirical constants of the self-map bound.
  const double lead = std::pow(eps, c + delta) + eps;
  const double quad = std::pow(eps, delta - c);
  const double data = std::pow(eps, n - 2.0) + std::pow(eps, 0.5 * n - delta);
  double previous = 0.0;
  for (std::size_t j = 0; j < report.sup_history.size(); ++j) {
    const double sup = report.sup_history[j];
    report.c_triple_prime = std::max(report.c_triple_prime, sup / (lead + quad * previous * previous));
    double weighted = 0.0;
    double psi_factor = 0.0;
    for (int i = 0; i < N; ++i) {
      weighted = std::max(weighted, std::pow(psi[i], c + 2.0 - delta) * std::abs(sources[j][i]));
      psi_factor = std::max(psi_factor, std::pow(psi[i], delta - c));
    }
    const double size = data + previous * previous;
    report.c_prime = std::max(report.c_prime, weighted / size);
    report.c_double_prime =
        std::max(report.c_double_prime, psi_factor * size / (lead + quad * previous * previous));
    previous = sup;
  }
  if (sup_abs(sources.front()) > 0.0) {
    report.estimate_constant = global_estimate_ratio(cfg, grid, solver, {sources.front()});
  }
  report.r_eps = report.c_triple_prime > 0.0
                     ? std::pow(eps, c - delta) / (2.0 * report.c_triple_prime)
                     : std::numeric_limits<double>::infinity();
  const double ball = std::min(0.5, report.r_eps);
  report.within_ball = std::all_of(report.sup_history.begin(), report.sup_history.end(),
                                   [ball](double s) { return s <= ball; });
  const auto& inc = report.increments;
  if (inc.size() >= 3 && inc[inc.size() - 3] > 0.0) {
    report.contraction = inc[inc.size() - 2] / inc[inc.size() - 3];
  }

  report.sup_v = sup_abs(v);
  for (int i = 0; i < N; ++i) {
    if (grid.chart[i] != ChartId::Neck) report.cap_sup_v = std::max(report.cap_sup_v, std::abs(v[i]));
    report.mirror_defect = std::max(report.mirror_defect, std::abs(v[i] - v[N - 1 - i]));
  }
  report.solution = std::move(v);
  report.curvature = std::move(curvature);
  report.grid = std::move(grid);
  return report;
}

FixedPointReport picard_solve(const GluingConfig& cfg, const PicardOptions& opts) {
  cfg.validate();
  RadialGrid grid = build_grid(cfg, opts.resolution);
  const MetricField field = glued_metric(cfg);
  std::vector<double> curvature = values(curvature_profile(field, grid, opts.scheme));
  return picard_iterate(cfg, std::move(grid), std::move(curvature), opts);
}

ScalarField radial_interpolant(const RadialGrid& grid, const GluingConfig& cfg,
                               std::span<const double> values, int center, int order) {
  const int N = grid.size();
  if (order < 2 || order > N) throw Error(ErrorCode::InvalidConfig, "invalid interpolation order");
  const int first = std::clamp(center - (order - 1) / 2, 0, N - order);
  std::vector<int> nodes(order);
  std::vector<double> ys(order);
  for (int j = 0; j < order; ++j) {
    nodes[j] = first + j;
    ys[j] = values[first + j];
  }
  const int k = grid.radial_index;
  return [grid_ptr = &grid, cfg, nodes, ys, k](ChartId chart, std::span<const double> x) {
    const double s = x[k];
    double out = 0.0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const double xa = node_coordinate(*grid_ptr, cfg, nodes[a], chart);
      double basis = 1.0;
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        if (b == a) continue;
        const double xb = node_coordinate(*grid_ptr, cfg, nodes[b], chart);
        basis *= (s - xb) / (xa - xb);
      }
      out += basis * ys[a];
    }
    return out;
  };
}

CurvatureCheck verify_constant_curvature(const FixedPointReport& report, const GluingConfig& cfg,
                                         const DerivativeScheme& scheme,
                                         const std::vector<int>& cells, int jobs) {
  const RadialGrid& grid = report.grid;
  const int N = grid.size();
  if (static_cast<int>(report.solution.size()) != N) {
    throw Error(ErrorCode::InvalidConfig, "report carries no solution on its grid");
  }
  std::vector<int> sample_cells = cells;
  if (sample_cells.empty()) {
    for (int c = 0; c + 1 < N; ++c) sample_cells.push_back(c);
  }
  std::vector<double> u(N);
  for (int i = 0; i < N; ++i) u[i] = 1.0 + report.solution[i];
  const MetricField field = glued_metric(cfg);
  const double S = cfg.model_1.S;
  const int count = static_cast<int>(sample_cells.size());
  CurvatureCheck out;
  out.coord.resize(count);
  out.pre.resize(count);
  out.post.resize(count);
  out.fd_err.resize(count);
  parallel_for(count, jobs, [&](int idx) {
    const int c = sample_cells[idx];
    if (c < 0 || c + 1 >= N) throw Error(ErrorCode::InvalidConfig, "sample cell out of range");
    Coords x = grid.base;
    const double mid = 0.5 * (grid.cell_lo[c] + grid.cell_hi[c]);
    x[grid.radial_index] = mid;
    const ChartPoint p{grid.cell_chart[c], x};
    const ScalarField lifted = radial_interpolant(grid, cfg, u, c);
    const DerivativeScheme fitted = fit_scheme(field, p, scheme);
    const Estimate pre = scalar_curvature(field, p, fitted);
    const Estimate post = conformal_scalar(field, lifted, p, fitted, cfg.m());
    out.coord[idx] = mid;
    out.pre[idx] = std::abs(pre.value - S);
    out.post[idx] = std::abs(post.value - S);
    out.fd_err[idx] = post.error;
  });
  out.pre_dev = sup_abs(out.pre);
  out.post_dev = sup_abs(out.post);
  out.fd_floor = sup_abs(out.fd_err);
  return out;
}

double sweep_slope(const std::vector<SweepRow>& rows) {
  std::vector<double> eps, sup;
  for (const auto& r : rows) {
    if (r.ok() && r.sup_v > 0.0) {
      eps.push_back(r.eps);
      sup.push_back(r.sup_v);
    }
  }
  if (eps.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_loglog(eps, sup).slope;
}

std::vector<SweepRow> convergence_sweep(const GluingConfig& base, const std::vector<double>& epsilons,
                                        const SweepOptions& opts) {
  const int n = base.n();
  const double lo = std::max(0.0, 0.5 * (n - 4));
  const double hi = 0.5 * (n - 2);
  if (!(base.delta > lo && base.delta < hi)) {
    std::ostringstream os;
    os << "delta = " << base.delta << " outside (" << lo << ", " << hi << ")";
    throw Error(ErrorCode::DeltaOutOfRange, os.str());
  }
  if (epsilons.empty()) throw Error(ErrorCode::InvalidConfig, "empty epsilon list");
  for (double e : epsilons) {
    GluingConfig cfg = base;
    cfg.epsilon = e;
    cfg.validate();
  }
  const int count = static_cast<int>(epsilons.size());
  std::vector<SweepRow> rows(count);
  parallel_for(count, opts.jobs, [&](int i) {
    SweepRow& row = rows[i];
    GluingConfig cfg = base;
    cfg.epsilon = epsilons[i];
    row.eps = cfg.epsilon;
    row.delta = cfg.delta;
    try {
      const FixedPointReport rep = picard_solve(cfg, opts.picard);
      row.sup_v = rep.sup_v;
      row.r_eps = rep.r_eps;
      row.cap_sup_v = rep.cap_sup_v;
      row.iters = rep.iterations;
      row.residual = rep.residual;
      row.pre_dev = rep.pre_dev;
      row.min_abs_eig = rep.min_abs_eigenvalue;
      row.c_triple_prime = rep.c_triple_prime;
      row.within_ball = rep.within_ball;
      if (opts.verify) {
        const CurvatureCheck check = verify_constant_curvature(rep, cfg, opts.picard.scheme);
        row.pre_dev = check.pre_dev;
        row.post_dev = check.post_dev;
        row.fd_floor = check.fd_floor;
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  for (int i = 0; i < count; ++i) {
    rows[i].slope_so_far = sweep_slope(std::vector<SweepRow>(rows.begin(), rows.begin() + i + 1));
  }
  return rows;
}

}  // namespace polyneck
