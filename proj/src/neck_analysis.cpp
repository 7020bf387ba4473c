#include "polyneck/neck_analysis.hpp"

#include "polyneck/error.hpp"
#include "polyneck/fit.hpp"
#include "polyneck/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace polyneck {

namespace {

ChartPoint neck_point(const GluingConfig& cfg, const Coords& base, double t) {
  Coords x = base;
  x[cfg.model_1.k] = t;
  return {ChartId::Neck, std::move(x)};
}

// A second orbit sample, away from the canonical base point.
Coords shifted_base(const ModelGeometry& model) {
  Coords x = radial_base(model);
  for (int i = 0; i < static_cast<int>(x.size()); ++i) {
    if (i != model.k) x[i] += (i % 2 == 0) ? 0.35 : -0.6;
  }
  return x;
}

struct DeviationSample {
  double dev = 0.0;
  double err = 0.0;
};

DeviationSample sample_deviation(const GluingConfig& cfg, const MetricField& field, double t,
                                 const DerivativeScheme& scheme) {
  DeviationSample out;
  for (const Coords& base : {radial_base(cfg.model_1), shifted_base(cfg.model_1)}) {
    const Estimate s = scalar_curvature(field, neck_point(cfg, base, t), scheme);
    out.dev = std::max(out.dev, std::abs(s.value - cfg.model_1.S));
    out.err = std::max(out.err, s.error);
  }
  return out;
}

// Second t-derivative by central differences and Richardson extrapolation.
double second_t_derivative(const std::function<double(double)>& w, double t,
                           const DerivativeScheme& scheme) {
  std::vector<double> samples;
  double h = scheme.step;
  const double w0 = w(t);
  for (int l = 0; l < scheme.levels; ++l, h *= 0.5) {
    samples.push_back((w(t + h) - 2.0 * w0 + w(t - h)) / (h * h));
  }
  return richardson(samples).value;
}

MetricField round_sphere_field(int d) {
  ChartDescriptor chart{ChartId::Cap1, sphere_angle_domain(d), {}};
  chart.stencil_domain = chart.domain;
  for (int i = 0; i + 1 < d; ++i) chart.stencil_domain[i] = {1e-12, std::numbers::pi - 1e-12};
  return MetricField(d, {chart}, [d](ChartId, std::span<const double> th) {
    MetricMatrix g = MetricMatrix::Zero(d, d);
    write_sphere_metric(th, 1.0, g, 0);
    return g;
  });
}

MetricField tangential_field(const ModelGeometry& model) {
  ChartDescriptor chart{ChartId::Cap1, model.tangential_domain(), {}};
  chart.stencil_domain = chart.domain;
  for (auto& iv : chart.stencil_domain) {
    if (std::isfinite(iv.lo)) iv = {1e-12, std::numbers::pi - 1e-12};
  }
  return MetricField(model.k, {chart}, [model](ChartId, std::span<const double> z) {
    return model.tangential_metric(z);
  });
}

}  // namespace

double DeviationProfile::bound(double t) const {
  return weighted_sup / epsilon * std::pow(std::cosh(t), 1.0 - n);
}

std::vector<double> default_t_grid(const GluingConfig& cfg, double step) {
  const double reach = cfg.half_length() - 1.0;
  if (!(reach > 0.0)) throw Error(ErrorCode::InvalidConfig, "neck too short for a deviation grid");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "t step must be positive");
  const int cells = std::max(2, static_cast<int>(std::ceil(2.0 * reach / step)));
  std::vector<double> out(cells + 1);
  for (int i = 0; i <= cells; ++i) out[i] = -reach + 2.0 * reach * i / cells;
  return out;
}

DeviationProfile deviation_profile(const GluingConfig& cfg, const std::vector<double>& t_grid,
                                   const DeviationOptions& opts) {
  cfg.validate();
  const double reach = cfg.half_length() - 1.0;
  for (double t : t_grid) {
    if (std::abs(t) > reach + 1e-12) {
      std::ostringstream os;
      os << "deviation sample t = " << t << " outside [" << -reach << ", " << reach << "]";
      throw Error(ErrorCode::InvalidConfig, os.str());
    }
  }
  const MetricField field = glued_metric(cfg);
  const int count = static_cast<int>(t_grid.size());
  std::vector<DeviationSample> samples(count + 1);
  parallel_for(count + 1, opts.jobs, [&](int i) {
    const double t = i < count ? t_grid[i] : cfg.log_eps() + 1.0;
    samples[i] = sample_deviation(cfg, field, t, opts.scheme);
  });

  DeviationProfile out;
  out.epsilon = cfg.epsilon;
  out.n = cfg.n();
  out.t = t_grid;
  out.resolved = false;
  const int n = cfg.n();
  for (int i = 0; i < count; ++i) {
    out.sup_dev.push_back(samples[i].dev);
    out.fd_err.push_back(samples[i].err);
    if (samples[i].dev > samples[i].err) out.resolved = true;
    out.weighted_sup = std::max(
        out.weighted_sup, cfg.epsilon * std::pow(std::cosh(t_grid[i]), n - 1) * samples[i].dev);
  }
  out.probe = samples[count].dev;
  out.probe_err = samples[count].err;
  if (opts.require_resolved && !out.resolved) {
    throw Error(ErrorCode::NotResolved, "curvature deviation below the finite-difference error everywhere");
  }
  return out;
}

DeviationProfile deviation_profile(const GluingConfig& cfg, const DeviationOptions& opts) {
  return deviation_profile(cfg, default_t_grid(cfg, opts.t_step), opts);
}

DeviationFit fit_deviation(std::vector<DeviationProfile> profiles) {
  if (profiles.empty()) throw Error(ErrorCode::InvalidConfig, "no deviation profiles");
  std::sort(profiles.begin(), profiles.end(),
            [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  DeviationFit fit;
  std::vector<double> weighted, eps, probe;
  for (const auto& p : profiles) {
    weighted.push_back(p.weighted_sup);
    fit.max_constant = std::max(fit.max_constant, p.weighted_sup);
    if (p.probe > 10.0 * p.probe_err) {
      eps.push_back(p.epsilon);
      probe.push_back(p.probe);
    }
  }
  fit.weighted_ratio = spread_ratio(weighted);
  fit.probe_points = static_cast<int>(eps.size());
  fit.probe_slope = eps.size() >= 2 ? fit_loglog(eps, probe).slope
                                    : std::numeric_limits<double>::quiet_NaN();
  fit.profiles = std::move(profiles);
  return fit;
}

// ---------------------------------------------------------------------------
// Conjugation identity

double conjugation_residual(const GluingConfig& cfg, const std::vector<ChartPoint>& samples,
                            const std::vector<NeckProbe>& probes, const DerivativeScheme& scheme) {
  cfg.validate();
  const MetricField field = glued_metric(cfg);
  const ModelGeometry& model = cfg.model_1;
  const int k = model.k;
  const int n = cfg.n();
  const double c = cfg.neck_exponent();
  const double reach = cfg.half_length() - 1.0;
  const MetricField sphere = round_sphere_field(n - 1);
  const std::optional<MetricField> tangential =
      k > 0 ? std::optional<MetricField>(tangential_field(model)) : std::nullopt;
  auto u = [&](double t) { return u_eps(t, cfg.epsilon, n, cfg.cutoff_width); };

  double worst = 0.0;
  for (const auto& p : samples) {
    if (p.chart != ChartId::Neck) throw Error(ErrorCode::OutOfNeck, "sample not on the neck chart");
    const double t = p.x.at(k);
    if (std::abs(t) > reach + 1e-12) throw Error(ErrorCode::OutOfNeck, "sample outside the neck plateau");
    const double ut = u(t);
    const double conformal = std::pow(ut, 4.0 / (n - 2));
    const double radius = cfg.epsilon * std::exp(std::abs(t));
    for (const auto& v : probes) {
      const double lap = laplace_beltrami(field, v, p, scheme).value;
      auto w_of_t = [&](double s) {
        Coords x = p.x;
        x[k] = s;
        return u(s) * v(ChartId::Neck, x);
      };
      double lead = second_t_derivative(w_of_t, t, scheme) - c * c * w_of_t(t);
      const ScalarField on_sphere = [&](ChartId, std::span<const double> th) {
        Coords x = p.x;
        std::copy(th.begin(), th.end(), x.begin() + k + 1);
        return ut * v(ChartId::Neck, x);
      };
      lead += laplace_beltrami(sphere, on_sphere,
                               {ChartId::Cap1, Coords(p.x.begin() + k + 1, p.x.end())}, scheme)
                  .value;
      if (tangential) {
        const ScalarField on_k = [&](ChartId, std::span<const double> z) {
          Coords x = p.x;
          std::copy(z.begin(), z.end(), x.begin());
          return ut * v(ChartId::Neck, x);
        };
        lead += conformal * laplace_beltrami(*tangential, on_k,
                                             {ChartId::Cap1, Coords(p.x.begin(), p.x.begin() + k)},
                                             scheme)
                                .value;
      }
      const double rhs = std::pow(ut, -(n + 2.0) / (n - 2)) * lead;
      const double scale = radius * std::abs(v(ChartId::Neck, p.x)) / conformal;
      worst = std::max(worst, std::abs(lap - rhs) / scale);
    }
  }
  return worst;
}

std::vector<NeckProbe> default_conjugation_probes(const GluingConfig& cfg) {
  const int k = cfg.model_1.k;
  const double c = cfg.neck_exponent();
  std::vector<NeckProbe> out;
  out.push_back([](ChartId, std::span<const double>) { return 1.0; });
  out.push_back([k, c](ChartId, std::span<const double> x) { return std::exp(c * x[k]); });
  out.push_back([k](ChartId, std::span<const double> x) {
    return (1.5 + std::cos(x[k + 1])) * std::cosh(0.4 * x[k]);
  });
  if (k > 0) {
    out.push_back([k](ChartId, std::span<const double> x) {
      return (2.0 + std::cos(x[0])) * (2.0 + std::sin(0.5 * x[k]));
    });
  }
  return out;
}

std::vector<ChartPoint> default_conjugation_samples(const GluingConfig& cfg, int count) {
  const double reach = cfg.half_length() - 1.0;
  Coords base = shifted_base(cfg.model_1);
  std::vector<ChartPoint> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : -reach + 2.0 * reach * i / (count - 1);
    out.push_back(neck_point(cfg, base, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Barrier

double barrier_constant(int n, double delta) {
  const double c = 0.5 * (n - 2);
  return 0.5 * (c * c - delta * delta);
}

double minimal_alpha(int n, double delta) {
  const double C = barrier_constant(n, delta);
  if (!(C > 0.0)) throw Error(ErrorCode::DeltaOutOfRange, "delta outside the barrier range");
  return -std::log(C);
}

double barrier_function(const GluingConfig& cfg, double t) {
  const double u = u_eps(t, cfg.epsilon, cfg.n(), cfg.cutoff_width);
  if (cfg.delta <= 0.0) return std::pow(std::cosh(t), cfg.delta) / u;
  return std::cosh(cfg.delta * t) / u;
}

void check_barrier_preconditions(const GluingConfig& cfg) {
  cfg.validate();
  const int n = cfg.n();
  const double C = barrier_constant(n, cfg.delta);
  const double eps_alpha = std::exp(-cfg.alpha);
  if (eps_alpha > C * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "e^-alpha = " << eps_alpha << " exceeds C = " << C << "; alpha must be at least "
       << minimal_alpha(n, cfg.delta);
    throw Error(ErrorCode::AlphaTooSmall, os.str());
  }
  if (!(cfg.epsilon < eps_alpha)) {
    std::ostringstream os;
    os << "epsilon = " << cfg.epsilon << " not below e^-alpha = " << eps_alpha;
    throw Error(ErrorCode::EpsilonTooLarge, os.str());
  }
}

BarrierReport barrier_margin(const GluingConfig& cfg, const BarrierOptions& opts) {
  check_barrier_preconditions(cfg);
  const int n = cfg.n();
  const int k = cfg.model_1.k;
  BarrierReport report;
  report.delta = cfg.delta;
  report.epsilon = cfg.epsilon;
  report.alpha = cfg.alpha;
  report.C = barrier_constant(n, cfg.delta);
  report.eps_alpha = std::exp(-cfg.alpha);
  if (opts.t_samples < 1 || opts.theta_samples < 1) {
    throw Error(ErrorCode::InvalidConfig, "barrier grid needs samples");
  }
  const double reach = cfg.half_length() - cfg.alpha;
  for (int i = 0; i < opts.t_samples; ++i) {
    report.t.push_back(opts.t_samples == 1 ? 0.0 : -reach + 2.0 * reach * i / (opts.t_samples - 1));
  }
  for (int j = 0; j < opts.theta_samples; ++j) {
    const double lo = 0.3;
    const double hi = std::numbers::pi - 0.3;
    report.theta.push_back(opts.theta_samples == 1 ? 0.5 * std::numbers::pi
                                                   : lo + (hi - lo) * j / (opts.theta_samples - 1));
  }
  const MetricField field = glued_metric(cfg);
  const ScalarField phi = [&cfg, k](ChartId, std::span<const double> x) {
    return barrier_function(cfg, x[k]);
  };
  const int nt = static_cast<int>(report.t.size());
  const int nth = static_cast<int>(report.theta.size());
  report.margins.assign(nt * nth, 0.0);
  report.fd_err.assign(nt * nth, 0.0);
  const Coords base = radial_base(cfg.model_1);
  parallel_for(nt * nth, opts.jobs, [&](int idx) {
    const int i = idx / nth;
    const int j = idx % nth;
    const double t = report.t[i];
    Coords x = base;
    x[k] = t;
    if (n > 2) x[k + 1] = report.theta[j];
    const Estimate lap = laplace_beltrami(field, phi, {ChartId::Neck, x}, opts.scheme);
    const double u = u_eps(t, cfg.epsilon, n, cfg.cutoff_width);
    report.margins[idx] = -(lap.value + report.C * std::pow(u, -4.0 / (n - 2)) * barrier_function(cfg, t));
    report.fd_err[idx] = lap.error;
  });
  report.min_margin = *std::min_element(report.margins.begin(), report.margins.end());
  return report;
}

// ---------------------------------------------------------------------------
// Local estimate

std::pair<int, int> inner_neck_range(const GluingConfig& cfg, const RadialGrid& grid) {
  const double reach = cfg.half_length() - cfg.alpha;
  int lo = -1;
  int hi = -1;
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.chart[i] == ChartId::Neck && std::abs(grid.coord[i]) <= reach + 1e-12) {
      if (lo < 0) lo = i;
      hi = i;
    }
  }
  if (lo < 0 || hi - lo < 2) {
    throw Error(ErrorCode::EpsilonTooLarge, "inner neck |t| <= |log eps| - alpha holds fewer than three nodes");
  }
  return {lo, hi};
}

double local_estimate_ratio(const GluingConfig& cfg, const RadialGrid& grid,
                            const DiscreteOperator& op, const std::vector<LocalProbe>& probes) {
  if (probes.empty()) throw Error(ErrorCode::InvalidConfig, "no probes");
  const auto [lo, hi] = inner_neck_range(cfg, grid);
  const std::vector<double> psi = psi_profile(grid, cfg);
  const double c = cfg.neck_exponent();
  const double inner = c - cfg.delta;
  const double outer = c + 2.0 - cfg.delta;
  double worst = 0.0;
  for (const auto& probe : probes) {
    const std::vector<double> v = solve_dirichlet(op, lo, hi, probe.f, probe.v_lo, probe.v_hi);
    double num = 0.0;
    double data = 0.0;
    for (int i = lo; i <= hi; ++i) {
      num = std::max(num, std::pow(psi[i], inner) * std::abs(v[i - lo]));
      if (i > lo && i < hi) data = std::max(data, std::pow(psi[i], outer) * std::abs(probe.f[i]));
    }
    const double boundary = std::max(std::pow(psi[lo], inner) * std::abs(probe.v_lo),
                                     std::pow(psi[hi], inner) * std::abs(probe.v_hi));
    const double den = data + boundary;
    if (!(den > 0.0)) throw Error(ErrorCode::InvalidConfig, "probe has no data");
    worst = std::max(worst, num / den);
  }
  return worst;
}

}  // namespace polyneck
