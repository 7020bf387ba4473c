#include "polyneck/curvature.hpp"

#include "polyneck/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polyneck {

namespace {

// Metric derivatives at one step size, flattened: dg[e][a][b], ddg[e][f][a][b].
struct Jet {
  int dim = 0;
  MetricMatrix g;
  MetricMatrix ginv;
  std::vector<double> dg;
  std::vector<double> ddg;

  double d1(int e, int a, int b) const { return dg[(e * dim + a) * dim + b]; }
  double d2(int e, int f, int a, int b) const { return ddg[((e * dim + f) * dim + a) * dim + b]; }
};

void check_point(const MetricField& field, const ChartPoint& point, const DerivativeScheme& scheme) {
  if (!field.contains(point)) {
    std::ostringstream os;
    os << "point outside chart " << to_string(point.chart);
    throw Error(ErrorCode::OutOfChart, os.str());
  }
  scheme.validate(field.dim());
  const auto& dom = field.chart(point.chart).stencil_domain;
  for (int a = 0; a < field.dim(); ++a) {
    const double reach = 2.0 * scheme.step_for(a);
    if (!dom[a].contains(point.x[a] - reach) || !dom[a].contains(point.x[a] + reach)) {
      std::ostringstream os;
      os << "stencil in coordinate " << a << " leaves chart " << to_string(point.chart);
      throw Error(ErrorCode::StencilOutOfChart, os.str());
    }
  }
}

MetricMatrix checked_inverse(const MetricMatrix& g) {
  Eigen::SelfAdjointEigenSolver<MetricMatrix> eig(g, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) {
    std::ostringstream os;
    os << "metric eigenvalues in [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::IllConditionedMetric, os.str());
  }
  return g.inverse();
}

Jet metric_jet(const MetricField& field, const ChartPoint& point, const DerivativeScheme& scheme,
               double scale) {
  const int d = field.dim();
  Jet jet;
  jet.dim = d;
  jet.g = field.evaluate(point.chart, point.x);
  jet.ginv = checked_inverse(jet.g);
  jet.dg.assign(d * d * d, 0.0);
  jet.ddg.assign(d * d * d * d, 0.0);
  Coords x = point.x;
  auto eval = [&](int e, double se, int f, double sf) {
    x = point.x;
    x[e] += se;
    if (f >= 0) x[f] += sf;
    return field.evaluate(point.chart, x);
  };
  for (int e = 0; e < d; ++e) {
    const double he = scheme.step_for(e) * scale;
    const MetricMatrix gp = eval(e, he, -1, 0.0);
    const MetricMatrix gm = eval(e, -he, -1, 0.0);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        jet.dg[(e * d + a) * d + b] = (gp(a, b) - gm(a, b)) / (2.0 * he);
        jet.ddg[((e * d + e) * d + a) * d + b] = (gp(a, b) - 2.0 * jet.g(a, b) + gm(a, b)) / (he * he);
      }
    }
    for (int f = e + 1; f < d; ++f) {
      const double hf = scheme.step_for(f) * scale;
      const MetricMatrix gpp = eval(e, he, f, hf);
      const MetricMatrix gpm = eval(e, he, f, -hf);
      const MetricMatrix gmp = eval(e, -he, f, hf);
      const MetricMatrix gmm = eval(e, -he, f, -hf);
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          const double v = (gpp(a, b) - gpm(a, b) - gmp(a, b) + gmm(a, b)) / (4.0 * he * hf);
          jet.ddg[((e * d + f) * d + a) * d + b] = v;
          jet.ddg[((f * d + e) * d + a) * d + b] = v;
        }
      }
    }
  }
  return jet;
}

// Gamma^a_{bc} from a jet.
std::vector<double> gamma_from_jet(const Jet& jet) {
  const int d = jet.dim;
  std::vector<double> lowered(d * d * d);
  for (int e = 0; e < d; ++e) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c) {
        lowered[(e * d + b) * d + c] = 0.5 * (jet.d1(b, e, c) + jet.d1(c, e, b) - jet.d1(e, b, c));
      }
    }
  }
  std::vector<double> gamma(d * d * d, 0.0);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = b; c < d; ++c) {
        double s = 0.0;
        for (int e = 0; e < d; ++e) s += jet.ginv(a, e) * lowered[(e * d + b) * d + c];
        gamma[(a * d + b) * d + c] = s;
        gamma[(a * d + c) * d + b] = s;
      }
    }
  }
  return gamma;
}

double scalar_from_jet(const Jet& jet) {
  const int d = jet.dim;
  const auto gamma = gamma_from_jet(jet);
  auto G = [&](int a, int b, int c) { return gamma[(a * d + b) * d + c]; };

  // dGamma[e][a][b][c] = d_e Gamma^a_{bc}
  std::vector<double> lowered(d * d * d);
  std::vector<double> dlowered(d * d * d * d);
  for (int q = 0; q < d; ++q) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c) {
        lowered[(q * d + b) * d + c] = 0.5 * (jet.d1(b, q, c) + jet.d1(c, q, b) - jet.d1(q, b, c));
        for (int e = 0; e < d; ++e) {
          dlowered[((e * d + q) * d + b) * d + c] =
              0.5 * (jet.d2(e, b, q, c) + jet.d2(e, c, q, b) - jet.d2(e, q, b, c));
        }
      }
    }
  }
  // d_e g^{aq} = -g^{ap} d_e g_{pr} g^{rq}
  std::vector<double> dginv(d * d * d, 0.0);
  for (int e = 0; e < d; ++e) {
    MetricMatrix dge(d, d);
    for (int p = 0; p < d; ++p) {
      for (int r = 0; r < d; ++r) dge(p, r) = jet.d1(e, p, r);
    }
    const MetricMatrix prod = -jet.ginv * dge * jet.ginv;
    for (int a = 0; a < d; ++a) {
      for (int q = 0; q < d; ++q) dginv[(e * d + a) * d + q] = prod(a, q);
    }
  }
  auto dG = [&](int e, int a, int b, int c) {
    double s = 0.0;
    for (int q = 0; q < d; ++q) {
      s += dginv[(e * d + a) * d + q] * lowered[(q * d + b) * d + c] +
           jet.ginv(a, q) * dlowered[((e * d + q) * d + b) * d + c];
    }
    return s;
  };

  double scalar = 0.0;
  for (int b = 0; b < d; ++b) {
    for (int c = 0; c < d; ++c) {
      const double gbc = jet.ginv(b, c);
      if (gbc == 0.0) continue;
      double ricci = 0.0;
      for (int a = 0; a < d; ++a) {
        ricci += dG(a, a, b, c) - dG(b, a, a, c);
        for (int e = 0; e < d; ++e) {
          ricci += G(a, a, e) * G(e, b, c) - G(a, b, e) * G(e, a, c);
        }
      }
      scalar += gbc * ricci;
    }
  }
  return scalar;
}

// Laplacian of u at one step size, reusing the metric jet of the same size.
double laplacian_at_scale(const MetricField& field, const ScalarField& u, const ChartPoint& point,
                          const DerivativeScheme& scheme, double scale) {
  const Jet jet = metric_jet(field, point, scheme, scale);
  const int d = jet.dim;
  const auto gamma = gamma_from_jet(jet);
  Coords x = point.x;
  auto eval = [&](int e, double se, int f, double sf) {
    x = point.x;
    x[e] += se;
    if (f >= 0) x[f] += sf;
    return u(point.chart, x);
  };
  const double u0 = u(point.chart, point.x);
  std::vector<double> du(d);
  MetricMatrix ddu(d, d);
  for (int e = 0; e < d; ++e) {
    const double he = scheme.step_for(e) * scale;
    const double up = eval(e, he, -1, 0.0);
    const double um = eval(e, -he, -1, 0.0);
    du[e] = (up - um) / (2.0 * he);
    ddu(e, e) = (up - 2.0 * u0 + um) / (he * he);
    for (int f = e + 1; f < d; ++f) {
      const double hf = scheme.step_for(f) * scale;
      const double v = (eval(e, he, f, hf) - eval(e, he, f, -hf) - eval(e, -he, f, hf) +
                        eval(e, -he, f, -hf)) /
                       (4.0 * he * hf);
      ddu(e, f) = v;
      ddu(f, e) = v;
    }
  }
  double lap = 0.0;
  for (int b = 0; b < d; ++b) {
    for (int c = 0; c < d; ++c) {
      double term = ddu(b, c);
      for (int a = 0; a < d; ++a) term -= gamma[(a * d + b) * d + c] * du[a];
      lap += jet.ginv(b, c) * term;
    }
  }
  return lap;
}

template <typename Fn>
Estimate extrapolate(const DerivativeScheme& scheme, Fn&& at_scale) {
  std::vector<double> samples;
  double scale = 1.0;
  for (int l = 0; l < scheme.levels; ++l, scale *= 0.5) samples.push_back(at_scale(scale));
  return richardson(samples);
}

}  // namespace

double DerivativeScheme::step_for(int coord) const {
  if (!steps.empty()) return steps.at(coord);
  return step;
}

void DerivativeScheme::validate(int dim) const {
  if (levels < 1) throw Error(ErrorCode::InvalidConfig, "Richardson levels must be at least 1");
  if (!steps.empty() && static_cast<int>(steps.size()) != dim) {
    throw Error(ErrorCode::InvalidConfig, "one step per coordinate required");
  }
  for (int a = 0; a < dim; ++a) {
    if (!(step_for(a) > 0.0)) throw Error(ErrorCode::InvalidConfig, "steps must be positive");
  }
}

DerivativeScheme fit_scheme(const MetricField& field, const ChartPoint& point,
                            const DerivativeScheme& scheme) {
  const int d = field.dim();
  scheme.validate(d);
  const auto& dom = field.chart(point.chart).stencil_domain;
  DerivativeScheme out = scheme;
  out.steps.resize(d);
  for (int a = 0; a < d; ++a) {
    const double room = std::min(point.x[a] - dom[a].lo, dom[a].hi - point.x[a]);
    out.steps[a] = std::min(scheme.step_for(a), room / 2.5);
    if (!(out.steps[a] > 0.0)) {
      throw Error(ErrorCode::StencilOutOfChart, "point on the stencil-domain boundary");
    }
  }
  return out;
}

Estimate richardson(std::span<const double> samples) {
  const int n = static_cast<int>(samples.size());
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "no samples to extrapolate");
  if (n == 1) return {samples[0], std::abs(samples[0]) * 1e-16};
  // Neville tableau; T[i][j] uses samples i-j..i, eliminating h^2..h^{2j}.
  std::vector<std::vector<double>> table(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    table[i][0] = samples[i];
    double factor = 4.0;
    for (int j = 1; j <= i; ++j, factor *= 4.0) {
      table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
    }
  }
  const double best = table[n - 1][n - 1];
  double err = std::abs(best - table[n - 1][n - 2]);
  err = std::max(err, std::abs(best - table[n - 2][n - 2]));
  return {best, err};
}

ChristoffelSymbols christoffel(const MetricField& field, const ChartPoint& point,
                               const DerivativeScheme& scheme) {
  check_point(field, point, scheme);
  const int d = field.dim();
  std::vector<std::vector<double>> levels;
  double scale = 1.0;
  for (int l = 0; l < scheme.levels; ++l, scale *= 0.5) {
    levels.push_back(gamma_from_jet(metric_jet(field, point, scheme, scale)));
  }
  ChristoffelSymbols out;
  out.dim = d;
  out.value.resize(d * d * d);
  out.error.resize(d * d * d);
  std::vector<double> samples(scheme.levels);
  for (int i = 0; i < d * d * d; ++i) {
    for (int l = 0; l < scheme.levels; ++l) samples[l] = levels[l][i];
    const Estimate e = richardson(samples);
    out.value[i] = e.value;
    out.error[i] = e.error;
  }
  return out;
}

Estimate scalar_curvature(const MetricField& field, const ChartPoint& point,
                          const DerivativeScheme& scheme) {
  check_point(field, point, scheme);
  return extrapolate(scheme, [&](double scale) {
    return scalar_from_jet(metric_jet(field, point, scheme, scale));
  });
}

Estimate laplace_beltrami(const MetricField& field, const ScalarField& u, const ChartPoint& point,
                          const DerivativeScheme& scheme) {
  check_point(field, point, scheme);
  return extrapolate(scheme, [&](double scale) {
    return laplacian_at_scale(field, u, point, scheme, scale);
  });
}

Estimate conformal_scalar(const MetricField& field, const ScalarField& u, const ChartPoint& point,
                          const DerivativeScheme& scheme, int d) {
  if (d < 3) throw Error(ErrorCode::InvalidConfig, "conformal dimension must be at least 3");
  check_point(field, point, scheme);
  // Positivity is checked on the widest stencil the Laplacian will touch.
  const int dim = field.dim();
  Coords x = point.x;
  for (int e = 0; e < dim; ++e) {
    for (int f = e; f < dim; ++f) {
      for (int se : {-1, 1}) {
        for (int sf : {-1, 1}) {
          x = point.x;
          x[e] += se * scheme.step_for(e);
          if (f != e) x[f] += sf * scheme.step_for(f);
          if (!(u(point.chart, x) > 0.0)) {
            throw Error(ErrorCode::NonpositiveConformalFactor, "conformal factor not positive on stencil");
          }
        }
      }
    }
  }
  const double u0 = u(point.chart, point.x);
  const Estimate s = scalar_curvature(field, point, scheme);
  const Estimate lap = laplace_beltrami(field, u, point, scheme);
  const double kappa = 4.0 * (d - 1.0) / (d - 2.0);
  const double power = std::pow(u0, -(d + 2.0) / (d - 2.0));
  const double value = power * (s.value * u0 - kappa * lap.value);
  const double error = power * (std::abs(u0) * s.error + kappa * lap.error);
  return {value, error};
}

}  // namespace polyneck
