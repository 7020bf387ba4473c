#include "polyneck/cli.hpp"

#include "polyneck/curvature.hpp"
#include "polyneck/error.hpp"
#include "polyneck/fit.hpp"
#include "polyneck/gluing.hpp"
#include "polyneck/neck_analysis.hpp"
#include "polyneck/parallel.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace polyneck {

namespace {

using Json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidConfig, "key '" + key + "': '" + raw + "' is not a number");
  }
  return value;
}

int parse_int(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::InvalidConfig, "key '" + key + "': '" + raw + "' is not an integer");
  }
  return value;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "key '" + key + "': empty list");
  return out;
}

std::optional<double> parse_auto(const std::string& key, const std::string& raw) {
  if (trim(raw) == "auto") return std::nullopt;
  return parse_double(key, raw);
}

int positive_int(const std::string& key, const std::string& raw, int min_value = 1) {
  const int v = parse_int(key, raw);
  if (v < min_value) {
    throw Error(ErrorCode::InvalidConfig,
                "key '" + key + "' must be at least " + std::to_string(min_value));
  }
  return v;
}

double positive_double(const std::string& key, const std::string& raw) {
  const double v = parse_double(key, raw);
  if (!(v > 0.0)) throw Error(ErrorCode::InvalidConfig, "key '" + key + "' must be positive");
  return v;
}

// ---------------------------------------------------------------------------
// Artifact writers

class TableWriter {
 public:
  TableWriter(const std::filesystem::path& path, char sep) : out_(path), sep_(sep) {
    if (!out_) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  }

  TableWriter& cell(double v) { return raw(format_number(v)); }
  TableWriter& cell(int v) { return raw(std::to_string(v)); }
  TableWriter& cell(const std::string& v) { return raw(v); }
  TableWriter& cell(const char* v) { return raw(v); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  void comment(const std::string& text) { out_ << "# " << text << '\n'; }
  void blank() { out_ << '\n'; }

 private:
  TableWriter& raw(const std::string& s) {
    if (!first_) out_ << sep_;
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  char sep_;
  bool first_ = true;
};

struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::string>* files;

  TableWriter csv(const std::string& name, const std::vector<std::string>& header) {
    files->push_back(name);
    TableWriter w(dir / name, ',');
    for (const auto& h : header) w.cell(h);
    w.end_row();
    return w;
  }
  TableWriter dat(const std::string& name, const std::string& columns) {
    files->push_back(name);
    TableWriter w(dir / name, ' ');
    w.comment(columns);
    return w;
  }
};

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void write_summary(const RunConfig& cfg, const RunResult& result, const Json& constants,
                   const std::filesystem::path& path) {
  Json j;
  j["command"] = result.command;
  Json params = Json::object();
  for (const auto& [k, v] : cfg.settings) params[k] = v;
  j["parameters"] = params;
  j["constants"] = constants;
  Json checks = Json::array();
  for (const auto& c : result.checks) {
    Json row;
    row["name"] = c.name;
    row["measured"] = number(c.measured);
    row["relation"] = c.relation;
    row["bound"] = number(c.bound);
    row["bound_origin"] = c.bound_origin;
    row["passed"] = c.passed;
    if (!c.note.empty()) row["note"] = c.note;
    checks.push_back(row);
  }
  j["checks"] = checks;
  j["passed"] = result.passed();
  j["files"] = result.files;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// validate-tensors

MetricField euclidean_cartesian(int dim) {
  ChartDescriptor chart;
  chart.id = ChartId::RawFermi;
  chart.domain.assign(dim, Interval{});
  chart.stencil_domain.assign(dim, Interval{});
  return MetricField(dim, {chart}, [dim](ChartId, std::span<const double>) {
    return MetricMatrix::Identity(dim, dim).eval();
  });
}

MetricField constant_metric(const MetricMatrix& g) {
  const int dim = static_cast<int>(g.rows());
  ChartDescriptor chart;
  chart.id = ChartId::RawFermi;
  chart.domain.assign(dim, Interval{});
  chart.stencil_domain.assign(dim, Interval{});
  return MetricField(dim, {chart}, [g](ChartId, std::span<const double>) { return g; });
}

MetricField euclidean_polar3() {
  ChartDescriptor chart;
  chart.id = ChartId::Cap1;
  chart.domain = {Interval{1e-3, kInf}};
  chart.stencil_domain = {Interval{1e-12, kInf}};
  for (const auto& iv : sphere_angle_domain(2)) {
    chart.domain.push_back(iv);
    chart.stencil_domain.push_back(iv);
  }
  return MetricField(3, {chart}, [](ChartId, std::span<const double> x) {
    MetricMatrix g = MetricMatrix::Zero(3, 3);
    g(0, 0) = 1.0;
    write_sphere_metric(x.subspan(1), x[0] * x[0], g, 1);
    return g;
  });
}

struct TensorRow {
  std::string name;
  int index;
  double value;
  double expected;
  double fd_err;
};

// Random point of a polar Fermi chart: tangential coordinates, r, angles.
Coords random_polar_point(const ModelGeometry& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Coords x;
  for (const auto& f : model.tangential) {
    for (int a = 0; a < f.dim; ++a) {
      if (f.kind == FactorKind::Sphere && a + 1 < f.dim) {
        x.push_back(0.4 + (std::numbers::pi - 0.8) * unit(rng));
      } else {
        x.push_back(2.0 * std::numbers::pi * unit(rng));
      }
    }
  }
  x.push_back(0.3 + (model.r_max() - 0.6) * unit(rng));
  for (int a = 0; a + 1 < model.n; ++a) {
    x.push_back(a + 2 < model.n ? 0.4 + (std::numbers::pi - 0.8) * unit(rng)
                                : 2.0 * std::numbers::pi * unit(rng));
  }
  return x;
}

RunResult cmd_validate_tensors(const RunConfig& cfg, Artifacts& art, Json& constants) {
  const DerivativeScheme scheme = scheme_with_step(cfg.curvature_step);
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TensorRow> rows;

  const ModelGeometry s3 = make_model(ModelSpec{.name = "sphere3"});
  const ModelGeometry model_b = make_model(ModelSpec{.name = "sphere2_x_sphere3"});
  const MetricField s3_field = fermi_metric(s3, 1);
  const MetricField b_field = fermi_metric(model_b, 1);

  double s3_rel = 0.0, b_rel = 0.0, flat_abs = 0.0, conf_rel = 0.0, harm_abs = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Estimate e = scalar_curvature(s3_field, {ChartId::Cap1, random_polar_point(s3, rng)}, scheme);
    rows.push_back({"sphere3_scalar", i, e.value, 6.0, e.error});
    s3_rel = std::max(s3_rel, std::abs(e.value - 6.0) / 6.0);
  }
  for (int i = 0; i < 5; ++i) {
    const Estimate e =
        scalar_curvature(b_field, {ChartId::Cap1, random_polar_point(model_b, rng)}, scheme);
    rows.push_back({"model_b_scalar", i, e.value, 7.0, e.error});
    b_rel = std::max(b_rel, std::abs(e.value - 7.0) / 7.0);
  }
  const MetricField polar = euclidean_polar3();
  for (int i = 0; i < 3; ++i) {
    const Coords x = {0.3 + 2.0 * unit(rng), 0.4 + 2.3 * unit(rng), 6.0 * unit(rng)};
    const Estimate e = scalar_curvature(polar, {ChartId::Cap1, x}, scheme);
    rows.push_back({"flat_polar_scalar", i, e.value, 0.0, e.error});
    flat_abs = std::max(flat_abs, std::abs(e.value));
  }
  {
    MetricMatrix a(4, 4);
    for (int r = 0; r < 4; ++r) {
      for (int q = 0; q < 4; ++q) a(r, q) = 2.0 * unit(rng) - 1.0;
    }
    const MetricMatrix g = a * a.transpose() + 4.0 * MetricMatrix::Identity(4, 4);
    const Estimate e = scalar_curvature(constant_metric(g), {ChartId::RawFermi, Coords(4, 0.1)}, scheme);
    rows.push_back({"flat_constant_scalar", 0, e.value, 0.0, e.error});
    flat_abs = std::max(flat_abs, std::abs(e.value));
  }
  for (int i = 0; i < 20; ++i) {
    const ModelGeometry& model = i % 2 == 0 ? s3 : model_b;
    const MetricField& field = i % 2 == 0 ? s3_field : b_field;
    const int d = field.dim();
    std::vector<double> a(d);
    for (auto& ai : a) ai = 2.0 * unit(rng) - 1.0;
    const double amp = 0.1 + 0.2 * unit(rng);
    const ScalarField u = [a, amp](ChartId, std::span<const double> x) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * x[j];
      return std::exp(amp * std::sin(s));
    };
    const double power = 4.0 / (d - 2);
    const MetricField rescaled =
        field.scaled([u, power](ChartId c, std::span<const double> x) { return std::pow(u(c, x), power); });
    const ChartPoint p{ChartId::Cap1, random_polar_point(model, rng)};
    const Estimate conf = conformal_scalar(field, u, p, scheme, d);
    const Estimate direct = scalar_curvature(rescaled, p, scheme);
    rows.push_back({"conformal_vs_direct", i, conf.value, direct.value, conf.error + direct.error});
    conf_rel = std::max(conf_rel, std::abs(conf.value - direct.value) / std::max(1.0, std::abs(direct.value)));
  }
  const MetricField euclid = euclidean_cartesian(3);
  const ScalarField inverse_radius = [](ChartId, std::span<const double> x) {
    return 1.0 / std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  };
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    Coords x = {gauss(rng), gauss(rng), gauss(rng)};
    const double norm = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    const double radius = 0.3 + 0.6 * i / 9.0;
    for (auto& xi : x) xi *= radius / norm;
    const Estimate e = laplace_beltrami(euclid, inverse_radius, {ChartId::RawFermi, x}, scheme);
    rows.push_back({"harmonic_laplacian", i, e.value, 0.0, e.error});
    harm_abs = std::max(harm_abs, std::abs(e.value));
  }

  auto csv = art.csv("tensors.csv", {"case", "index", "value", "expected", "abs_err", "fd_err"});
  auto dat = art.dat("tensors.dat", "index value expected abs_err (one block per case)");
  std::string last;
  for (const auto& r : rows) {
    csv.cell(r.name).cell(r.index).cell(r.value).cell(r.expected).cell(std::abs(r.value - r.expected)).cell(r.fd_err);
    csv.end_row();
    if (r.name != last) {
      if (!last.empty()) {
        dat.blank();
        dat.blank();
      }
      dat.comment(r.name);
      last = r.name;
    }
    dat.cell(r.index).cell(r.value).cell(r.expected).cell(std::abs(r.value - r.expected));
    dat.end_row();
  }

  RunResult result;
  result.checks.push_back(make_check("sphere3_scalar_rel_err", s3_rel, "<=", 1e-6, "analytic"));
  result.checks.push_back(make_check("flat_scalar_abs_err", flat_abs, "<=", 1e-6, "analytic"));
  result.checks.push_back(make_check("model_b_scalar_rel_err", b_rel, "<=", 1e-6, "analytic"));
  result.checks.push_back(make_check("conformal_vs_direct_rel_err", conf_rel, "<=", 1e-5, "analytic"));
  result.checks.push_back(make_check("harmonic_laplacian_abs", harm_abs, "<=", 1e-6, "theorem"));
  constants["cases"] = static_cast<int>(rows.size());
  return result;
}

// ---------------------------------------------------------------------------
// neck-estimate

RunResult cmd_neck_estimate(const RunConfig& cfg, Artifacts& art, Json& constants) {
  for (double e : cfg.sweep_epsilons) cfg.gluing(e).validate();
  DeviationOptions opts;
  opts.scheme = scheme_with_step(cfg.curvature_step);
  opts.t_step = cfg.neck_t_step;
  opts.jobs = cfg.jobs;
  opts.require_resolved = false;
  std::vector<DeviationProfile> profiles;
  std::vector<double> conj;
  for (double e : cfg.sweep_epsilons) {
    const GluingConfig g = cfg.gluing(e);
    profiles.push_back(deviation_profile(g, opts));
    conj.push_back(conjugation_residual(g, default_conjugation_samples(g, 9),
                                        default_conjugation_probes(g), opts.scheme));
  }
  const DeviationFit fit = fit_deviation(profiles);

  auto csv = art.csv("deviation.csv", {"eps", "t", "sup_dev", "bound", "fd_err"});
  auto dat = art.dat("deviation.dat", "t sup_dev bound fd_err (one block per eps)");
  auto probes = art.csv("probe.csv", {"eps", "t", "probe", "fd_err", "weighted_sup", "conjugation"});
  for (std::size_t i = 0; i < fit.profiles.size(); ++i) {
    const DeviationProfile& p = fit.profiles[i];
    if (i > 0) {
      dat.blank();
      dat.blank();
    }
    dat.comment("eps " + format_number(p.epsilon));
    for (std::size_t j = 0; j < p.t.size(); ++j) {
      csv.cell(p.epsilon).cell(p.t[j]).cell(p.sup_dev[j]).cell(p.bound(p.t[j])).cell(p.fd_err[j]);
      csv.end_row();
      dat.cell(p.t[j]).cell(p.sup_dev[j]).cell(p.bound(p.t[j])).cell(p.fd_err[j]);
      dat.end_row();
    }
    probes.cell(p.epsilon).cell(std::log(p.epsilon) + 1.0).cell(p.probe).cell(p.probe_err)
        .cell(p.weighted_sup).cell(conj[i]);
    probes.end_row();
  }

  const int n = cfg.gluing(cfg.sweep_epsilons.front()).n();
  RunResult result;
  result.checks.push_back(make_check("weighted_sup_ratio", fit.weighted_ratio, "<=", 10.0, "theorem"));
  CheckRow slope = make_check("probe_slope", fit.probe_slope, ">=", (n - 2) - 0.3, "theorem");
  if (fit.probe_points < static_cast<int>(fit.profiles.size())) {
    slope.passed = false;
    slope.note = std::to_string(fit.probe_points) + " of " + std::to_string(fit.profiles.size()) +
                 " probes resolved";
  }
  result.checks.push_back(slope);
  result.checks.push_back(make_check("conjugation_residual_spread", spread_ratio(conj), "<=", 10.0,
                                     "design"));
  constants["fitted_c"] = number(fit.max_constant);
  constants["probe_points"] = fit.probe_points;
  return result;
}

// ---------------------------------------------------------------------------
// barrier

RunResult cmd_barrier(const RunConfig& cfg, Artifacts& art, Json& constants) {
  std::vector<GluingConfig> cases;
  for (double delta : cfg.barrier_deltas) {
    for (double e : cfg.barrier_epsilons) {
      GluingConfig g = cfg.gluing(e, delta, cfg.barrier_alpha);
      check_barrier_preconditions(g);
      cases.push_back(g);
    }
  }
  BarrierOptions opts;
  opts.scheme = scheme_with_step(cfg.curvature_step);
  opts.t_samples = cfg.barrier_t_samples;
  opts.theta_samples = cfg.barrier_theta_samples;
  opts.jobs = cfg.jobs;
  auto csv = art.csv("barrier.csv", {"delta", "eps", "alpha", "min_margin", "C"});
  auto dat = art.dat("barrier.dat", "t theta margin fd_err (one block per delta, eps)");
  RunResult result;
  Json eps_alpha = Json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const BarrierReport r = barrier_margin(cases[i], opts);
    csv.cell(r.delta).cell(r.epsilon).cell(r.alpha).cell(r.min_margin).cell(r.C);
    csv.end_row();
    if (i > 0) {
      dat.blank();
      dat.blank();
    }
    dat.comment("delta " + format_number(r.delta) + " eps " + format_number(r.epsilon));
    for (std::size_t a = 0; a < r.t.size(); ++a) {
      for (std::size_t b = 0; b < r.theta.size(); ++b) {
        const std::size_t idx = a * r.theta.size() + b;
        dat.cell(r.t[a]).cell(r.theta[b]).cell(r.margins[idx]).cell(r.fd_err[idx]);
        dat.end_row();
      }
    }
    result.checks.push_back(make_check("barrier_margin[delta=" + format_number(r.delta) +
                                           ",eps=" + format_number(r.epsilon) + "]",
                                       r.min_margin, ">=", 0.0, "theorem"));
    eps_alpha.push_back({{"delta", r.delta}, {"alpha", r.alpha}, {"eps_alpha", r.eps_alpha}});
  }
  constants["eps_alpha"] = eps_alpha;
  return result;
}

// ---------------------------------------------------------------------------
// spectrum

RunResult cmd_spectrum(const RunConfig& cfg, Artifacts& art, Json& constants) {
  for (double e : cfg.sweep_epsilons) cfg.gluing(e).validate();
  const ModelGeometry model = make_model(cfg.model);
  const int m = model.m;
  const double shift = model.S / (m - 1);
  const double full_gap = injectivity_gap(model, 4.0 * shift + 10.0, SpectrumClass::Full);
  const double sym_gap = injectivity_gap(model, 4.0 * shift + 10.0, SpectrumClass::Symmetric);

  const RadialGrid summand = build_summand_grid(model, cfg.resolution);
  const std::vector<double> summand_curv(summand.size(), model.S);
  const double summand_eig =
      smallest_eigenvalue(assemble_L(summand, yamabe_potential(summand_curv, m)), cfg.solver);

  const int count = static_cast<int>(cfg.sweep_epsilons.size());
  std::vector<double> eig(count), ratio(count, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> failures(count);
  const DerivativeScheme scheme = scheme_with_step(cfg.picard_step);
  const YamabeConstants yc = yamabe_constants(m);
  parallel_for(count, cfg.jobs, [&](int i) {
    const GluingConfig g = cfg.gluing(cfg.sweep_epsilons[i]);
    const RadialGrid grid = build_grid(g, cfg.resolution);
    const std::vector<double> curv = values(curvature_profile(glued_metric(g), grid, scheme));
    DiscreteOperator op = assemble_L(grid, yamabe_potential(curv, m));
    eig[i] = std::abs(smallest_eigenvalue(op, cfg.solver));
    std::vector<double> source(curv.size());
    for (std::size_t j = 0; j < curv.size(); ++j) source[j] = yc.c * (model.S - curv[j]);
    try {
      const LinearSolver solver(std::move(op), cfg.solver);
      ratio[i] = global_estimate_ratio(g, grid, solver, {source});
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  auto spec = art.csv("spectrum.csv", {"eps", "min_abs_eig"});
  auto est = art.csv("estimate.csv", {"eps", "delta", "ratio"});
  auto dat = art.dat("spectrum.dat", "eps min_abs_eig ratio");
  for (int i = 0; i < count; ++i) {
    spec.cell(cfg.sweep_epsilons[i]).cell(eig[i]);
    spec.end_row();
    est.cell(cfg.sweep_epsilons[i]).cell(cfg.delta).cell(ratio[i]);
    est.end_row();
    dat.cell(cfg.sweep_epsilons[i]).cell(eig[i]).cell(ratio[i]);
    dat.end_row();
  }

  RunResult result;
  result.checks.push_back(make_check("summand_gap_full", full_gap, "==", 0.5, "analytic"));
  result.checks.back().passed = std::abs(full_gap - 0.5) <= 1e-12;
  result.checks.push_back(make_check("summand_gap_symmetric", sym_gap, "==", 1.5, "analytic"));
  result.checks.back().passed = std::abs(sym_gap - 1.5) <= 1e-12;
  result.checks.push_back(make_check("summand_discrete_gap_err", std::abs(std::abs(summand_eig) - sym_gap),
                                     "<=", 1e-2, "analytic"));
  const double eig_min = *std::min_element(eig.begin(), eig.end());
  result.checks.push_back(make_check("glued_eig_spread", spread_ratio(eig), "<=", 4.0, "design"));
  result.checks.push_back(make_check("glued_eig_min", eig_min, ">=", 1e-3, "design"));
  std::string note;
  for (int i = 0; i < count; ++i) {
    if (!failures[i].empty()) note += "eps " + format_number(cfg.sweep_epsilons[i]) + ": " + failures[i] + "; ";
  }
  const bool all_ratios = note.empty();
  CheckRow spread = make_check("estimate_ratio_spread",
                               all_ratios ? spread_ratio(ratio) : std::numeric_limits<double>::quiet_NaN(),
                               "<=", 10.0, "theorem", note);
  result.checks.push_back(spread);
  constants["summand_discrete_eig"] = summand_eig;
  constants["shift"] = shift;
  return result;
}

// ---------------------------------------------------------------------------
// solve and sweep

void write_sweep_rows(TableWriter& csv, const std::vector<SweepRow>& rows) {
  for (const auto& r : rows) {
    csv.cell(r.eps).cell(r.delta).cell(r.sup_v).cell(r.r_eps).cell(r.cap_sup_v).cell(r.iters)
        .cell(r.residual).cell(r.pre_dev).cell(r.post_dev).cell(r.slope_so_far);
    csv.end_row();
  }
}

const std::vector<std::string> kSweepHeader = {"eps", "delta", "sup_v", "r_eps", "cap_sup_v", "iters",
                                               "residual", "pre_dev", "post_dev", "slope_so_far"};

RunResult cmd_solve(const RunConfig& cfg, Artifacts& art, Json& constants) {
  const GluingConfig g = cfg.gluing(cfg.epsilon);
  g.validate();
  const PicardOptions opts = cfg.picard();
  RunResult result;
  SweepRow row;
  row.eps = g.epsilon;
  row.delta = g.delta;
  try {
    const FixedPointReport rep = picard_solve(g, opts);
    const CurvatureCheck check = verify_constant_curvature(rep, g, opts.scheme, {}, cfg.jobs);
    row.sup_v = rep.sup_v;
    row.r_eps = rep.r_eps;
    row.cap_sup_v = rep.cap_sup_v;
    row.iters = rep.iterations;
    row.residual = rep.residual;
    row.pre_dev = check.pre_dev;
    row.post_dev = check.post_dev;
    row.fd_floor = check.fd_floor;

    auto dat = art.dat("solve.dat", "index chart coord v S_g");
    for (int i = 0; i < rep.grid.size(); ++i) {
      dat.cell(i).cell(std::string(to_string(rep.grid.chart[i]))).cell(rep.grid.coord[i])
          .cell(rep.solution[i]).cell(rep.curvature[i]);
      dat.end_row();
    }
    auto cdat = art.dat("solve_curvature.dat", "coord pre_dev post_dev fd_err (cell midpoints)");
    for (std::size_t i = 0; i < check.coord.size(); ++i) {
      cdat.cell(check.coord[i]).cell(check.pre[i]).cell(check.post[i]).cell(check.fd_err[i]);
      cdat.end_row();
    }

    const double ball = std::min(0.5, rep.r_eps);
    const double worst = *std::max_element(rep.sup_history.begin(), rep.sup_history.end());
    result.checks.push_back(make_check("picard_iterations", rep.iterations, "<=", 30, "design"));
    result.checks.push_back(make_check("picard_residual", rep.residual, "<=", 1e-10, "design"));
    // r_eps self-maps when eps^{2 delta} + eps^{delta - c + 1} <= 1/(2C''')^2.
    const double c = g.neck_exponent();
    const double small_lhs = std::pow(g.epsilon, 2.0 * g.delta) + std::pow(g.epsilon, g.delta - c + 1.0);
    const double small_rhs = 1.0 / std::pow(2.0 * rep.c_triple_prime, 2);
    constants["smallness_lhs"] = number(small_lhs);
    constants["smallness_rhs"] = number(small_rhs);
    result.checks.push_back(make_check(
        "ball_containment", worst, "<=", ball, "theorem",
        "bound is min(1/2, r_eps) with the fitted C'''; smallness condition " + format_number(small_lhs) +
            (small_lhs <= small_rhs ? " <= " : " > ") + format_number(small_rhs)));
    result.checks.push_back(make_check("mirror_symmetry", rep.mirror_defect, "<=", 1e-10, "analytic"));
    const double bound = std::max(10.0 * check.fd_floor, check.pre_dev / 50.0);
    result.checks.push_back(make_check("curvature_constancy", check.post_dev, "<=", bound, "design",
                                       "bound is max(10 fd floor, pre-solve deviation / 50)"));
    constants["contraction"] = number(rep.contraction);
    constants["estimate_constant"] = number(rep.estimate_constant);
    constants["c_prime"] = number(rep.c_prime);
    constants["c_double_prime"] = number(rep.c_double_prime);
    constants["c_triple_prime"] = number(rep.c_triple_prime);
    constants["r_eps"] = number(rep.r_eps);
    constants["min_abs_eigenvalue"] = number(rep.min_abs_eigenvalue);
    constants["fd_floor"] = number(check.fd_floor);
    constants["sup_history"] = rep.sup_history;
  } catch (const Error& e) {
    if (is_precondition_error(e.code())) throw;
    row.error = e.what();
    result.checks.push_back(make_check("picard_convergence", 0.0, "==", 1.0, "design", e.what()));
  }
  auto csv = art.csv("solve.csv", kSweepHeader);
  write_sweep_rows(csv, {row});
  return result;
}

RunResult cmd_sweep(const RunConfig& cfg, Artifacts& art, Json& constants) {
  SweepOptions opts;
  opts.picard = cfg.picard();
  opts.jobs = cfg.jobs;
  const std::vector<SweepRow> rows = convergence_sweep(cfg.gluing(cfg.epsilon), cfg.sweep_epsilons, opts);
  auto csv = art.csv("sweep.csv", kSweepHeader);
  write_sweep_rows(csv, rows);
  auto dat = art.dat("sweep.dat", "eps sup_v r_eps cap_sup_v post_dev");
  for (const auto& r : rows) {
    dat.cell(r.eps).cell(r.sup_v).cell(r.r_eps).cell(r.cap_sup_v).cell(r.post_dev);
    dat.end_row();
  }

  const int n = cfg.gluing(cfg.epsilon).n();
  int failed = 0;
  std::string note;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++failed;
      note += "eps " + format_number(r.eps) + ": " + r.error + "; ";
    }
  }
  RunResult result;
  result.checks.push_back(make_check("sweep_failed_runs", failed, "<=", 0, "design", note));
  const double slope = sweep_slope(rows);
  CheckRow slope_row = make_check("sup_v_slope", slope, ">=", 0.5 * (n - 2) - cfg.delta, "theorem");
  if (failed > 0) {
    slope_row.passed = false;
    slope_row.note = "fit over " + std::to_string(rows.size() - failed) + " of " +
                     std::to_string(rows.size()) + " runs";
  }
  result.checks.push_back(slope_row);

  // Cap sup along decreasing epsilon.
  std::vector<SweepRow> ordered = rows;
  std::sort(ordered.begin(), ordered.end(), [](const SweepRow& a, const SweepRow& b) { return a.eps > b.eps; });
  double worst_step = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
    const double step = ordered[i + 1].cap_sup_v - ordered[i].cap_sup_v;
    if (std::isnan(step)) {
      worst_step = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    worst_step = std::max(worst_step, step);
  }
  CheckRow mono = make_check("cap_sup_decrease", worst_step, "<=", 0.0, "theorem",
                             "largest increment of cap sup|v| along decreasing eps");
  mono.passed = worst_step < 0.0;
  result.checks.push_back(mono);
  result.checks.push_back(make_check("cap_sup_at_smallest_eps", ordered.back().cap_sup_v, "<=", 0.01, "theorem"));
  constants["slope"] = number(slope);
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

Settings default_settings() {
  return {
      {"model.name", "torus2_x_sphere3"},
      {"model.torus_side", "6.283185307179586"},
      {"model.sphere2_radius_sq", "2"},
      {"model.sphere3_radius", "1"},
      {"gluing.epsilon", "0.05"},
      {"gluing.alpha", "3"},
      {"gluing.delta", "0.3"},
      {"gluing.cutoff_width", "1"},
      {"sweep.epsilons", "0.16, 0.08, 0.04, 0.02"},
      {"barrier.deltas", "-0.3, 0, 0.3"},
      {"barrier.epsilons", "0.02, 0.05"},
      {"barrier.alpha", "auto"},
      {"barrier.t_samples", "41"},
      {"barrier.theta_samples", "5"},
      {"neck.t_step", "0.05"},
      {"curvature.step", "0.001"},
      {"grid.resolution", "64"},
      {"solver.tol", "1e-12"},
      {"solver.max_refine", "5"},
      {"solver.max_iter", "10000"},
      {"yamabe.tol", "1e-12"},
      {"yamabe.max_iter", "200"},
      {"yamabe.fd_step", "0.005"},
      {"yamabe.source_variant", "full"},
  };
}

Settings parse_settings(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  Settings out;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      out[trim(key)] = trim(node.data());
    } else {
      for (const auto& [sub, leaf] : node) out[trim(key) + "." + trim(sub)] = trim(leaf.data());
    }
  }
  return out;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
  return parse_settings(in);
}

void merge_settings(Settings& into, const Settings& from) {
  for (const auto& [k, v] : from) {
    if (!into.contains(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "'");
    into[k] = v;
  }
}

void apply_override(Settings& settings, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "override '" + assignment + "' is not key=value");
  }
  merge_settings(settings, {{trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))}});
}

GluingConfig RunConfig::gluing(double eps, double delta_value, std::optional<double> alpha_value) const {
  const ModelGeometry m = make_model(model);
  const double a = alpha_value ? *alpha_value : minimal_alpha(m.n, delta_value);
  return make_config(m, eps, delta_value, a, cutoff_width);
}

PicardOptions RunConfig::picard() const {
  PicardOptions p;
  p.resolution = resolution;
  p.tol = picard_tol;
  p.max_iter = picard_max_iter;
  p.variant = variant;
  p.solver = solver;
  p.scheme = scheme_with_step(picard_step);
  return p;
}

RunConfig make_run_config(const Settings& settings) {
  Settings s = default_settings();
  merge_settings(s, settings);
  RunConfig c;
  c.settings = s;
  c.model.name = s["model.name"];
  c.model.torus_side = positive_double("model.torus_side", s["model.torus_side"]);
  c.model.sphere2_radius_sq = positive_double("model.sphere2_radius_sq", s["model.sphere2_radius_sq"]);
  c.model.sphere3_radius = positive_double("model.sphere3_radius", s["model.sphere3_radius"]);
  c.epsilon = parse_double("gluing.epsilon", s["gluing.epsilon"]);
  c.alpha = parse_auto("gluing.alpha", s["gluing.alpha"]);
  c.delta = parse_double("gluing.delta", s["gluing.delta"]);
  c.cutoff_width = parse_double("gluing.cutoff_width", s["gluing.cutoff_width"]);
  c.sweep_epsilons = parse_list("sweep.epsilons", s["sweep.epsilons"]);
  c.barrier_deltas = parse_list("barrier.deltas", s["barrier.deltas"]);
  c.barrier_epsilons = parse_list("barrier.epsilons", s["barrier.epsilons"]);
  c.barrier_alpha = parse_auto("barrier.alpha", s["barrier.alpha"]);
  c.barrier_t_samples = positive_int("barrier.t_samples", s["barrier.t_samples"]);
  c.barrier_theta_samples = positive_int("barrier.theta_samples", s["barrier.theta_samples"]);
  c.neck_t_step = positive_double("neck.t_step", s["neck.t_step"]);
  c.curvature_step = positive_double("curvature.step", s["curvature.step"]);
  c.resolution = positive_int("grid.resolution", s["grid.resolution"], 16);
  c.solver.tol = positive_double("solver.tol", s["solver.tol"]);
  c.solver.max_refine = positive_int("solver.max_refine", s["solver.max_refine"], 0);
  c.solver.max_iter = positive_int("solver.max_iter", s["solver.max_iter"]);
  c.picard_tol = positive_double("yamabe.tol", s["yamabe.tol"]);
  c.picard_max_iter = positive_int("yamabe.max_iter", s["yamabe.max_iter"]);
  c.picard_step = positive_double("yamabe.fd_step", s["yamabe.fd_step"]);
  c.variant = parse_source_variant(trim(s["yamabe.source_variant"]));
  // Model and base gluing parameters are checked before any command runs.
  c.gluing(c.epsilon).validate();
  return c;
}

CheckRow make_check(std::string name, double measured, std::string relation, double bound,
                    std::string origin, std::string note) {
  CheckRow row{std::move(name), measured, std::move(relation), bound, std::move(origin), false, std::move(note)};
  if (row.relation == "<=") {
    row.passed = measured <= bound;
  } else if (row.relation == ">=") {
    row.passed = measured >= bound;
  } else {
    row.passed = measured == bound;
  }
  return row;
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRow& c) { return c.passed; });
}

const CheckRow* RunResult::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"validate-tensors", "neck-estimate", "barrier",
                                                 "spectrum", "solve", "sweep"};
  return names;
}

RunResult run_command(const std::string& command, const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  RunResult result;
  Artifacts art{cfg.out, &result.files};
  Json constants = Json::object();
  RunResult body;
  if (command == "validate-tensors") {
    body = cmd_validate_tensors(cfg, art, constants);
  } else if (command == "neck-estimate") {
    body = cmd_neck_estimate(cfg, art, constants);
  } else if (command == "barrier") {
    body = cmd_barrier(cfg, art, constants);
  } else if (command == "spectrum") {
    body = cmd_spectrum(cfg, art, constants);
  } else if (command == "solve") {
    body = cmd_solve(cfg, art, constants);
  } else if (command == "sweep") {
    body = cmd_sweep(cfg, art, constants);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown command '" + command + "'");
  }
  result.command = command;
  result.checks = std::move(body.checks);
  result.files.push_back("run.json");
  write_summary(cfg, result, constants, cfg.out / "run.json");
  return result;
}

int execute(const std::string& command, const std::optional<std::filesystem::path>& config_path,
            const std::vector<std::string>& overrides, const std::optional<std::string>& out,
            std::optional<int> jobs, std::ostream& log) {
  try {
    Settings s = default_settings();
    if (config_path) merge_settings(s, load_settings(*config_path));
    for (const auto& o : overrides) apply_override(s, o);
    RunConfig cfg = make_run_config(s);
    if (out) cfg.out = *out;
    if (jobs) {
      if (*jobs < 1) throw Error(ErrorCode::InvalidConfig, "--jobs must be at least 1");
      cfg.jobs = *jobs;
    }
    const RunResult result = run_command(command, cfg);
    for (const auto& c : result.checks) {
      log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << format_number(c.measured) << ' '
          << c.relation << ' ' << format_number(c.bound) << " [" << c.bound_origin << ']';
      if (!c.note.empty()) log << " (" << c.note << ')';
      log << '\n';
    }
    log << "artifacts in " << cfg.out.string() << '\n';
    return result.passed() ? 0 : 1;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return is_precondition_error(e.code()) ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace polyneck
