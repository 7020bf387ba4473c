#include "polyneck/error.hpp"
#include "polyneck/neck_analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace polyneck;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no polyneck::Error thrown";
  return ErrorCode::InvalidConfig;
}

DeviationOptions deviation_opts(double t_step) {
  DeviationOptions opts;
  opts.t_step = t_step;
  opts.jobs = 4;
  return opts;
}

// S^2 x R^3: the normal block is exactly Euclidean.
ModelGeometry flat_normal_model() {
  return make_product_model("sphere2_x_r3", {Factor{FactorKind::Sphere, 2, 1.0}},
                            Factor{FactorKind::Euclidean, 3, 1.0});
}

ChartPoint neck_at(double t) { return {ChartId::Neck, {0.9, 0.4, t, 1.1, 0.7}}; }

}  // namespace

TEST(Deviation, WeightedSupStableInEpsilon) {
  const ModelGeometry a = make_model({});
  const DeviationProfile p1 = deviation_profile(make_config(a, 0.1), deviation_opts(0.1));
  const DeviationProfile p2 = deviation_profile(make_config(a, 0.05), deviation_opts(0.1));
  ASSERT_TRUE(p1.resolved);
  ASSERT_TRUE(p2.resolved);
  const double ratio = p1.weighted_sup / p2.weighted_sup;
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 2.0);
  for (std::size_t i = 0; i < p2.t.size(); ++i) EXPECT_LE(p2.sup_dev[i], p2.bound(p2.t[i]) * (1 + 1e-12));
  EXPECT_NEAR(p2.bound(0.0), p2.weighted_sup / 0.05, 1e-12 * p2.bound(0.0));
}

TEST(Deviation, GridAndValidation) {
  const GluingConfig cfg = make_config(make_model({}), 0.05);
  const std::vector<double> grid = default_t_grid(cfg, 0.5);
  EXPECT_NEAR(grid.front(), std::log(0.05) + 1.0, 1e-14);
  EXPECT_NEAR(grid.back(), -std::log(0.05) - 1.0, 1e-14);
  EXPECT_EQ(code_of([&] { deviation_profile(cfg, {cfg.half_length()}, {}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { default_t_grid(cfg, 0.0); }), ErrorCode::InvalidConfig);
}

TEST(Deviation, ExactNeckIsNotResolved) {
  // With a Euclidean normal factor the plateau is u^4 times a flat cylinder,
  // which is flat for u = 2 sqrt(eps) cosh(t/2); the deviation vanishes.
  const GluingConfig cfg = make_config(flat_normal_model(), 0.05);
  DeviationOptions opts;
  EXPECT_EQ(code_of([&] { deviation_profile(cfg, {-0.5, 0.0, 0.5}, opts); }), ErrorCode::NotResolved);
  opts.require_resolved = false;
  const DeviationProfile p = deviation_profile(cfg, {-0.5, 0.0, 0.5}, opts);
  EXPECT_FALSE(p.resolved);
  for (std::size_t i = 0; i < p.t.size(); ++i) EXPECT_LE(p.sup_dev[i], p.fd_err[i] + 1e-9);
}

TEST(Deviation, FitSlopeFromSyntheticProfiles) {
  std::vector<DeviationProfile> profiles;
  for (double eps : {0.02, 0.04, 0.08}) {
    DeviationProfile p;
    p.epsilon = eps;
    p.weighted_sup = 2.0 + eps;
    p.probe = 3.0 * eps;
    p.probe_err = 1e-9;
    profiles.push_back(p);
  }
  profiles[1].probe_err = 1.0;  // unresolved probe is skipped
  const DeviationFit fit = fit_deviation(profiles);
  EXPECT_EQ(fit.probe_points, 2);
  EXPECT_NEAR(fit.probe_slope, 1.0, 1e-12);
  EXPECT_NEAR(fit.weighted_ratio, 2.08 / 2.02, 1e-12);
  EXPECT_NEAR(fit.max_constant, 2.08, 1e-15);
  EXPECT_NEAR(fit.profiles.front().epsilon, 0.02, 0.0);
}

TEST(Conjugation, ExactForEuclideanNormalFactor) {
  const GluingConfig cfg = make_config(flat_normal_model(), 0.05);
  const double r = conjugation_residual(cfg, default_conjugation_samples(cfg, 5),
                                        default_conjugation_probes(cfg), scheme_with_step(0.02));
  EXPECT_LE(r, 1e-8);
}

TEST(Conjugation, BoundedForRoundNormalFactor) {
  const GluingConfig cfg = make_config(make_model({}), 0.05);
  const double r = conjugation_residual(cfg, default_conjugation_samples(cfg, 7),
                                        default_conjugation_probes(cfg));
  EXPECT_GT(r, 1e-6);
  EXPECT_LT(r, 10.0);
  EXPECT_EQ(code_of([&] { conjugation_residual(cfg, {neck_at(cfg.half_length())}, default_conjugation_probes(cfg)); }),
            ErrorCode::OutOfNeck);
}

TEST(Conjugation, ReciprocalFactorProbe) {
  const GluingConfig cfg = make_config(flat_normal_model(), 0.05);
  const NeckProbe inv_u = [&cfg](ChartId, std::span<const double> x) {
    return 1.0 / u_eps(x[2], cfg.epsilon, 3);
  };
  // Lead(u / u) = Lead(1) = -1/4, so Delta(1/u) = -u^{-5}/4 exactly.
  const double r = conjugation_residual(cfg, {neck_at(0.3), neck_at(-1.2)}, {inv_u}, scheme_with_step(0.02));
  EXPECT_LE(r, 1e-8);
}

TEST(Barrier, Constants) {
  EXPECT_DOUBLE_EQ(barrier_constant(3, 0.0), 0.125);
  EXPECT_NEAR(barrier_constant(3, 0.49), 0.5 * (0.25 - 0.49 * 0.49), 1e-16);
  EXPECT_NEAR(barrier_constant(3, 0.49), 0.00495, 1e-15);
  EXPECT_NEAR(minimal_alpha(3, 0.0), std::log(8.0), 1e-14);
  EXPECT_EQ(code_of([] { minimal_alpha(3, 0.5); }), ErrorCode::DeltaOutOfRange);
}

TEST(Barrier, FunctionShape) {
  const ModelGeometry a = make_model({});
  const GluingConfig neg = make_config(a, 0.01, -0.3, minimal_alpha(3, -0.3));
  const GluingConfig pos = make_config(a, 0.01, 0.3, minimal_alpha(3, 0.3));
  const double u = u_eps(0.7, 0.01, 3);
  EXPECT_NEAR(barrier_function(neg, 0.7), std::pow(std::cosh(0.7), -0.3) / u, 1e-12);
  EXPECT_NEAR(barrier_function(pos, 0.7), std::cosh(0.21) / u, 1e-12);
}

TEST(Barrier, Preconditions) {
  const ModelGeometry a = make_model({});
  EXPECT_EQ(code_of([&] { check_barrier_preconditions(make_config(a, 0.05, 0.3, 1.0)); }), ErrorCode::AlphaTooSmall);
  const double alpha = minimal_alpha(3, 0.3);
  EXPECT_EQ(code_of([&] { check_barrier_preconditions(make_config(a, 0.09, 0.3, alpha)); }),
            ErrorCode::EpsilonTooLarge);
  EXPECT_EQ(code_of([&] { make_config(a, 0.05, 0.7, alpha); }), ErrorCode::DeltaOutOfRange);
}

TEST(Barrier, MarginNonnegative) {
  const ModelGeometry a = make_model({});
  for (double delta : {-0.3, 0.0, 0.3}) {
    const GluingConfig cfg = make_config(a, 0.02, delta, minimal_alpha(3, delta));
    BarrierOptions opts;
    opts.t_samples = 11;
    opts.theta_samples = 3;
    opts.jobs = 4;
    const BarrierReport rep = barrier_margin(cfg, opts);
    EXPECT_GE(rep.min_margin, 0.0) << delta;
    EXPECT_EQ(rep.margins.size(), 33u);
    EXPECT_NEAR(rep.eps_alpha, rep.C, 1e-12 * rep.C);
    for (std::size_t i = 0; i < rep.margins.size(); ++i) EXPECT_GT(rep.margins[i], rep.fd_err[i]);
  }
}

TEST(LocalEstimate, HomogeneousAndRangeChecked) {
  const GluingConfig cfg = make_config(make_model({}), 0.02, 0.3, minimal_alpha(3, 0.3));
  const RadialGrid grid = build_grid(cfg, 64);
  const DiscreteOperator op = assemble_L(grid, std::vector<double>(grid.size(), 1.5));
  const auto [lo, hi] = inner_neck_range(cfg, grid);
  ASSERT_GT(hi - lo, 2);
  for (int i = lo; i <= hi; ++i) {
    EXPECT_EQ(grid.chart[i], ChartId::Neck);
    EXPECT_LE(std::abs(grid.coord[i]), cfg.half_length() - cfg.alpha + 1e-12);
  }
  LocalProbe probe;
  probe.f.assign(grid.size(), 1.0);
  probe.v_lo = 0.1;
  probe.v_hi = -0.2;
  LocalProbe twice = probe;
  for (auto& x : twice.f) x *= 2.0;
  twice.v_lo *= 2.0;
  twice.v_hi *= 2.0;
  const double r1 = local_estimate_ratio(cfg, grid, op, {probe});
  const double r2 = local_estimate_ratio(cfg, grid, op, {twice});
  EXPECT_GT(r1, 0.0);
  EXPECT_NEAR(r1, r2, 1e-12 * r1);
  LocalProbe empty;
  empty.f.assign(grid.size(), 0.0);
  EXPECT_EQ(code_of([&] { local_estimate_ratio(cfg, grid, op, {empty}); }), ErrorCode::InvalidConfig);
}
