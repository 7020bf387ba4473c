#include "polyneck/error.hpp"
#include "polyneck/yamabe.hpp"

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

// Test-side source term written from its definition with d = 5.
double F_oracle(double v, double dS, double S, bool full) {
  const double c = -3.0 / 16.0;
  const double p = 7.0 / 3.0;
  return c * dS + (full ? c * p : c) * dS * v + c * S * (std::pow(1.0 + v, p) - 1.0 - p * v);
}

const FixedPointReport& report_005() {
  static const FixedPointReport r = picard_solve(make_config(make_model({}), 0.05));
  return r;
}

}  // namespace

TEST(Constants, DimensionFive) {
  const YamabeConstants k = yamabe_constants(5);
  EXPECT_DOUBLE_EQ(k.c, -3.0 / 16.0);
  EXPECT_DOUBLE_EQ(k.p, 7.0 / 3.0);
  EXPECT_EQ(code_of([] { yamabe_constants(2); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_source_variant("reduced"), SourceVariant::Reduced);
  EXPECT_EQ(to_string(SourceVariant::Full), "full");
  EXPECT_EQ(code_of([] { parse_source_variant("half"); }), ErrorCode::InvalidConfig);
}

TEST(Source, MatchesDefinition) {
  const YamabeConstants k = yamabe_constants(5);
  const std::vector<double> v = {0.0, 1e-3, -0.2, 0.4};
  const std::vector<double> dS = {0.3, -1.0, 2.0, 0.05};
  const std::vector<double> full = F_eps(v, dS, 6.0, k);
  const std::vector<double> red = F_eps(v, dS, 6.0, k, SourceVariant::Reduced);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(full[i], F_oracle(v[i], dS[i], 6.0, true), 1e-14);
    EXPECT_NEAR(red[i], F_oracle(v[i], dS[i], 6.0, false), 1e-14);
    EXPECT_NEAR(full[i] - red[i], k.c * (k.p - 1.0) * dS[i] * v[i], 1e-14);
  }
  EXPECT_DOUBLE_EQ(full[0], k.c * dS[0]);
  // Quadratic remainder: F(v) - F(0) - c p dS v = c S p (p-1) v^2 / 2 + O(v^3).
  const double h = 1e-3;
  const double quad = full[1] - k.c * dS[1] - k.c * k.p * dS[1] * h;
  EXPECT_NEAR(quad, k.c * 6.0 * k.p * (k.p - 1.0) * h * h / 2.0, 1e-9);
  EXPECT_EQ(code_of([&] { F_eps(std::vector<double>{0.6}, std::vector<double>{0.0}, 6.0, k); }),
            ErrorCode::IterateOutOfBall);
}

TEST(Picard, ExactModelHasZeroSolution) {
  const ModelGeometry a = make_model({});
  const GluingConfig cfg = make_config(a, 0.05);
  RadialGrid grid = build_summand_grid(a, 64);
  std::vector<double> curvature(grid.size(), a.S);
  const FixedPointReport r = picard_iterate(cfg, std::move(grid), std::move(curvature), {});
  EXPECT_LE(r.iterations, 1);
  EXPECT_EQ(r.sup_v, 0.0);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_TRUE(r.within_ball);
}

TEST(Picard, ConvergesAtDefaultEpsilon) {
  const FixedPointReport& r = report_005();
  EXPECT_LE(r.iterations, 30);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LE(r.mirror_defect, 1e-10);
  EXPECT_EQ(r.within_ball, r.sup_v <= r.r_eps);
  EXPECT_EQ(static_cast<int>(r.sup_history.size()), r.iterations);
  EXPECT_NEAR(r.sup_history.back(), r.sup_v, 1e-12);
  EXPECT_LT(r.contraction, 1.0);
  EXPECT_NEAR(r.c_double_prime, 1.0, 1e-12);
  EXPECT_GT(r.min_abs_eigenvalue, 0.0);
  EXPECT_LE(r.cap_sup_v, r.sup_v);
  const double c = 0.5;
  EXPECT_NEAR(r.r_eps, std::pow(0.05, c - 0.3) / (2.0 * r.c_triple_prime), 1e-12 * r.r_eps);
}

TEST(Picard, DivergesAtLargeEpsilon) {
  EXPECT_EQ(code_of([] { picard_solve(make_config(make_model({}), 0.16)); }), ErrorCode::IterationDiverged);
  PicardOptions few;
  few.max_iter = 2;
  EXPECT_EQ(code_of([&] { picard_solve(make_config(make_model({}), 0.05), few); }),
            ErrorCode::IterationDiverged);
}

TEST(Interpolant, ReproducesPolynomials) {
  const FixedPointReport& r = report_005();
  const GluingConfig cfg = make_config(make_model({}), 0.05);
  const RadialGrid& grid = r.grid;
  const std::vector<int> neck = grid.nodes_in(ChartId::Neck);
  const int center = neck[neck.size() / 2];
  std::vector<double> values(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double t = grid.chart[i] == ChartId::Neck ? grid.coord[i] : 0.0;
    values[i] = 1.0 - 0.5 * t + 0.25 * t * t * t;
  }
  const ScalarField f = radial_interpolant(grid, cfg, values, center, 6);
  const double tq = 0.5 * (grid.coord[center] + grid.coord[center + 1]);
  Coords x = {0.1, 0.2, tq, 1.0, 1.0};
  EXPECT_NEAR(f(ChartId::Neck, x), 1.0 - 0.5 * tq + 0.25 * tq * tq * tq, 1e-12);
}

TEST(Verify, ZeroSolutionLeavesCurvature) {
  FixedPointReport r = report_005();
  const GluingConfig cfg = make_config(make_model({}), 0.05);
  std::fill(r.solution.begin(), r.solution.end(), 0.0);
  const std::vector<int> cells = {3, r.grid.size() / 2, r.grid.size() - 8};
  const CurvatureCheck check = verify_constant_curvature(r, cfg, scheme_with_step(5e-3), cells);
  ASSERT_EQ(check.pre.size(), cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_NEAR(check.post[i], check.pre[i], 10.0 * check.fd_err[i] + 1e-9);
  }
}

TEST(Verify, SolutionReducesDeviation) {
  const FixedPointReport& r = report_005();
  const CurvatureCheck check = verify_constant_curvature(r, make_config(make_model({}), 0.05),
                                                         scheme_with_step(5e-3), {}, 4);
  EXPECT_EQ(static_cast<int>(check.coord.size()), r.grid.size() - 1);
  EXPECT_LT(check.post_dev, check.pre_dev / 10.0);
  EXPECT_LE(check.post_dev, std::max(10.0 * check.fd_floor, check.pre_dev / 50.0));
}

TEST(Sweep, ValidationOrderAndDeterminism) {
  const GluingConfig base = make_config(make_model({}), 0.05);
  EXPECT_EQ(code_of([&] {
              GluingConfig bad = base;
              bad.delta = -0.1;
              convergence_sweep(bad, {0.05});
            }),
            ErrorCode::DeltaOutOfRange);
  EXPECT_EQ(code_of([&] { convergence_sweep(base, {0.5}); }), ErrorCode::InvalidConfig);
  SweepOptions opts;
  opts.verify = false;
  opts.jobs = 1;
  const std::vector<double> eps = {0.04, 0.16, 0.05};
  const auto serial = convergence_sweep(base, eps, opts);
  opts.jobs = 4;
  const auto threaded = convergence_sweep(base, eps, opts);
  ASSERT_EQ(serial.size(), 3u);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(serial[i].eps, eps[i]);
    EXPECT_EQ(serial[i].error, threaded[i].error);
    if (serial[i].ok()) {
      EXPECT_EQ(serial[i].sup_v, threaded[i].sup_v);
      EXPECT_EQ(serial[i].iters, threaded[i].iters);
    }
  }
  EXPECT_FALSE(serial[1].ok());
  EXPECT_TRUE(serial[0].ok());
  EXPECT_TRUE(std::isfinite(sweep_slope(serial)));
}
