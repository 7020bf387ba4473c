#include "polyneck/error.hpp"
#include "polyneck/gluing.hpp"

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

// Test-side cutoffs, written from their definitions.
double E(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double B(double s, double w = 1.0) { return E(s) / (E(s) + E(w - s)); }
double chi_oracle(double t) { return B(0.5 * (1.0 - t)); }
double eta_oracle(double t, double eps) { return B(-std::log(eps) - t); }
double u_oracle(double t, double eps) {
  return std::sqrt(eps) * (eta_oracle(t, eps) * std::exp(-0.5 * t) + eta_oracle(-t, eps) * std::exp(0.5 * t));
}

GluingConfig model_a(double eps) { return make_config(make_model({}), eps); }

}  // namespace

TEST(Cutoffs, ChiProperties) {
  EXPECT_EQ(chi(-1.0, 0.05), 1.0);
  EXPECT_EQ(chi(-2.5, 0.05), 1.0);
  EXPECT_EQ(chi(1.0, 0.05), 0.0);
  for (double t : {-0.9, -0.3, 0.0, 0.4, 0.8}) {
    EXPECT_NEAR(chi(t, 0.05), chi_oracle(t), 1e-15);
    EXPECT_NEAR(chi(t, 0.05) + chi(-t, 0.05), 1.0, 1e-15);
  }
}

TEST(Cutoffs, EtaProperties) {
  const double eps = 0.05;
  const double L = -std::log(eps);
  EXPECT_EQ(eta(L - 1.0, eps), 1.0);
  EXPECT_EQ(eta(0.0, eps), 1.0);
  EXPECT_EQ(eta(L, eps), 0.0);
  for (double t : {L - 0.9, L - 0.5, L - 0.1}) EXPECT_NEAR(eta(t, eps), eta_oracle(t, eps), 1e-15);
  EXPECT_EQ(code_of([&] { eta(L + 0.1, eps); }), ErrorCode::OutOfNeck);
  EXPECT_EQ(code_of([&] { chi(-L - 0.1, eps); }), ErrorCode::OutOfNeck);
}

TEST(Cutoffs, SmoothStepIsSmoothAndMonotone) {
  double prev = 0.0;
  for (double s = 0.0; s <= 1.0; s += 0.01) {
    const double v = smooth_step(s, 1.0);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  EXPECT_NEAR(smooth_step(0.5, 1.0), 0.5, 1e-15);
}

TEST(ConformalFactor, PlateauFormula) {
  const double eps = 0.05;
  const double L = -std::log(eps);
  for (double t : {-(L - 1.0), -1.0, 0.0, 0.7, L - 1.0}) {
    EXPECT_NEAR(u_eps(t, eps, 3), 2.0 * std::sqrt(eps) * std::cosh(0.5 * t), 1e-14);
  }
  for (double t : {-L, -(L - 0.5), L - 0.3, L}) EXPECT_NEAR(u_eps(t, eps, 3), u_oracle(t, eps), 1e-14);
  // At the neck ends u equals 1, matching the caps.
  EXPECT_NEAR(u_eps(L, eps, 3), 1.0, 1e-14);
  EXPECT_NEAR(u_profile(1, 0.3, eps, 3), std::sqrt(eps) * std::exp(-0.15), 1e-15);
  EXPECT_NEAR(u_profile(2, 0.3, eps, 5), std::pow(eps, 1.5) * std::exp(0.45), 1e-15);
}

TEST(NeckAtlas, CoordinateChanges) {
  const NeckAtlas atlas{0.05, 3};
  EXPECT_NEAR(atlas.radius(1, 0.4), 0.05 * std::exp(-0.4), 1e-16);
  EXPECT_NEAR(atlas.radius(2, 0.4), 0.05 * std::exp(0.4), 1e-16);
  EXPECT_NEAR(atlas.t_from_radius(1, atlas.radius(1, -1.3)), -1.3, 1e-14);
  EXPECT_NEAR(atlas.t_from_radius(2, atlas.radius(2, 2.1)), 2.1, 1e-14);
  const std::vector<double> theta = {1.0, 0.5};
  const Coords x = atlas.to_normal(1, 0.2, theta);
  EXPECT_NEAR(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]), atlas.radius(1, 0.2), 1e-16);
  EXPECT_NEAR(atlas.t_from_normal(1, x), 0.2, 1e-13);
  EXPECT_TRUE(atlas.in_tube(0.5, 1.0));
  EXPECT_FALSE(atlas.in_tube(1.5, 1.0));
}

TEST(GluedMetric, NeckMatchesClosedForm) {
  const double eps = 0.05;
  const GluingConfig cfg = model_a(eps);
  const MetricField g = glued_metric(cfg);
  for (double t : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
    const double th = 1.1;
    const MetricMatrix m = g.at({ChartId::Neck, {0.2, 0.4, t, th, 0.3}});
    const double u4 = std::pow(u_oracle(t, eps), 4);
    const double r1 = eps * std::exp(-t);
    const double r2 = eps * std::exp(t);
    const double c = chi_oracle(t);
    const double ang = c * std::pow(std::sin(r1) / r1, 2) + (1.0 - c) * std::pow(std::sin(r2) / r2, 2);
    EXPECT_NEAR(m(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(m(1, 1), 1.0, 1e-14);
    EXPECT_NEAR(m(2, 2), u4, 1e-14 * u4);
    EXPECT_NEAR(m(3, 3), u4 * ang, 1e-13 * u4);
    EXPECT_NEAR(m(4, 4), u4 * ang * std::sin(th) * std::sin(th), 1e-13 * u4);
    EXPECT_EQ(m(0, 2), 0.0);
    EXPECT_EQ(m(2, 3), 0.0);
  }
}

TEST(GluedMetric, SeamsAgree) {
  const GluingConfig cfg = make_config(make_model({.name = "sphere2_x_sphere3"}), 0.04);
  const MetricField g = glued_metric(cfg);
  for (ChartId cap : {ChartId::Cap1, ChartId::Cap2}) {
    const ChartPoint p{cap, {1.0, 0.3, 1.0, 0.8, 1.9}};
    const MetricMatrix direct = g.at(p);
    const MetricMatrix via_neck = g.pullback(p, ChartId::Neck);
    EXPECT_LE((direct - via_neck).cwiseAbs().maxCoeff(), 1e-10 * direct.cwiseAbs().maxCoeff());
  }
  const ChartPoint q{ChartId::Neck, {1.0, 0.3, 0.4, 0.8, 1.9}};
  const ChartPoint q1 = g.transform(q, ChartId::Cap1);
  EXPECT_NEAR(q1.x[2], 0.04 * std::exp(-0.4), 1e-16);
}

TEST(GluedMetric, PositiveDefiniteAcrossNeck) {
  const GluingConfig cfg = model_a(0.02);
  const MetricField g = glued_metric(cfg);
  const double L = cfg.half_length();
  for (double t = -L; t <= L; t += 0.37) {
    Eigen::LLT<MetricMatrix> llt(g.at({ChartId::Neck, {0.0, 0.0, t, 1.0, 1.0}}));
    EXPECT_EQ(llt.info(), Eigen::Success) << t;
  }
  EXPECT_EQ(code_of([&] { g.at({ChartId::Neck, {0.0, 0.0, L + 0.1, 1.0, 1.0}}); }), ErrorCode::OutOfChart);
  EXPECT_EQ(code_of([&] { g.at({ChartId::Cap1, {0.0, 0.0, 0.5, 1.0, 1.0}}); }), ErrorCode::OutOfChart);
}

TEST(GluingConfig, Validation) {
  const ModelGeometry a = make_model({});
  EXPECT_EQ(code_of([&] { make_config(a, 0.5); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { make_config(a, 0.0); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { make_config(a, 0.05, 0.6); }), ErrorCode::DeltaOutOfRange);
  EXPECT_EQ(code_of([&] { make_config(a, 0.05, 0.3, -1.0); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { make_config(a, 0.05, 0.3, 3.0, 1.5); }), ErrorCode::InvalidConfig);
  GluingConfig mixed = make_config(a, 0.05);
  mixed.model_2 = make_model({.name = "sphere2_x_sphere3"});
  EXPECT_EQ(code_of([&] { mixed.validate(); }), ErrorCode::IncompatibleModels);
  mixed.model_2 = make_model({.name = "sphere5"});
  EXPECT_EQ(code_of([&] { mixed.validate(); }), ErrorCode::IncompatibleModels);
  EXPECT_NEAR(make_config(a, 0.05).half_length(), -std::log(0.05), 1e-15);
}

TEST(PsiWeight, NeckCapsAndBand) {
  const GluingConfig cfg = model_a(0.02);
  const double eps = cfg.epsilon;
  const double L = cfg.half_length();
  auto psi = [&](double t) { return psi_weight({ChartId::Neck, {0.0, 0.0, t, 1.0, 1.0}}, cfg); };
  EXPECT_NEAR(psi(0.0), eps, 1e-16);
  EXPECT_NEAR(psi(0.5), eps * std::cosh(0.5), 1e-16);
  EXPECT_NEAR(psi(L - cfg.alpha), eps * std::cosh(L - cfg.alpha), 1e-14);
  EXPECT_NEAR(psi(L), 1.0, 1e-15);
  EXPECT_NEAR(psi(-L), 1.0, 1e-15);
  EXPECT_EQ(psi_weight({ChartId::Cap2, {0.0, 0.0, 2.0, 1.0, 1.0}}, cfg), 1.0);
  double prev = 0.0;
  for (double t = 0.0; t <= L; t += 0.05) {
    EXPECT_GE(psi(t), prev);
    EXPECT_LE(psi(t), 1.0 + 1e-15);
    prev = psi(t);
  }
}
