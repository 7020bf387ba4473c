#include "polyneck/error.hpp"
#include "polyneck/geometry.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using namespace polyneck;

namespace {

constexpr double kPi = std::numbers::pi;

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

// Independent S^3(rho) normal block in Cartesian normal coordinates:
// radial part plus (rho sin(r/rho) / r)^2 times the transverse projector.
MetricMatrix sphere_normal_oracle(const std::vector<double>& x, double rho) {
  const int n = static_cast<int>(x.size());
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  const double r = std::sqrt(r2);
  const double f = rho * std::sin(r / rho) / r;
  MetricMatrix g(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double radial = x[a] * x[b] / r2;
      g(a, b) = radial + f * f * ((a == b ? 1.0 : 0.0) - radial);
    }
  }
  return g;
}

}  // namespace

TEST(MakeModel, ModelA) {
  const ModelGeometry a = make_model({});
  EXPECT_EQ(a.m, 5);
  EXPECT_EQ(a.k, 2);
  EXPECT_EQ(a.n, 3);
  EXPECT_DOUBLE_EQ(a.S, 6.0);
  EXPECT_NEAR(a.r_max(), kPi, 1e-15);
}

TEST(MakeModel, ModelB) {
  const ModelGeometry b = make_model({.name = "sphere2_x_sphere3"});
  EXPECT_EQ(b.m, 5);
  EXPECT_EQ(b.k, 2);
  EXPECT_EQ(b.n, 3);
  EXPECT_NEAR(b.S, 2.0 / 2.0 + 6.0 / 1.0, 1e-14);
}

TEST(MakeModel, RadiiEnterCurvature) {
  const ModelGeometry b = make_model({.name = "sphere2_x_sphere3", .sphere2_radius_sq = 4.0, .sphere3_radius = 2.0});
  EXPECT_NEAR(b.S, 2.0 / 4.0 + 6.0 / 4.0, 1e-14);
  EXPECT_NEAR(b.r_max(), 2.0 * kPi, 1e-14);
}

TEST(MakeModel, Errors) {
  EXPECT_EQ(code_of([] { make_model({.name = "torus2_x_sphere2"}); }), ErrorCode::CodimensionTooSmall);
  EXPECT_EQ(code_of([] { make_model({.name = "klein_bottle"}); }), ErrorCode::UnknownModel);
  EXPECT_EQ(code_of([] { make_model({.sphere3_radius = -1.0}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] {
              make_product_model("flat", {Factor{FactorKind::Torus, 2, 1.0}},
                                 Factor{FactorKind::Euclidean, 3, 1.0});
            }),
            ErrorCode::ZeroScalarCurvature);
}

TEST(FermiMetric, PolarFormAtEquator) {
  const ModelGeometry a = make_model({});
  const MetricField f = fermi_metric(a, 1);
  const double th = 1.1;
  const MetricMatrix g = f.at({ChartId::Cap1, {0.3, 2.0, kPi / 2, th, 0.7}});
  EXPECT_NEAR(g(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(g(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(g(2, 2), 1.0, 1e-15);
  EXPECT_NEAR(g(3, 3), 1.0, 1e-15);
  EXPECT_NEAR(g(4, 4), std::sin(th) * std::sin(th), 1e-15);
  for (int a1 = 0; a1 < 5; ++a1) {
    for (int b1 = 0; b1 < 5; ++b1) {
      if (a1 != b1) EXPECT_EQ(g(a1, b1), 0.0);
    }
  }
}

TEST(FermiMetric, CrossBlockVanishesExactly) {
  for (const char* name : {"torus2_x_sphere3", "sphere2_x_sphere3"}) {
    const ModelGeometry model = make_model({.name = name});
    const MetricField f = fermi_metric(model, 2);
    for (double r : {0.2, 1.0, 2.5}) {
      const MetricMatrix g = f.at({ChartId::Cap2, {1.2, 0.4, r, 0.9, 2.0}});
      for (int i = 0; i < model.k; ++i) {
        for (int a1 = model.k; a1 < model.m; ++a1) EXPECT_EQ(g(i, a1), 0.0);
      }
    }
  }
}

TEST(FermiMetric, CartesianNormalBlockMatchesOracle) {
  const ModelGeometry a = make_model({.sphere3_radius = 1.3});
  const MetricField f = fermi_metric(a, 1);
  const std::vector<double> x = {0.3, -0.5, 0.8};
  const MetricMatrix g = f.at({ChartId::RawFermi, {0.1, 0.2, x[0], x[1], x[2]}});
  const MetricMatrix oracle = sphere_normal_oracle(x, 1.3);
  EXPECT_LE((g.bottomRightCorner(3, 3) - oracle).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(FermiMetric, NormalBlockIsEuclideanToSecondOrder) {
  const ModelGeometry a = make_model({});
  const MetricField f = fermi_metric(a, 1);
  auto defect = [&](double s) {
    const MetricMatrix g = f.at({ChartId::RawFermi, {0.0, 0.0, 0.6 * s, -0.64 * s, 0.48 * s}});
    return (g.bottomRightCorner(3, 3) - MetricMatrix::Identity(3, 3)).cwiseAbs().maxCoeff();
  };
  const double d1 = defect(0.02);
  const double d2 = defect(0.01);
  EXPECT_LT(d1, 1e-3);
  EXPECT_NEAR(d1 / d2, 4.0, 0.01);
}

TEST(FermiMetric, OutOfChart) {
  const ModelGeometry a = make_model({});
  const MetricField f = fermi_metric(a, 1);
  EXPECT_EQ(code_of([&] { f.at({ChartId::Cap1, {0.0, 0.0, 3.3, 1.0, 1.0}}); }), ErrorCode::OutOfChart);
  EXPECT_EQ(code_of([&] { f.at({ChartId::RawFermi, {0.0, 0.0, 3.2, 0.0, 0.0}}); }), ErrorCode::OutOfChart);
}

TEST(FermiMetric, TransitionsAgree) {
  const ModelGeometry b = make_model({.name = "sphere2_x_sphere3"});
  const MetricField f = fermi_metric(b, 1);
  const ChartPoint p{ChartId::Cap1, {1.0, 0.5, 0.8, 1.2, 2.1}};
  const MetricMatrix direct = f.at(p);
  const MetricMatrix pulled = f.pullback(p, ChartId::RawFermi);
  EXPECT_LE((direct - pulled).cwiseAbs().maxCoeff(), 1e-10 * direct.cwiseAbs().maxCoeff());
  const ChartPoint back = f.transform(f.transform(p, ChartId::RawFermi), ChartId::Cap1);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(back.x[i], p.x[i], 1e-12);
}

TEST(FermiMetric, PositiveDefiniteOnChart) {
  const ModelGeometry a = make_model({});
  const MetricField f = fermi_metric(a, 1);
  for (double r = 0.01; r < kPi - 0.01; r += 0.3) {
    const MetricMatrix g = f.at({ChartId::Cap1, {0.0, 0.0, r, 0.5, 0.5}});
    Eigen::LLT<MetricMatrix> llt(g);
    EXPECT_EQ(llt.info(), Eigen::Success);
    EXPECT_EQ((g - g.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Spectrum, TorusEnumeration) {
  const ModelGeometry a = make_model({});
  // Independent enumeration of |k|^2 on the square torus of side 2 pi.
  std::set<double> oracle;
  for (int i = -5; i <= 5; ++i) {
    for (int j = -5; j <= 5; ++j) {
      if (i * i + j * j <= 10) oracle.insert(i * i + j * j);
    }
  }
  std::set<double> torus_only;
  for (double v : laplace_spectrum(a, 10.0)) {
    torus_only.insert(v);
  }
  for (double v : oracle) EXPECT_TRUE(torus_only.count(v)) << v;
}

TEST(Spectrum, SphereSymmetricClass) {
  const ModelGeometry a = make_model({});
  const std::vector<double> sym = laplace_spectrum(a, 20.0, SpectrumClass::Symmetric);
  const std::vector<double> expect = {0.0, 3.0, 8.0, 15.0};
  ASSERT_EQ(sym.size(), expect.size());
  for (std::size_t i = 0; i < sym.size(); ++i) EXPECT_NEAR(sym[i], expect[i], 1e-12);
}

TEST(Injectivity, ModelAGaps) {
  const ModelGeometry a = make_model({});
  EXPECT_NEAR(injectivity_gap(a, 30.0), 0.5, 1e-12);
  EXPECT_NEAR(injectivity_gap(a, 30.0, SpectrumClass::Symmetric), 1.5, 1e-12);
}

TEST(Injectivity, ModelBGaps) {
  // S^2(sqrt 2): l(l+1)/2 = 0, 1, 3, ...; S^3: 0, 3, 8; shift 7/4.
  const ModelGeometry b = make_model({.name = "sphere2_x_sphere3"});
  EXPECT_NEAR(injectivity_gap(b, 30.0), 0.75, 1e-12);
  EXPECT_NEAR(injectivity_gap(b, 30.0, SpectrumClass::Symmetric), 1.25, 1e-12);
}

TEST(Injectivity, CutoffMustExceedShift) {
  const ModelGeometry a = make_model({});
  EXPECT_EQ(code_of([&] { injectivity_gap(a, 1.0); }), ErrorCode::InvalidConfig);
}
