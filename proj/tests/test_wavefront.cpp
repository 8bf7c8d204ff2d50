#include "coagwave/wavefront.hpp"

#include <gtest/gtest.h>

using namespace coagwave;

namespace {

// T0 * ramp(x0 + c t - x): a translating front with a linear flank of `width`
SpaceTimeField synthetic_front(double c, double x0, double width, const Grid1D& g, double t_end, double every) {
  const CoagParams p;
  SpaceTimeField f;
  f.model = ModelKind::one_eq();
  f.grid = g;
  f.scale = p.T0;
  for (double t = 0; t <= t_end + 1e-12; t += every) {
    std::vector<double> v(g.nodes);
    for (std::size_t i = 0; i < g.nodes; ++i)
      v[i] = p.T0 * std::clamp((x0 + c * t - g.x(i)) / width + 0.5, 0.0, 1.0);
    f.times.push_back(t);
    f.snapshots.push_back(std::move(v));
  }
  return f;
}

// The default reduced run, shared by several tests.
const SpaceTimeField& default_run() {
  static const SpaceTimeField f = [] {
    const CoagParams p;
    const auto k = ModelKind::reduced6();
    const Grid1D g(5.0, 1001);
    return simulate(k, p, g, default_ic(k, p, g), 40.0, 1.0);
  }();
  return f;
}

}  // namespace

TEST(Front, SyntheticTranslationSpeedIsExact) {
  const Grid1D g(5.0, 1001);
  const auto f = synthetic_front(0.05, 0.5, 0.05, g, 40, 1);
  const auto m = measure_speed(f);
  EXPECT_NEAR(m.speed, 0.05, 1e-9);
  EXPECT_TRUE(m.converged);
  EXPECT_LT(m.residual, 1e-6);
  const auto d = shape_drift(f);
  EXPECT_LT(d.drift, 1e-9);
  EXPECT_TRUE(d.monotone);
}

TEST(Front, PositionInterpolatesBetweenNodes) {
  const Grid1D g(1.0, 11);
  std::vector<double> v{10, 10, 10, 8, 4, 0, 0, 0, 0, 0, 0};
  EXPECT_NEAR(front_position(v, g, 6.0), 0.35, 1e-14);
}

TEST(Front, NoOrSeveralCrossingsThrow) {
  const Grid1D g(1.0, 11);
  std::vector<double> flat(11, 1.0), twin{0, 5, 0, 0, 5, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(front_position(flat, g, 3.0), NoFrontError);
  try {
    front_position(twin, g, 3.0);
    FAIL();
  } catch (const NoFrontError& e) {
    EXPECT_EQ(e.crossings, 4u);
  }
  const auto f = synthetic_front(0.0, -1.0, 0.05, Grid1D(5, 101), 20, 1);  // never enters the domain
  EXPECT_THROW(measure_speed(f), NoFrontError);
  EXPECT_THROW(measure_speed(synthetic_front(0.05, 0.5, 0.05, Grid1D(5, 101), 5, 1)), std::invalid_argument);
}

TEST(Front, ReducedModelDefaultRun) {
  const auto& f = default_run();
  const auto m = measure_speed(f);
  EXPECT_TRUE(m.converged) << m.note;
  EXPECT_NEAR(m.speed, 0.05, 0.002);
  const auto d = shape_drift(f);
  EXPECT_LT(d.drift, 0.01);
  EXPECT_TRUE(d.monotone);
}

TEST(Front, SpeedDoesNotDependOnThreshold) {
  const auto& f = default_run();
  const double c = measure_speed(f).speed;
  for (double frac : {0.25, 0.75}) EXPECT_NEAR(measure_speed(f, frac * f.scale).speed, c, 0.01 * c) << frac;
}

TEST(Front, ConvergedProfilePassesChecksAndBracketsSpeed) {
  const CoagParams p;
  const auto& f = default_run();
  const double c = measure_speed(f).speed;
  const auto t = TestProfile::from_field(f, f.size() - 1);
  const auto up = equilibrium_state(ModelKind::reduced6(), *classify(p).upper_root(), p);
  const auto chk = check_profile(t, up, p.T0);
  EXPECT_TRUE(chk.ok()) << chk.message;
  const auto b = minimax_bracket(t, p);
  EXPECT_LE(b.lower, c);
  EXPECT_GE(b.upper, c);
  EXPECT_LT(b.upper - b.lower, 0.1 * c);
}

TEST(Front, AnyMonotoneTestProfileBracketsSpeed) {
  const CoagParams p;
  const double c = measure_speed(default_run()).speed;
  const auto up = equilibrium_state(ModelKind::reduced6(), *classify(p).upper_root(), p);
  const Grid1D g(5.0, 1001);
  for (double width : {0.02, 0.1, 0.4}) {
    const auto t = TestProfile::shifted_tanh(ModelKind::reduced6(), up, g, 2.5, width);
    EXPECT_TRUE(check_profile(t, up, p.T0).ok());
    const auto b = minimax_bracket(t, p);
    EXPECT_LE(b.lower, c) << width;
    EXPECT_GE(b.upper, c) << width;
  }
}

TEST(Front, ProfileCheckFlagsBadProfiles) {
  const CoagParams p;
  const auto up = equilibrium_state(ModelKind::one_eq(), *classify(p).upper_root(), p);
  const Grid1D g(1.0, 101);
  auto t = TestProfile::shifted_tanh(ModelKind::one_eq(), up, g, 0.5, 0.05);
  t.rho[0][70] += 10.0;
  EXPECT_FALSE(check_profile(t, up, p.T0).monotone);
  auto u = TestProfile::shifted_tanh(ModelKind::one_eq(), up, g, 0.98, 0.05);
  EXPECT_FALSE(check_profile(u, up, p.T0).limits);
  TestProfile flat{g, ModelKind::one_eq(), {std::vector<double>(g.nodes, 1.0)}};
  EXPECT_THROW(minimax_bracket(flat, p), UnusableProfileError);
}

TEST(Front, SpeedScalesWithSqrtD) {
  CoagParams p;
  const auto a = run_auto(ModelKind::one_eq(), p);
  p.D *= 4;
  const auto b = run_auto(ModelKind::one_eq(), p);
  ASSERT_TRUE(a.ignited && b.ignited) << a.error << b.error;
  EXPECT_NEAR(b.speed.speed / a.speed.speed, 2.0, 0.1);
}

TEST(Front, AutoDomainTracksTheFront) {
  const auto o = run_auto(ModelKind::scalar(3, 10, 0.01), [] {
    CoagParams p;
    p.D = 2.0;
    return p;
  }());
  ASSERT_TRUE(o.ignited) << o.error;
  EXPECT_TRUE(o.speed.converged);
  EXPECT_NEAR(o.speed.speed, 2.0582, 0.02 * 2.0582);  // shooting value
}

TEST(Front, SlowVariableScaling) {
  const CoagParams p;
  const auto q = scale_slow_variable(p, 0.25);
  EXPECT_DOUBLE_EQ(q.k11, 4 * p.k11);
  EXPECT_DOUBLE_EQ(q.h11, 4 * p.h11);
  EXPECT_DOUBLE_EQ(q.k11 / q.h11, p.k11 / p.h11);
  EXPECT_THROW(scale_slow_variable(p, 0.0), std::invalid_argument);
  EXPECT_THROW(scale_slow_variable(p, 2.0), std::invalid_argument);
}
