#include "mfi/invariance.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace mfi;
using fixtures::v2;

namespace {

Mat I2() { return Mat::Identity(2, 2); }
Mat Z2() { return Mat::Zero(2, 2); }

CuscoMap ball_field(double r) { return CuscoMap::ball_valued(Z2(), Vec::Zero(2), r, Vec::Zero(2)); }

struct System {
  std::string name;
  ClosedSet S;
  MonotoneOperator A;
  CuscoMap F;
};

// Strongly invariant systems.
std::vector<System> invariant_systems() {
  ConvexBody ball = ConvexBody::ball(Vec::Zero(2), 1.0);
  Mat skew(2, 2);
  skew << 0, 1, -1, 0;
  return {
      {"sweeping", ball, MonotoneOperator::normal_cone(ball), ball_field(1.0)},
      {"box-gradient", ConvexBody::box(v2(-1, -1), v2(1, 1)), MonotoneOperator::quadratic(I2(), Vec::Zero(2)),
       ball_field(0.5)},
      {"rotation", ball, MonotoneOperator::linear(skew), CuscoMap::constant(Vec::Zero(2))},
  };
}

// Systems that leave S.
std::vector<System> escaping_systems() {
  return {
      {"drift", ConvexBody::ball(Vec::Zero(2), 0.5), MonotoneOperator::zero(2), CuscoMap::constant(v2(1, 0))},
      {"box-shear", ConvexBody::box(v2(-1, -1), v2(1, 1)),
       MonotoneOperator::quadratic((Mat(2, 2) << 1, 0, 0, 0).finished(), Vec::Zero(2)),
       CuscoMap::polytope_valued({{Z2(), v2(0, 1)}, {Z2(), v2(0, -1)}})},
      {"wide-cone", ConvexBody::ball(Vec::Zero(2), 1.0), MonotoneOperator::normal_cone(ConvexBody::ball(Vec::Zero(2), 2.0)),
       CuscoMap::constant(v2(1, 0))},
  };
}

const std::vector<Criterion> kStrong{Criterion::TangentProjected, Criterion::TangentIntersect,
                                     Criterion::NormalProjected, Criterion::NormalInf,
                                     Criterion::NormalInfTruncated};

SamplerConfig small_sampler(std::size_t points = 40) {
  SamplerConfig c;
  c.boundary_points = points;
  c.hypothesis_points = 60;
  return c;
}

}  // namespace

TEST(ConditionStar, Examples) {
  ConvexBody ball = ConvexBody::ball(Vec::Zero(2), 1.0);
  EXPECT_TRUE(check_condition_star(ball, MonotoneOperator::normal_cone(ball)).ok);
  EXPECT_TRUE(check_condition_star(ball, MonotoneOperator::quadratic(I2(), Vec::Zero(2))).ok);

  // A far ball plus a tiny one at the origin: points of dom A near (0.9, 0)
  // are closer to the far ball, whose projection (1.5, 0) leaves dom A.
  ClosedSet far({ConvexBody::ball(v2(2, 0), 0.5), ConvexBody::ball(Vec::Zero(2), 0.1)});
  auto A = MonotoneOperator::normal_cone(ball);
  auto r = check_condition_star(far, A);
  EXPECT_FALSE(r.ok);
  ASSERT_FALSE(r.witnesses.empty());
  for (const auto& w : r.witnesses) {
    EXPECT_TRUE(A.in_domain(w));
    bool bad = false;
    for (const auto& p : project_set(far, w)) bad = bad || !A.in_domain(p);
    EXPECT_TRUE(bad);
  }
  // The hand-built witness.
  EXPECT_FALSE(A.in_domain(project_set(far, v2(0.9, 0)).front()));
}

TEST(StrongMargin, Examples) {
  ConvexBody ball = ConvexBody::ball(Vec::Zero(2), 1.0);
  auto nc = MonotoneOperator::normal_cone(ball);
  auto inward = CuscoMap::singleton(Mat(-I2()), Vec::Zero(2));
  auto m = strong_margin(ball, nc, inward, v2(1, 0), Criterion::NormalProjected);
  EXPECT_NEAR(m.margin, -1.0, 1e-12);
  EXPECT_TRUE(m.worst_xi.isApprox(v2(1, 0)));
  EXPECT_TRUE(m.worst_v.isApprox(v2(-1, 0)));

  auto push = CuscoMap::constant(v2(1, 0));
  EXPECT_EQ(strong_margin(ball, nc, push, v2(1, 0), Criterion::NormalInf).margin, -kInf);

  ConvexBody half = ConvexBody::ball(Vec::Zero(2), 0.5);
  auto drift = strong_margin(half, MonotoneOperator::zero(2), push, v2(0.5, 0), Criterion::NormalInf);
  EXPECT_NEAR(drift.margin, 1.0, 1e-12);
  EXPECT_TRUE(drift.worst_xi.isApprox(v2(1, 0)));

  EXPECT_THROW(strong_margin(half, MonotoneOperator::zero(2), push, v2(2, 0), Criterion::NormalInf), Error);
  EXPECT_THROW(strong_margin(ball, nc, push, v2(1, 0), Criterion::WeakNormal), Error);
}

TEST(StrongMargin, InteriorPointsAreVacuous) {
  ConvexBody ball = ConvexBody::ball(Vec::Zero(2), 1.0);
  auto m = strong_margin(ball, MonotoneOperator::zero(2), CuscoMap::constant(v2(5, 0)), v2(0.2, 0.1),
                         Criterion::NormalInf);
  EXPECT_TRUE(m.vacuous);
  EXPECT_EQ(m.margin, -kInf);
}

TEST(StrongMargin, TangentVariantsMeasureDistanceToCone) {
  // Drift (1, 1) at the face x1 = 1 of the unit box with A = 0: the tangent
  // cone is {w1 <= 0}, so the distance is 1.
  ConvexBody box = ConvexBody::box(v2(-1, -1), v2(1, 1));
  auto F = CuscoMap::constant(v2(1, 1));
  for (auto c : {Criterion::TangentProjected, Criterion::TangentIntersect})
    EXPECT_NEAR(strong_margin(box, MonotoneOperator::zero(2), F, v2(1, 0), c).margin, 1.0, 1e-9);
  // With A = NC(box) both vanish.
  auto nc = MonotoneOperator::normal_cone(box);
  for (auto c : {Criterion::TangentProjected, Criterion::TangentIntersect})
    EXPECT_NEAR(strong_margin(box, nc, F, v2(1, 0), c).margin, 0.0, 1e-9);
}

TEST(StrongMargin, TangentIntersectUsesWholeValue) {
  // S = Ball((-1, 0), 1) touches the origin, where A = ||.|| has A(0) = the
  // closed unit ball and T_S(0) = {w1 <= 0}. For v = (v1, 2):
  //   dist(v - A(0), T) = max(0, v1 - 1),
  //   dist(v - proj(v), T) = v1 (1 - 1/||v||).
  ClosedSet S(ConvexBody::ball(v2(-1, 0), 1.0));
  auto A = MonotoneOperator::scaled_norm(1.0, 2);
  Vec x = Vec::Zero(2);
  for (double v1 : {0.5, 1.0, 1.5, 2.5}) {
    auto F = CuscoMap::constant(v2(v1, 2));
    EXPECT_NEAR(strong_margin(S, A, F, x, Criterion::TangentIntersect).margin, std::max(0.0, v1 - 1.0), 1e-6) << v1;
    EXPECT_NEAR(strong_margin(S, A, F, x, Criterion::TangentProjected).margin, v1 * (1.0 - 1.0 / std::hypot(v1, 2.0)),
                1e-9)
        << v1;
  }
}

TEST(CertifyStrong, Examples) {
  for (const auto& s : invariant_systems()) {
    auto rep = certify_strong(s.S, s.A, s.F, Criterion::NormalInf);
    EXPECT_EQ(rep.verdict, Verdict::Pass) << s.name;
    if (s.name != "box-gradient") {
      EXPECT_EQ(rep.points.size(), 200u) << s.name;
    }
    EXPECT_FALSE(rep.points.empty());
    EXPECT_TRUE(rep.witnesses.empty());
    EXPECT_NE(std::find(rep.caveats.begin(), rep.caveats.end(), "sampled certificate"), rep.caveats.end());
  }
  auto esc = escaping_systems().front();
  auto rep = certify_strong(esc.S, esc.A, esc.F, Criterion::NormalInf);
  ASSERT_EQ(rep.verdict, Verdict::Fail);
  double best = -kInf;
  Vec at;
  for (const auto& w : rep.witnesses) {
    EXPECT_GT(w.margin, rep.tol);
    if (w.margin > best) best = w.margin, at = w.x;
  }
  EXPECT_NEAR(best, 1.0, 1e-12);
  EXPECT_LE((at - v2(0.5, 0)).norm(), 1e-9);
}

TEST(CertifyStrong, WholePlaneHasNoActiveNormals) {
  Mat G(2, 4);
  G << 1, -1, 0, 0, 0, 0, 1, -1;
  ClosedSet plane(ConvexBody::cone(G));
  auto rep = certify_strong(plane, MonotoneOperator::zero(2), CuscoMap::constant(v2(3, 0)), Criterion::NormalInf,
                            small_sampler());
  EXPECT_EQ(rep.verdict, Verdict::Pass);
  EXPECT_NE(std::find(rep.caveats.begin(), rep.caveats.end(), "no active normals"), rep.caveats.end());
}

TEST(CertifyStrong, FailedConditionIsInconclusive) {
  ClosedSet far({ConvexBody::ball(v2(2, 0), 0.5), ConvexBody::ball(Vec::Zero(2), 0.1)});
  auto A = MonotoneOperator::normal_cone(ConvexBody::ball(Vec::Zero(2), 1.0));
  auto rep = certify_strong(far, A, ball_field(1.0), Criterion::NormalInf, small_sampler());
  EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
  EXPECT_FALSE(rep.reason.empty());
  ASSERT_FALSE(rep.hypothesis_checks.empty());
  EXPECT_FALSE(rep.hypothesis_checks.front().ok);
}

TEST(CertifyStrong, ReproducibleForASeed) {
  auto s = invariant_systems()[1];
  SamplerConfig cfg = small_sampler();
  cfg.seed = 9;
  auto a = certify_strong(s.S, s.A, s.F, Criterion::NormalProjected, cfg);
  auto b = certify_strong(s.S, s.A, s.F, Criterion::NormalProjected, cfg);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].x, b.points[i].x);
    EXPECT_EQ(a.points[i].margin, b.points[i].margin);
  }
}

TEST(WeakMargin, Examples) {
  ClosedSet origin(ConvexBody::point(Vec::Zero(2)));
  auto zero = MonotoneOperator::zero(2);
  auto F = ball_field(1.0);
  auto w = weak_margin(origin, zero, F, Vec::Zero(2), 0.0);
  EXPECT_NEAR(w.margin, -1.0, 1e-12);
  EXPECT_LE(weak_margin(origin, zero, F, Vec::Zero(2), 0.0, Criterion::WeakTangent).margin, 1e-9);
  EXPECT_NEAR(strong_margin(origin, zero, F, Vec::Zero(2), Criterion::NormalInf).margin, 1.0, 1e-12);

  ConvexBody ball = ConvexBody::ball(Vec::Zero(2), 1.0);
  auto nc = MonotoneOperator::normal_cone(ball);
  // xi = (1, 0): inf_v <xi, v> = -1, sup over A(x) cut to radius 1 is 1.
  auto b = weak_margin(ball, nc, F, v2(1, 0), 0.0);
  EXPECT_NEAR(b.margin, -2.0, 1e-9);
  EXPECT_LE(b.margin, 0.0);
}

TEST(WeakMargin, BoundTooSmall) {
  // A(x) = {(3, 0)} misses the ball of radius 0 + ||F||.
  ConvexBody ball = ConvexBody::ball(Vec::Zero(2), 1.0);
  auto A = MonotoneOperator::quadratic(Z2(), v2(3, 0));
  try {
    weak_margin(ball, A, CuscoMap::constant(Vec::Zero(2)), v2(1, 0), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bound too small"), std::string::npos);
  }
}

TEST(CertifyWeak, SeparatesFromStrong) {
  ClosedSet origin(ConvexBody::point(Vec::Zero(2)));
  auto zero = MonotoneOperator::zero(2);
  auto F = ball_field(1.0);
  auto weak = certify_weak(origin, zero, F, Criterion::WeakNormal, small_sampler());
  EXPECT_EQ(weak.verdict, Verdict::Pass);
  auto strong = certify_strong(origin, zero, F, Criterion::NormalInf, small_sampler());
  EXPECT_EQ(strong.verdict, Verdict::Fail);
}

TEST(CertifyWeak, RequiresSetInDomain) {
  auto A = MonotoneOperator::normal_cone(ConvexBody::ball(Vec::Zero(2), 0.5));
  auto rep = certify_weak(ConvexBody::ball(Vec::Zero(2), 1.0), A, ball_field(1.0), Criterion::WeakNormal,
                          small_sampler());
  EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
}

TEST(WeakHorizon, Examples) {
  EXPECT_DOUBLE_EQ(weak_horizon(3, 1, 2), 1.0 / 3.0);
  EXPECT_EQ(weak_horizon(3, 0, 0), kInf);
  EXPECT_NEAR(weak_horizon(0.3, 0, 1), 0.1, 1e-16);
  EXPECT_THROW(weak_horizon(0, 1, 1), Error);
}

TEST(Falsify, Examples) {
  IntegratorConfig cfg;
  cfg.h = 1e-3;
  cfg.T = 1.0;
  auto drift = escaping_systems().front();
  auto ev = falsify_by_simulation(drift.S, drift.A, drift.F, v2(0.5, 0), cfg);
  EXPECT_TRUE(ev.strong_falsified);
  ASSERT_EQ(ev.fixed_runs.size(), 1u);
  // Linear motion: d_S(t) = t crosses 10 h at t = 0.01, up to one step.
  EXPECT_NEAR(ev.fixed_runs[0].exit_time, 0.01, cfg.h + 1e-12);
  EXPECT_NEAR(ev.fixed_runs[0].max_distance, 1.0, 1e-9);

  auto sweep = invariant_systems().front();
  for (Vec x0 : {v2(1, 0), v2(0, -1), Vec(v2(1, 1) / std::sqrt(2.0))}) {
    auto e = falsify_by_simulation(sweep.S, sweep.A, sweep.F, x0, cfg);
    EXPECT_FALSE(e.strong_falsified);
    for (const auto& r : e.fixed_runs) EXPECT_LE(r.max_distance, 2 * cfg.h);
    EXPECT_TRUE(e.weak_supported);
  }

  ClosedSet origin(ConvexBody::point(Vec::Zero(2)));
  auto e = falsify_by_simulation(origin, MonotoneOperator::zero(2), ball_field(1.0), Vec::Zero(2), cfg);
  EXPECT_TRUE(e.strong_falsified);
  EXPECT_TRUE(e.weak_supported);
  ASSERT_TRUE(e.steered_run);
  EXPECT_EQ(e.steered_run->max_distance, 0.0);
  bool exits_right = false;
  for (const auto& r : e.fixed_runs)
    if (r.v0.isApprox(v2(1, 0)) && r.max_distance > e.threshold) exits_right = true;
  EXPECT_TRUE(exits_right);
}

TEST(Properties, CriterionEquivalence) {
  std::vector<System> all = invariant_systems();
  for (auto& s : escaping_systems()) all.push_back(s);
  for (const auto& s : all) {
    for (const auto& x : boundary_samples(s.S, 40, 3)) {
      if (!s.A.in_domain(x)) continue;
      std::vector<bool> pass;
      for (auto c : kStrong) {
        double tol = default_tolerance(s.S, s.A, c);
        pass.push_back(strong_margin(s.S, s.A, s.F, x, c).margin <= tol);
      }
      for (std::size_t i = 1; i < pass.size(); ++i)
        EXPECT_EQ(pass[i], pass[0]) << s.name << " " << to_string(kStrong[i]) << " at " << x.transpose();
    }
  }
}

TEST(Properties, TruncationRaisesMargin) {
  std::vector<System> all = invariant_systems();
  for (auto& s : escaping_systems()) all.push_back(s);
  for (const auto& s : all)
    for (const auto& x : boundary_samples(s.S, 40, 5)) {
      if (!s.A.in_domain(x)) continue;
      double inf = strong_margin(s.S, s.A, s.F, x, Criterion::NormalInf).margin;
      double cut = strong_margin(s.S, s.A, s.F, x, Criterion::NormalInfTruncated).margin;
      EXPECT_GE(cut, inf - 1e-12) << s.name;
    }
}

TEST(Properties, CertifiedSystemsSurviveSimulation) {
  for (const auto& s : invariant_systems()) {
    auto rep = certify_strong(s.S, s.A, s.F, Criterion::NormalInf, small_sampler());
    ASSERT_EQ(rep.verdict, Verdict::Pass) << s.name;
    for (double h : {1e-2, 1e-3}) {
      IntegratorConfig cfg;
      cfg.h = h;
      cfg.T = 0.5;
      for (const auto& x0 : boundary_samples(s.S, 6, 11)) {
        auto ev = falsify_by_simulation(s.S, s.A, s.F, x0, cfg);
        EXPECT_FALSE(ev.strong_falsified) << s.name << " h=" << h;
      }
    }
  }
}

TEST(Properties, StrongImpliesWeak) {
  for (const auto& s : invariant_systems()) {
    for (const auto& x : boundary_samples(s.S, 30, 13)) {
      double m = local_min_section_bound(s.A, &s.S, x, 0.05, 64);
      for (auto c : {Criterion::WeakNormal, Criterion::WeakTangent})
        EXPECT_LE(weak_margin(s.S, s.A, s.F, x, m, c).margin, default_tolerance(s.S, s.A, c)) << s.name;
    }
  }
}

TEST(Properties, DistanceDecay) {
  // Systems whose operator is defined off S. F has Lipschitz constant L.
  auto systems = invariant_systems();
  for (std::size_t k = 1; k < systems.size(); ++k) {
    const auto& s = systems[k];
    const double L = s.F.lipschitz();
    for (Vec x0 : {v2(1.2, 0.1), v2(-0.8, 0.9), v2(0.3, -1.15)}) {
      IntegratorConfig cfg;
      cfg.h = 1e-3;
      cfg.T = 2.0;
      auto tr = integrate(s.A, s.F, cfg, x0);
      ASSERT_TRUE(tr.ok());
      double d0 = distance(s.S, x0);
      for (std::size_t i = 0; i < tr.states.size(); ++i) {
        double d = distance(s.S, tr.states[i]);
        EXPECT_LE(d * d, d0 * d0 * std::exp(2 * L * tr.times[i]) + 10 * cfg.h) << s.name;
      }
    }
  }
}
