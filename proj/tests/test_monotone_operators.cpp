#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace mfi;
using fixtures::random_vec;
using fixtures::v2;

namespace {

Vec domain_point(const MonotoneOperator& A, std::mt19937_64& rng) {
  Vec x = random_vec(rng, A.dim(), 2.0);
  if (auto d = A.domain()) x = project(*d, x);
  return x;
}

}  // namespace

TEST(Evaluate, Examples) {
  auto nc = MonotoneOperator::normal_cone(ConvexBody::ball(v2(0, 0), 1));
  auto val = evaluate(nc, v2(1, 0));
  ASSERT_FALSE(val.empty());
  EXPECT_FALSE(val.bounded);
  EXPECT_NEAR(support(val.get(), v2(0, 1)), 0.0, 1e-12);
  EXPECT_EQ(support(val.get(), v2(1, 0)), kInf);
  EXPECT_TRUE(evaluate(nc, v2(2, 0)).empty());

  auto q = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_TRUE(min_norm_point(evaluate(q, v2(2, 3)).get()).isApprox(v2(2, 3)));
}

TEST(Construction, RejectsNonMonotoneData) {
  Mat Q(2, 2);
  Q << 1, 0, 0, -1;
  try {
    MonotoneOperator::quadratic(Q, Vec::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("not PSD"), std::string::npos);
  }
  Mat asym(2, 2);
  asym << 1, 2, 0, 1;
  EXPECT_THROW(MonotoneOperator::quadratic(asym, Vec::Zero(2)), Error);
  EXPECT_THROW(MonotoneOperator::linear(Mat(-Mat::Identity(2, 2))), Error);
  EXPECT_THROW(MonotoneOperator::scaled_norm(0.0, 2), Error);
}

TEST(Resolvent, Examples) {
  auto nc = MonotoneOperator::normal_cone(ConvexBody::ball(v2(0, 0), 1));
  EXPECT_TRUE(resolvent(nc, 1.0, v2(2, 0)).isApprox(v2(1, 0)));
  auto q = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_TRUE(resolvent(q, 1.0, v2(2, 0)).isApprox(v2(1, 0)));
  EXPECT_THROW(resolvent(q, 0.0, v2(2, 0)), Error);

  // Oracle: grid-minimize 1/2 (x - y)^2 + lambda |x| for y = 0.2, lambda = 0.5.
  const double y = 0.2, lambda = 0.5;
  double best_x = 0, best_f = kInf;
  for (int i = -200000; i <= 200000; ++i) {
    double x = i * 1e-5;
    double f = 0.5 * (x - y) * (x - y) + lambda * std::abs(x);
    if (f < best_f) best_f = f, best_x = x;
  }
  EXPECT_NEAR(best_x, 0.0, 1e-12);
  Vec r = resolvent(MonotoneOperator::scaled_norm(1.0, 1), lambda, (Vec(1) << y).finished());
  EXPECT_NEAR(r[0], best_x, 1e-12);
}

TEST(MinSection, Examples) {
  auto nc = MonotoneOperator::normal_cone(ConvexBody::ball(v2(0, 0), 1));
  EXPECT_LE(min_section(nc, v2(1, 0)).norm(), 1e-15);
  auto q = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_TRUE(min_section(q, v2(2, 3)).isApprox(v2(2, 3)));
  try {
    min_section(nc, v2(2, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyValue);
  }

  // Oracle: 1-d search over the ray parameter of (1,0) + t (1,0), t >= 0.
  double best_t = 0, best = kInf;
  for (int i = 0; i <= 100000; ++i) {
    double t = i * 1e-4;
    if (std::abs(1.0 + t) < best) best = std::abs(1.0 + t), best_t = t;
  }
  auto sum = MonotoneOperator::sum_with_normal_cone(QuadraticGradient{Mat::Identity(2, 2), Vec::Zero(2)},
                                                    ConvexBody::ball(v2(0, 0), 1));
  EXPECT_LE((min_section(sum, v2(1, 0)) - v2(1 + best_t, 0)).norm(), 1e-12);
}

TEST(ProjectOntoValue, Examples) {
  auto nc = MonotoneOperator::normal_cone(ConvexBody::ball(v2(0, 0), 1));
  EXPECT_TRUE(project_onto_value(nc, v2(1, 0), v2(1, 1)).isApprox(v2(1, 0)));
  EXPECT_LE(project_onto_value(nc, v2(1, 0), v2(-1, 0)).norm(), 1e-15);
  auto q = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_TRUE(project_onto_value(q, v2(2, 0), v2(-5, 7)).isApprox(v2(2, 0)));
}

TEST(ValueSupport, Examples) {
  auto nc = MonotoneOperator::normal_cone(ConvexBody::ball(v2(0, 0), 1));
  EXPECT_EQ(value_support(nc, v2(1, 0), v2(1, 0)), kInf);
  EXPECT_NEAR(value_support(nc, v2(1, 0), v2(0, 1)), 0.0, 1e-12);
  auto q = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_NEAR(value_support(q, v2(2, 0), v2(1, 1)), 2.0, 1e-12);
}

TEST(LocalMinSectionBound, Examples) {
  auto nc = MonotoneOperator::normal_cone(ConvexBody::ball(v2(0, 0), 1));
  ClosedSet ball1(ConvexBody::ball(v2(0, 0), 1));
  EXPECT_NEAR(local_min_section_bound(nc, &ball1, v2(1, 0), 0.05), 0.0, 1e-15);

  // Oracle: max ||y|| over a dense polar grid of B((1,0), 0.1), all inside Ball(0,2).
  double oracle = 0.0;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j < 720; ++j) {
      double r = 0.1 * i / 200.0, a = 2 * M_PI * j / 720.0;
      oracle = std::max(oracle, (v2(1, 0) + r * v2(std::cos(a), std::sin(a))).norm());
    }
  auto q = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  ClosedSet ball2(ConvexBody::ball(v2(0, 0), 2));
  EXPECT_NEAR(local_min_section_bound(q, &ball2, v2(1, 0), 0.1), oracle, 1e-9);

  ClosedSet origin(ConvexBody::point(v2(0, 0)));
  EXPECT_NEAR(local_min_section_bound(q, &origin, v2(0, 0), 0.5), 0.0, 1e-15);
}

TEST(Properties, ResolventFirmlyNonexpansive) {
  std::mt19937_64 rng(23);
  for (const auto& A : fixtures::operator_zoo(1)) {
    for (double lambda : {1e-3, 1e-2, 1e-1, 1.0}) {
      for (int trial = 0; trial < 100; ++trial) {
        Vec x = random_vec(rng, 2, 3.0), y = random_vec(rng, 2, 3.0);
        Vec jx = resolvent(A, lambda, x), jy = resolvent(A, lambda, y);
        EXPECT_LE((jx - jy).squaredNorm(), (jx - jy).dot(x - y) + kTauRes) << A.kind();
      }
    }
  }
}

TEST(Properties, ResolventConsistency) {
  std::mt19937_64 rng(29);
  for (const auto& A : fixtures::operator_zoo(2)) {
    for (double lambda : {1e-3, 1e-2, 1e-1, 1.0}) {
      for (int trial = 0; trial < 50; ++trial) {
        Vec y = random_vec(rng, 2, 3.0);
        Vec x = resolvent(A, lambda, y);
        ASSERT_TRUE(A.in_domain(x)) << A.kind();
        EXPECT_LE(distance(evaluate(A, x).get(), Vec((y - x) / lambda)), 10 * kTauRes) << A.kind();
      }
    }
  }
}

TEST(Properties, GraphMonotonicity) {
  std::mt19937_64 rng(31);
  for (const auto& A : fixtures::operator_zoo(3)) {
    for (int trial = 0; trial < 300; ++trial) {
      Vec x1 = domain_point(A, rng), x2 = domain_point(A, rng);
      Vec y1 = project(evaluate(A, x1).get(), random_vec(rng, 2, 3.0));
      Vec y2 = project(evaluate(A, x2).get(), random_vec(rng, 2, 3.0));
      EXPECT_GE((y1 - y2).dot(x1 - x2), -kTauGeo) << A.kind();
    }
  }
}

TEST(Properties, SupportReductionMatchesDenseSampling) {
  std::mt19937_64 rng(37);
  auto norm = MonotoneOperator::scaled_norm(0.8, 2);
  auto lin = MonotoneOperator::linear(fixtures::random_monotone(rng, 2, 1.0));
  for (int trial = 0; trial < 20; ++trial) {
    Vec xi = random_vec(rng, 2, 1.0), v = random_vec(rng, 2, 1.0);
    // A(0) is the ball of radius 0.8: sample it densely.
    double sampled = kInf;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j < 4000; ++j) {
        double r = 0.8 * i / 100.0, a = 2 * M_PI * j / 4000.0;
        sampled = std::min(sampled, xi.dot(v - r * v2(std::cos(a), std::sin(a))));
      }
    EXPECT_NEAR(xi.dot(v) - value_support(norm, v2(0, 0), xi), sampled, 1e-6);
    Vec x = random_vec(rng, 2, 1.0);
    EXPECT_NEAR(xi.dot(v) - value_support(lin, x, xi), xi.dot(v - std::get<LinearMonotone>(lin.variant()).M * x),
                1e-12);
  }
}

TEST(Properties, NormalConeMinSectionIsZero) {
  std::mt19937_64 rng(41);
  for (const auto& A : fixtures::operator_zoo(4)) {
    if (!std::holds_alternative<NormalConeOf>(A.variant())) continue;
    for (int trial = 0; trial < 100; ++trial) EXPECT_EQ(min_section(A, domain_point(A, rng)).norm(), 0.0);
  }
}

TEST(Lifted, ActsOnLeadingBlockOnly) {
  auto base = MonotoneOperator::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  auto L = MonotoneOperator::lifted(base, 2);
  EXPECT_EQ(L.dim(), 4);
  Vec y(4);
  y << 2, 0, 5, -1;
  Vec r = resolvent(L, 1.0, y);
  Vec expect(4);
  expect << 1, 0, 5, -1;
  EXPECT_TRUE(r.isApprox(expect));
  Vec z(4);
  z << 2, 3, 7, 7;
  Vec m = min_section(L, z);
  EXPECT_LE((m - (Vec(4) << 2, 3, 0, 0).finished()).norm(), 1e-9);
}
