#pragma once

// Shared generators for the unit and acceptance suites.

#include "mfi/monotone_operators.hpp"

#include <random>

namespace fixtures {

using mfi::ConvexBody;
using mfi::Mat;
using mfi::MonotoneOperator;
using mfi::Vec;

inline Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

inline Mat random_psd(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = u(rng);
  return B * B.transpose();
}

/// PSD symmetric part plus a skew part.
inline Mat random_monotone(std::mt19937_64& rng, Eigen::Index n, double scale) {
  Mat S = random_vec(rng, n * n, scale).reshaped(n, n);
  return 0.5 * random_psd(rng, n, scale) + (S - S.transpose());
}

/// One operator of every shipped variant in R^2.
inline std::vector<MonotoneOperator> operator_zoo(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto box = ConvexBody::box(v2(-1, -0.5), v2(1, 1.5));
  auto ball = ConvexBody::ball(v2(0.2, 0), 1.0);
  return {
      MonotoneOperator::normal_cone(box),
      MonotoneOperator::normal_cone(ball),
      MonotoneOperator::quadratic(random_psd(rng, 2, 1.0), random_vec(rng, 2, 1.0)),
      MonotoneOperator::scaled_norm(0.7, 2),
      MonotoneOperator::linear(random_monotone(rng, 2, 1.0)),
      MonotoneOperator::sum_with_normal_cone(mfi::QuadraticGradient{random_psd(rng, 2, 1.0), random_vec(rng, 2, 1.0)},
                                             ball),
      MonotoneOperator::sum_with_normal_cone(mfi::LinearMonotone{random_monotone(rng, 2, 1.0)}, box),
  };
}

}  // namespace fixtures
