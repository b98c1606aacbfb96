#pragma once

// Small dense quadratic-programming kernels used by the exact projections:
// Lawson-Hanson NNLS, least-distance programming on top of it, and Wolfe's
// minimum-norm-point algorithm for convex hulls.

#include "mfi/core.hpp"

#include <optional>

namespace mfi::qp {

/// argmin ||E u - f|| subject to u >= 0 (Lawson-Hanson active set).
inline Vec nnls(const Mat& E, const Vec& f) {
  const Eigen::Index k = E.cols();
  Vec u = Vec::Zero(k);
  if (k == 0) return u;
  std::vector<bool> passive(k, false);
  const double scale = std::max(1.0, E.cwiseAbs().maxCoeff()) * std::max(1.0, f.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * scale * static_cast<double>(std::max<Eigen::Index>(k, E.rows()));

  auto solve_passive = [&](Vec& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j)
      if (passive[j]) idx.push_back(j);
    Mat Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) Ep.col(static_cast<Eigen::Index>(c)) = E.col(idx[c]);
    Vec zp = Ep.completeOrthogonalDecomposition().solve(f);
    z = Vec::Zero(k);
    for (std::size_t c = 0; c < idx.size(); ++c) z[idx[c]] = zp[static_cast<Eigen::Index>(c)];
  };

  const int max_outer = static_cast<int>(3 * k + 30);
  for (int outer = 0; outer < max_outer; ++outer) {
    Vec w = E.transpose() * (f - E * u);
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!passive[j] && w[j] > best) {
        best = w[j];
        t = j;
      }
    }
    if (t < 0) break;
    passive[t] = true;

    for (int inner = 0; inner < 3 * k + 30; ++inner) {
      Vec z;
      solve_passive(z);
      bool all_pos = true;
      for (Eigen::Index j = 0; j < k; ++j)
        if (passive[j] && z[j] <= 0.0) all_pos = false;
      if (all_pos) {
        u = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[j] && z[j] <= 0.0) {
          double denom = u[j] - z[j];
          if (denom > 0.0) alpha = std::min(alpha, u[j] / denom);
        }
      }
      u += alpha * (z - u);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[j] && u[j] <= tol) {
          passive[j] = false;
          u[j] = 0.0;
        }
      }
    }
  }
  return u;
}

/// Least-distance programming: argmin ||z|| subject to G z >= h.
/// Returns nullopt when the constraints are infeasible.
inline std::optional<Vec> ldp(const Mat& G, const Vec& h) {
  const Eigen::Index n = G.cols();
  const Eigen::Index m = G.rows();
  if (m == 0 || (h.array() <= 0.0).all()) return Vec::Zero(n);
  // The problem is positively homogeneous in h; solve it at unit scale.
  const double s = h.cwiseAbs().maxCoeff();
  Mat E(n + 1, m);
  E.topRows(n) = G.transpose();
  E.row(n) = h.transpose() / s;
  Vec f = Vec::Zero(n + 1);
  f[n] = 1.0;
  Vec u = nnls(E, f);
  Vec r = E * u - f;
  if (r.norm() <= 1e-12 || std::abs(r[n]) <= 1e-14) return std::nullopt;
  return Vec(-s * r.head(n) / r[n]);
}

/// Projection onto {x : N x <= b}. Rows of N are the outward normals.
inline std::optional<Vec> project_halfspaces(const Mat& N, const Vec& b, const Vec& y) {
  Vec h = N * y - b;
  auto z = ldp(-N, h);
  if (!z) return std::nullopt;
  Vec p = y + *z;
  // Polish: re-solve exactly on the active rows and keep it if KKT holds.
  const double scale = 1.0 + y.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> act;
  for (Eigen::Index i = 0; i < N.rows(); ++i)
    if (N.row(i).dot(p) >= b[i] - 1e-7 * scale) act.push_back(i);
  if (act.empty()) return p;
  Mat NA(static_cast<Eigen::Index>(act.size()), N.cols());
  Vec bA(NA.rows());
  for (std::size_t c = 0; c < act.size(); ++c) {
    NA.row(static_cast<Eigen::Index>(c)) = N.row(act[c]);
    bA[static_cast<Eigen::Index>(c)] = b[act[c]];
  }
  Vec mult = (NA * NA.transpose()).completeOrthogonalDecomposition().solve(Vec(NA * y - bA));
  Vec q = y - NA.transpose() * mult;
  if ((mult.array() >= -1e-10 * scale).all() && ((N * q - b).array() <= 1e-12 * scale).all() &&
      (q - y).norm() <= (p - y).norm() + 1e-9 * scale)
    return q;
  return p;
}

/// Projection onto the cone generated by the columns of G.
inline Vec project_cone(const Mat& G, const Vec& y) {
  if (G.cols() == 0) return Vec::Zero(y.size());
  return G * nnls(G, y);
}

/// Wolfe's algorithm: minimum-norm point of conv{columns of P}, with its
/// convex weights.
struct MinNormResult {
  Vec point;
  Vec weights;
};

inline MinNormResult min_norm_hull(const Mat& P) {
  const Eigen::Index m = P.cols();
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "min_norm_hull: empty point set");
  const double scale = std::max(1.0, P.colwise().squaredNorm().maxCoeff());
  const double tol = 1e-14 * scale;

  Eigen::Index start = 0;
  P.colwise().squaredNorm().minCoeff(&start);
  std::vector<Eigen::Index> active{start};
  std::vector<double> lambda{1.0};
  Vec x = P.col(start);

  auto affine_min = [&](const std::vector<Eigen::Index>& s) {
    // Minimize ||p0 + D beta||, alpha0 = 1 - sum(beta).
    const auto q = static_cast<Eigen::Index>(s.size());
    Vec alpha(q);
    if (q == 1) {
      alpha[0] = 1.0;
      return alpha;
    }
    Mat D(P.rows(), q - 1);
    for (Eigen::Index c = 1; c < q; ++c) D.col(c - 1) = P.col(s[c]) - P.col(s[0]);
    Vec beta = D.completeOrthogonalDecomposition().solve(Vec(-P.col(s[0])));
    alpha[0] = 1.0 - beta.sum();
    alpha.tail(q - 1) = beta;
    return alpha;
  };

  for (int major = 0; major < 50 * m + 100; ++major) {
    Eigen::Index j = 0;
    (P.transpose() * x).minCoeff(&j);
    if (x.dot(P.col(j)) >= x.squaredNorm() - tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lambda.push_back(0.0);

    for (int minor = 0; minor < 50 * m + 100; ++minor) {
      Vec alpha = affine_min(active);
      bool interior = true;
      for (Eigen::Index i = 0; i < alpha.size(); ++i)
        if (alpha[i] <= 1e-15) interior = false;
      if (interior) {
        for (std::size_t i = 0; i < active.size(); ++i) lambda[i] = alpha[static_cast<Eigen::Index>(i)];
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        double a = alpha[static_cast<Eigen::Index>(i)];
        if (a <= 1e-15) {
          double denom = lambda[i] - a;
          if (denom > 0.0) theta = std::min(theta, lambda[i] / denom);
        }
      }
      for (std::size_t i = 0; i < active.size(); ++i)
        lambda[i] += theta * (alpha[static_cast<Eigen::Index>(i)] - lambda[i]);
      std::vector<Eigen::Index> keep_idx;
      std::vector<double> keep_lambda;
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (lambda[i] > 1e-15) {
          keep_idx.push_back(active[i]);
          keep_lambda.push_back(lambda[i]);
        }
      }
      if (keep_idx.empty()) {
        keep_idx.push_back(active.back());
        keep_lambda.push_back(1.0);
      }
      active = keep_idx;
      lambda = keep_lambda;
      double total = 0.0;
      for (double l : lambda) total += l;
      for (double& l : lambda) l /= total;
      x = Vec::Zero(P.rows());
      for (std::size_t i = 0; i < active.size(); ++i) x += lambda[i] * P.col(active[i]);
    }
    x = Vec::Zero(P.rows());
    for (std::size_t i = 0; i < active.size(); ++i) x += lambda[i] * P.col(active[i]);
  }

  MinNormResult out{x, Vec::Zero(m)};
  for (std::size_t i = 0; i < active.size(); ++i) out.weights[active[i]] += lambda[i];
  return out;
}

}  // namespace mfi::qp
