#pragma once

// Maximal monotone operators A : R^n => R^n. Values are returned as exact
// convex bodies (cones for normal-cone parts), never truncated here.

#include "mfi/convex_geometry.hpp"

#include <optional>

namespace mfi {

/// Normal cone operator of a closed convex body; dom A = body.
struct NormalConeOf {
  ConvexBody body;
};

/// x -> Q x + b with Q symmetric positive semidefinite.
struct QuadraticGradient {
  Mat Q;
  Vec b;
};

/// Subdifferential of x -> weight * ||x||.
struct ScaledNormSubdiff {
  double weight = 1.0;
  Eigen::Index dim = 1;
};

/// x -> M x with M + M^T positive semidefinite.
struct LinearMonotone {
  Mat M;
};

/// smooth(x) + N_body(x); dom A = body.
struct SumWithNormalCone {
  std::variant<QuadraticGradient, LinearMonotone> smooth;
  ConvexBody body;
};

class MonotoneOperator;

/// (x, extra) -> A(x) x {0}: the block operator of the epigraph lift.
struct LiftedOperator {
  std::shared_ptr<const MonotoneOperator> base;
  Eigen::Index extra = 0;
};

/// A(x) as a convex body, or empty when x is outside dom A.
struct OperatorValue {
  std::optional<ConvexBody> body;
  bool bounded = false;

  bool empty() const { return !body.has_value(); }
  const ConvexBody& get() const {
    if (!body) throw Error(ErrorKind::EmptyValue, "empty value");
    return *body;
  }
};

namespace detail {

inline void check_psd(const Mat& S, const char* what) {
  if (S.rows() != S.cols()) throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": matrix not square");
  if (!S.allFinite()) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": non-finite entry");
  Mat sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.eigenvalues().minCoeff() < -1e-9) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": not PSD");
}

inline void validate(const QuadraticGradient& q) {
  require_same_dim(q.Q.rows(), q.b.size(), "QuadraticGradient");
  check_psd(q.Q, "QuadraticGradient");
  if ((q.Q - q.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.Q.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::InvalidArgument, "QuadraticGradient: Q must be symmetric");
}

inline void validate(const LinearMonotone& l) { check_psd(Mat(l.M + l.M.transpose()), "LinearMonotone"); }

inline Vec apply_smooth(const std::variant<QuadraticGradient, LinearMonotone>& s, const Vec& x) {
  return std::visit(overloaded{[&](const QuadraticGradient& q) -> Vec { return q.Q * x + q.b; },
                               [&](const LinearMonotone& l) -> Vec { return l.M * x; }},
                    s);
}

inline Mat cone_matrix(const std::vector<Vec>& rays, Eigen::Index n) {
  Mat G(n, static_cast<Eigen::Index>(rays.size()));
  for (std::size_t j = 0; j < rays.size(); ++j) G.col(static_cast<Eigen::Index>(j)) = rays[j];
  return G;
}

}  // namespace detail

class MonotoneOperator {
 public:
  using Variant =
      std::variant<NormalConeOf, QuadraticGradient, ScaledNormSubdiff, LinearMonotone, SumWithNormalCone, LiftedOperator>;

  static MonotoneOperator normal_cone(ConvexBody body) { return MonotoneOperator(NormalConeOf{std::move(body)}); }
  static MonotoneOperator quadratic(Mat Q, Vec b) {
    QuadraticGradient q{std::move(Q), std::move(b)};
    detail::validate(q);
    return MonotoneOperator(std::move(q));
  }
  /// A == {0} on R^n.
  static MonotoneOperator zero(Eigen::Index n) { return quadratic(Mat::Zero(n, n), Vec::Zero(n)); }
  static MonotoneOperator scaled_norm(double weight, Eigen::Index n) {
    if (!(weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "ScaledNormSubdiff: weight must be > 0");
    return MonotoneOperator(ScaledNormSubdiff{weight, n});
  }
  static MonotoneOperator linear(Mat M) {
    LinearMonotone l{std::move(M)};
    detail::validate(l);
    return MonotoneOperator(std::move(l));
  }
  static MonotoneOperator sum_with_normal_cone(std::variant<QuadraticGradient, LinearMonotone> smooth, ConvexBody body) {
    std::visit([&](const auto& s) { detail::validate(s); }, smooth);
    Eigen::Index n = std::visit(overloaded{[](const QuadraticGradient& q) { return q.Q.rows(); },
                                           [](const LinearMonotone& l) { return l.M.rows(); }},
                                smooth);
    require_same_dim(n, body.dim(), "SumWithNormalCone");
    return MonotoneOperator(SumWithNormalCone{std::move(smooth), std::move(body)});
  }
  static MonotoneOperator lifted(MonotoneOperator base, Eigen::Index extra) {
    return MonotoneOperator(LiftedOperator{std::make_shared<const MonotoneOperator>(std::move(base)), extra});
  }

  const Variant& variant() const { return v_; }
  std::string kind() const {
    static const char* names[] = {"NormalConeOf", "QuadraticGradient", "ScaledNormSubdiff",
                                  "LinearMonotone", "SumWithNormalCone", "Lifted"};
    return names[v_.index()];
  }

  Eigen::Index dim() const {
    return std::visit(overloaded{
                          [](const NormalConeOf& a) { return a.body.dim(); },
                          [](const QuadraticGradient& a) { return a.Q.rows(); },
                          [](const ScaledNormSubdiff& a) { return a.dim; },
                          [](const LinearMonotone& a) { return a.M.rows(); },
                          [](const SumWithNormalCone& a) { return a.body.dim(); },
                          [](const LiftedOperator& a) { return a.base->dim() + a.extra; },
                      },
                      v_);
  }

  /// dom A as a body, or nullopt when dom A is all of R^n (or not a body).
  std::optional<ConvexBody> domain() const {
    if (const auto* a = std::get_if<NormalConeOf>(&v_)) return a->body;
    if (const auto* a = std::get_if<SumWithNormalCone>(&v_)) return a->body;
    return std::nullopt;
  }

  /// Membership in dom A up to the body accuracy.
  bool in_domain(const Vec& x) const {
    require_same_dim(dim(), x.size(), "in_domain");
    if (const auto* l = std::get_if<LiftedOperator>(&v_)) return l->base->in_domain(x.head(l->base->dim()));
    auto d = domain();
    return !d || contains(*d, x);
  }

 private:
  explicit MonotoneOperator(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

inline OperatorValue evaluate(const MonotoneOperator& A, const Vec& x) {
  require_same_dim(A.dim(), x.size(), "evaluate");
  if (!A.in_domain(x)) return {};
  const Eigen::Index n = x.size();
  return std::visit(
      overloaded{
          [&](const NormalConeOf& a) {
            return OperatorValue{ConvexBody::cone(detail::cone_matrix(normal_rays(a.body, x, 64), n)), false};
          },
          [&](const QuadraticGradient& a) { return OperatorValue{ConvexBody::point(a.Q * x + a.b), true}; },
          [&](const ScaledNormSubdiff& a) {
            double nx = x.norm();
            if (nx > 0.0) return OperatorValue{ConvexBody::point(a.weight * x / nx), true};
            return OperatorValue{ConvexBody::ball(Vec::Zero(n), a.weight), true};
          },
          [&](const LinearMonotone& a) { return OperatorValue{ConvexBody::point(a.M * x), true}; },
          [&](const SumWithNormalCone& a) {
            auto rays = normal_rays(a.body, x, 64);
            Vec g = detail::apply_smooth(a.smooth, x);
            if (rays.empty()) return OperatorValue{ConvexBody::point(g), true};
            return OperatorValue{ConvexBody::translate(ConvexBody::cone(detail::cone_matrix(rays, n)), g), false};
          },
          [&](const LiftedOperator& a) {
            OperatorValue base = evaluate(*a.base, x.head(a.base->dim()));
            return OperatorValue{embed(base.get(), Vec::Zero(a.extra)), base.bounded};
          },
      },
      A.variant());
}

/// The unique x with y in x + lambda A(x).
inline Vec resolvent(const MonotoneOperator& A, double lambda, const Vec& y) {
  require_same_dim(A.dim(), y.size(), "resolvent");
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "resolvent: lambda must be > 0");
  const Eigen::Index n = y.size();
  return std::visit(
      overloaded{
          [&](const NormalConeOf& a) -> Vec { return project(a.body, y); },
          [&](const QuadraticGradient& a) -> Vec {
            Mat K = Mat::Identity(n, n) + lambda * a.Q;
            return K.llt().solve(Vec(y - lambda * a.b));
          },
          [&](const ScaledNormSubdiff& a) -> Vec {
            double ny = y.norm();
            if (ny <= lambda * a.weight) return Vec::Zero(n);
            return (1.0 - lambda * a.weight / ny) * y;
          },
          [&](const LinearMonotone& a) -> Vec {
            Mat K = Mat::Identity(n, n) + lambda * a.M;
            return K.partialPivLu().solve(y);
          },
          [&](const SumWithNormalCone& a) -> Vec {
            // Projected (forward-backward) iteration on the strongly monotone
            // map x -> x - y + lambda * smooth(x) over the body.
            double step = 1.0, q = 0.0;
            std::visit(overloaded{[&](const QuadraticGradient& s) {
                                    Eigen::SelfAdjointEigenSolver<Mat> es(s.Q);
                                    double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
                                    double lmin = std::max(0.0, es.eigenvalues().minCoeff());
                                    double L = 1.0 + lambda * lmax;
                                    step = 1.0 / L;
                                    q = 1.0 - (1.0 + lambda * lmin) / L;
                                  },
                                  [&](const LinearMonotone& s) {
                                    double L = spectral_norm(Mat(Mat::Identity(n, n) + lambda * s.M));
                                    step = 1.0 / (L * L);
                                    q = std::sqrt(std::max(0.0, 1.0 - 1.0 / (L * L)));
                                  }},
                       a.smooth);
            auto residual_map = [&](const Vec& x) { return Vec(x - y + lambda * detail::apply_smooth(a.smooth, x)); };
            Vec x = project(a.body, y);
            const double target = 1e-3 * kTauRes * std::min(1.0, lambda);
            double change = kInf;
            for (int it = 0; it < 100000; ++it) {
              Vec next = project(a.body, Vec(x - step * residual_map(x)));
              change = (next - x).norm();
              x = std::move(next);
              double err = q < 1.0 ? change * q / (1.0 - q) : change;
              if (err <= target || change <= 1e-16 * (1.0 + x.norm())) return x;
            }
            double err = q < 1.0 ? change * q / (1.0 - q) : change;
            if (err > kTauRes)
              throw Error(ErrorKind::NonConvergence,
                          "resolvent: projected iteration did not converge, residual " + std::to_string(err));
            return x;
          },
          [&](const LiftedOperator& a) -> Vec {
            Vec out = y;
            const Eigen::Index m = a.base->dim();
            out.head(m) = resolvent(*a.base, lambda, y.head(m));
            return out;
          },
      },
      A.variant());
}

/// A°(x): least-norm element of A(x).
inline Vec min_section(const MonotoneOperator& A, const Vec& x) {
  OperatorValue v = evaluate(A, x);
  if (v.empty()) throw Error(ErrorKind::EmptyValue, "min_section: empty value (x outside dom A)");
  if (std::holds_alternative<NormalConeOf>(A.variant())) return Vec::Zero(x.size());
  return min_norm_point(*v.body);
}

inline Vec project_onto_value(const MonotoneOperator& A, const Vec& x, const Vec& v) {
  return project(evaluate(A, x).get(), v);
}

inline double value_support(const MonotoneOperator& A, const Vec& x, const Vec& xi) {
  return support(evaluate(A, x).get(), xi);
}

/// Estimate of limsup ||A°(y)|| over y -> x in `set`: max of ||A°|| over
/// deterministic samples of set ∩ B(x, radius) ∩ dom A. A null `set` means R^n.
inline double local_min_section_bound(const MonotoneOperator& A, const ClosedSet* set, const Vec& x, double radius,
                                      std::size_t samples = 256) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "local_min_section_bound: radius must be > 0");
  const Eigen::Index n = x.size();
  std::vector<Vec> cand{x};
  std::size_t half = std::max<std::size_t>(samples / 2, 1);
  for (const auto& u : detail::sphere_directions(n, half)) cand.push_back(x + radius * u);
  for (std::uint64_t k = 0; cand.size() < samples + 1 && k < 20 * samples; ++k) {
    Vec h = 2.0 * halton(k, n).array() - 1.0;
    if (h.norm() <= 1.0) cand.push_back(x + radius * h);
  }
  double best = -1.0;
  for (auto y : cand) {
    if (set && !contains(*set, y)) {
      y = project_set(*set, y).front();
      if ((y - x).norm() > radius * (1.0 + 1e-12)) continue;
    }
    if (!A.in_domain(y)) continue;
    best = std::max(best, min_section(A, y).norm());
  }
  if (best < 0.0) throw Error(ErrorKind::EmptyValue, "local_min_section_bound: no sample in dom A");
  return best;
}

}  // namespace mfi
