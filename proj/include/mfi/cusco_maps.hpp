#pragma once

// Lipschitz set-valued maps with nonempty convex compact values, plus explicit
// Lipschitz selections through a prescribed graph point.

#include "mfi/convex_geometry.hpp"
#include "mfi/qp.hpp"

#include <functional>

namespace mfi {

/// x -> C x + d.
struct AffineMap {
  Mat C;
  Vec d;

  Vec operator()(const Vec& x) const { return C * x + d; }
  double lipschitz() const { return spectral_norm(C); }
  Eigen::Index in_dim() const { return C.cols(); }
  Eigen::Index out_dim() const { return C.rows(); }
};

struct Singleton {
  AffineMap f;
};

/// Ball(c(x), max(r0 + <g, x>, 0)).
struct BallValued {
  AffineMap center;
  double r0 = 0.0;
  Vec g;

  double radius(const Vec& x) const { return std::max(r0 + g.dot(x), 0.0); }
};

/// conv{ v_i(x) }.
struct PolytopeValued {
  std::vector<AffineMap> vertex_maps;
};

class CuscoMap;

/// (x, rest) -> F(x) x {tail(x)}: the augmented map of the epigraph lift.
struct LiftedCusco {
  std::shared_ptr<const CuscoMap> base;
  std::function<Vec(const Vec&)> tail;
  Eigen::Index tail_dim = 0;
  Eigen::Index extra = 0;
  double tail_lipschitz = 0.0;
};

struct Selection {
  std::function<Vec(const Vec&)> f;
  double constant = 0.0;
};

namespace detail {

inline void validate_affine(const AffineMap& m, Eigen::Index n, const char* what) {
  if (m.C.cols() != n || m.C.rows() != n || m.d.size() != n)
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": affine map must be n x n with offset in R^n");
  if (!m.C.allFinite() || !m.d.allFinite()) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": non-finite");
}

}  // namespace detail

class CuscoMap {
 public:
  using Variant = std::variant<Singleton, BallValued, PolytopeValued, LiftedCusco>;

  static CuscoMap singleton(Mat C, Vec d, double L = -1.0) {
    Singleton s{{std::move(C), std::move(d)}};
    detail::validate_affine(s.f, s.f.C.cols(), "Singleton");
    return CuscoMap(std::move(s), L);
  }
  static CuscoMap constant(Vec v, double L = -1.0) {
    const auto n = v.size();
    return singleton(Mat::Zero(n, n), std::move(v), L);
  }
  static CuscoMap ball_valued(Mat C, Vec d, double r0, Vec g, double L = -1.0) {
    BallValued b{{std::move(C), std::move(d)}, r0, std::move(g)};
    const auto n = b.center.C.cols();
    detail::validate_affine(b.center, n, "BallValued");
    require_same_dim(n, b.g.size(), "BallValued radius gradient");
    if (!std::isfinite(r0) || !b.g.allFinite()) throw Error(ErrorKind::InvalidArgument, "BallValued: non-finite radius");
    if (b.g.isZero(0.0) && r0 < 0.0) throw Error(ErrorKind::InvalidArgument, "radius must be >= 0");
    return CuscoMap(std::move(b), L);
  }
  static CuscoMap polytope_valued(std::vector<AffineMap> maps, double L = -1.0) {
    if (maps.empty()) throw Error(ErrorKind::InvalidArgument, "PolytopeValued needs at least one vertex map");
    const auto n = maps.front().C.cols();
    for (const auto& m : maps) detail::validate_affine(m, n, "PolytopeValued");
    return CuscoMap(PolytopeValued{std::move(maps)}, L);
  }
  static CuscoMap lifted(CuscoMap base, std::function<Vec(const Vec&)> tail, Eigen::Index tail_dim, double tail_lip,
                         Eigen::Index extra) {
    if (tail_dim > extra) throw Error(ErrorKind::DimensionMismatch, "Lifted: tail longer than the added block");
    double L = base.lipschitz() + tail_lip;
    return CuscoMap(
        LiftedCusco{std::make_shared<const CuscoMap>(std::move(base)), std::move(tail), tail_dim, extra, tail_lip}, L);
  }

  const Variant& variant() const { return v_; }
  std::string kind() const {
    static const char* names[] = {"Singleton", "BallValued", "PolytopeValued", "Lifted"};
    return names[v_.index()];
  }
  Eigen::Index dim() const {
    return std::visit(overloaded{
                          [](const Singleton& s) { return s.f.in_dim(); },
                          [](const BallValued& b) { return b.center.in_dim(); },
                          [](const PolytopeValued& p) { return p.vertex_maps.front().in_dim(); },
                          [](const LiftedCusco& l) { return l.base->dim() + l.extra; },
                      },
                      v_);
  }

  /// Declared Hausdorff-Lipschitz constant.
  double lipschitz() const { return L_; }

  /// Upper bound on the Hausdorff-Lipschitz constant from the data.
  double analytic_lipschitz() const {
    return std::visit(overloaded{
                          [](const Singleton& s) { return s.f.lipschitz(); },
                          [](const BallValued& b) { return b.center.lipschitz() + b.g.norm(); },
                          [](const PolytopeValued& p) {
                            double m = 0.0;
                            for (const auto& a : p.vertex_maps) m = std::max(m, a.lipschitz());
                            return m;
                          },
                          [](const LiftedCusco& l) { return l.base->lipschitz() + l.tail_lipschitz; },
                      },
                      v_);
  }

 private:
  CuscoMap(Variant v, double L) : v_(std::move(v)) {
    L_ = L < 0.0 ? analytic_lipschitz() : L;
    if (!std::isfinite(L_)) throw Error(ErrorKind::InvalidArgument, "Lipschitz constant must be finite");
  }
  Variant v_;
  double L_ = 0.0;
};

namespace detail {

inline Vec lifted_tail(const LiftedCusco& l, const Vec& xb) {
  Vec t = Vec::Zero(l.extra);
  if (l.tail_dim > 0) {
    Vec w = l.tail(xb);
    require_same_dim(l.tail_dim, w.size(), "Lifted tail");
    t.head(l.tail_dim) = w;
  }
  return t;
}

inline Vec append(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

inline Mat vertex_matrix(const PolytopeValued& p, const Vec& x) {
  Mat V(x.size(), static_cast<Eigen::Index>(p.vertex_maps.size()));
  for (std::size_t i = 0; i < p.vertex_maps.size(); ++i) V.col(static_cast<Eigen::Index>(i)) = p.vertex_maps[i](x);
  return V;
}

}  // namespace detail

inline ConvexBody value(const CuscoMap& F, const Vec& x) {
  require_same_dim(F.dim(), x.size(), "value");
  return std::visit(overloaded{
                        [&](const Singleton& s) { return ConvexBody::point(s.f(x)); },
                        [&](const BallValued& b) { return ConvexBody::ball(b.center(x), b.radius(x)); },
                        [&](const PolytopeValued& p) {
                          Mat V = detail::vertex_matrix(p, x);
                          return V.cols() == 1 ? ConvexBody::point(V.col(0)) : ConvexBody::vpolytope(V);
                        },
                        [&](const LiftedCusco& l) {
                          Vec xb = x.head(l.base->dim());
                          return embed(value(*l.base, xb), detail::lifted_tail(l, xb));
                        },
                    },
                    F.variant());
}

/// ||F(x)|| = sup of ||v|| over the value.
inline double norm_bound(const CuscoMap& F, const Vec& x) {
  require_same_dim(F.dim(), x.size(), "norm_bound");
  return std::visit(overloaded{
                        [&](const Singleton& s) { return s.f(x).norm(); },
                        [&](const BallValued& b) { return b.center(x).norm() + b.radius(x); },
                        [&](const PolytopeValued& p) { return detail::vertex_matrix(p, x).colwise().norm().maxCoeff(); },
                        [&](const LiftedCusco& l) {
                          Vec xb = x.head(l.base->dim());
                          return std::hypot(norm_bound(*l.base, xb), detail::lifted_tail(l, xb).norm());
                        },
                    },
                    F.variant());
}

/// Polytope vertices, or the frame c +- r e_i followed by c for balls.
inline std::vector<Vec> extreme_points(const CuscoMap& F, const Vec& x) {
  require_same_dim(F.dim(), x.size(), "extreme_points");
  return std::visit(overloaded{
                        [&](const Singleton& s) { return std::vector<Vec>{s.f(x)}; },
                        [&](const BallValued& b) {
                          Vec c = b.center(x);
                          double r = b.radius(x);
                          if (r == 0.0) return std::vector<Vec>{c};
                          std::vector<Vec> pts;
                          for (Eigen::Index i = 0; i < c.size(); ++i) {
                            pts.push_back(c + r * unit(c.size(), i));
                            pts.push_back(c - r * unit(c.size(), i));
                          }
                          pts.push_back(c);
                          return pts;
                        },
                        [&](const PolytopeValued& p) {
                          std::vector<Vec> pts;
                          for (const auto& m : p.vertex_maps) pts.push_back(m(x));
                          return dedupe(std::move(pts));
                        },
                        [&](const LiftedCusco& l) {
                          Vec xb = x.head(l.base->dim());
                          Vec t = detail::lifted_tail(l, xb);
                          std::vector<Vec> pts;
                          for (const auto& v : extreme_points(*l.base, xb)) pts.push_back(detail::append(v, t));
                          return pts;
                        },
                    },
                    F.variant());
}

namespace detail {

/// Least-norm convex weights with V lambda = target, up to `slack` per coordinate.
inline Vec least_norm_weights(const Mat& V, const Vec& target, double slack) {
  const Eigen::Index n = V.rows(), m = V.cols();
  Mat G(2 * n + 2 + m, m);
  Vec h(2 * n + 2 + m);
  G.topRows(n) = V;
  h.head(n) = target.array() - slack;
  G.middleRows(n, n) = -V;
  h.segment(n, n) = -target.array() - slack;
  G.row(2 * n) = Vec::Ones(m).transpose();
  h[2 * n] = 1.0 - 1e-14;
  G.row(2 * n + 1) = -Vec::Ones(m).transpose();
  h[2 * n + 1] = -1.0 - 1e-14;
  G.bottomRows(m) = Mat::Identity(m, m);
  h.tail(m).setZero();
  auto lam = qp::ldp(G, h);
  if (!lam) return Vec();
  Vec w = lam->cwiseMax(0.0);
  return w / w.sum();
}

}  // namespace detail

/// A Lipschitz selection f of F with f(x0) = v0, and its Lipschitz constant.
inline Selection lipschitz_selection(const CuscoMap& F, const Vec& x0, const Vec& v0) {
  require_same_dim(F.dim(), x0.size(), "lipschitz_selection");
  require_same_dim(F.dim(), v0.size(), "lipschitz_selection");
  const double gap = distance(value(F, x0), v0);
  if (gap > kTauGeo)
    throw Error(ErrorKind::NotInSet, "lipschitz_selection: v0 not in F(x0), violation " + std::to_string(gap));
  return std::visit(
      overloaded{
          [&](const Singleton& s) { return Selection{[f = s.f](const Vec& y) { return f(y); }, s.f.lipschitz()}; },
          [&](const BallValued& b) {
            Vec u0 = v0 - b.center(x0);
            double constant = b.center.lipschitz() + b.g.norm();
            double nu = u0.norm();
            if (nu == 0.0) return Selection{[b](const Vec& y) { return b.center(y); }, b.center.lipschitz()};
            return Selection{[b, u0, nu](const Vec& y) { return Vec(b.center(y) + std::min(1.0, b.radius(y) / nu) * u0); },
                             constant};
          },
          [&](const PolytopeValued& p) {
            Mat V = detail::vertex_matrix(p, x0);
            Vec lam = detail::least_norm_weights(V, v0, gap + 1e-12 * (1.0 + V.cwiseAbs().maxCoeff()));
            if (lam.size() == 0) lam = qp::min_norm_hull(V.colwise() - v0).weights;
            double constant = 0.0;
            for (const auto& m : p.vertex_maps) constant = std::max(constant, m.lipschitz());
            auto maps = p.vertex_maps;
            return Selection{[maps, lam](const Vec& y) {
                               Vec out = Vec::Zero(y.size());
                               for (std::size_t i = 0; i < maps.size(); ++i)
                                 out += lam[static_cast<Eigen::Index>(i)] * maps[i](y);
                               return out;
                             },
                             constant};
          },
          [&](const LiftedCusco& l) {
            const Eigen::Index nb = l.base->dim();
            Selection base = lipschitz_selection(*l.base, x0.head(nb), v0.head(nb));
            auto tail = l;
            return Selection{[base, tail, nb](const Vec& y) {
                               Vec yb = y.head(nb);
                               return detail::append(base.f(yb), detail::lifted_tail(tail, yb));
                             },
                             base.constant + l.tail_lipschitz};
          },
      },
      F.variant());
}

/// Sampled Hausdorff quotient max |sigma_F(x)(xi) - sigma_F(y)(xi)| / ||x - y||
/// over Halton pairs in the box center +- radius and unit directions xi.
inline double estimate_lipschitz(const CuscoMap& F, const Vec& center, double radius, std::size_t pairs = 200,
                                 std::size_t directions = 32) {
  const Eigen::Index n = F.dim();
  auto dirs = detail::sphere_directions(n, directions);
  double best = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    Vec x = center + radius * (2.0 * halton(2 * k, n).array() - 1.0).matrix();
    Vec y = center + radius * (2.0 * halton(2 * k + 1, n).array() - 1.0).matrix();
    double d = (x - y).norm();
    if (d < 1e-12) continue;
    ConvexBody fx = value(F, x), fy = value(F, y);
    for (const auto& xi : dirs) best = std::max(best, std::abs(support(fx, xi) - support(fy, xi)) / d);
  }
  return best;
}

}  // namespace mfi
