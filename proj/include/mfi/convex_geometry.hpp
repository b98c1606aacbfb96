#pragma once

// Closed convex bodies in R^n and finite unions of them: support functions,
// projections, distances, proximal normal rays and tangent-cone membership.

#include "mfi/core.hpp"
#include "mfi/qp.hpp"

#include <memory>
#include <string>
#include <variant>

namespace mfi {

class ConvexBody;
using BodyPtr = std::shared_ptr<const ConvexBody>;

struct Ball {
  Vec center;
  double radius = 0.0;
};

/// {x : normals.row(i) . x <= offsets[i]}.
struct HPolytope {
  Mat normals;
  Vec offsets;
};

/// Convex hull of the columns of `vertices`.
struct VPolytope {
  Mat vertices;
};

/// Conic hull of the columns of `generators`; zero columns means {0}.
struct Cone {
  Mat generators;
};

struct Translate {
  BodyPtr base;
  Vec shift;
};

struct Intersection {
  std::vector<BodyPtr> parts;
};

class ConvexBody {
 public:
  using Variant = std::variant<Ball, HPolytope, VPolytope, Cone, Translate, Intersection>;

  static ConvexBody ball(Vec center, double radius) {
    require_finite(center, "Ball");
    if (!(radius >= 0.0) || !std::isfinite(radius))
      throw Error(ErrorKind::InvalidArgument, "radius must be >= 0");
    return ConvexBody(Ball{std::move(center), radius});
  }

  static ConvexBody point(Vec p) { return ball(std::move(p), 0.0); }

  static ConvexBody hpolytope(Mat normals, Vec offsets) {
    require_same_dim(normals.rows(), offsets.size(), "HPolytope");
    if (normals.rows() == 0) throw Error(ErrorKind::InvalidArgument, "HPolytope needs at least one halfspace");
    for (Eigen::Index i = 0; i < normals.rows(); ++i) {
      if (normals.row(i).norm() <= 0.0) throw Error(ErrorKind::InvalidArgument, "HPolytope normals must be nonzero");
    }
    if (!normals.allFinite() || !offsets.allFinite()) throw Error(ErrorKind::InvalidArgument, "HPolytope: non-finite data");
    if (!qp::project_halfspaces(normals, offsets, Vec::Zero(normals.cols())))
      throw Error(ErrorKind::Infeasible, "HPolytope is empty");
    return ConvexBody(HPolytope{std::move(normals), std::move(offsets)});
  }

  static ConvexBody box(const Vec& lo, const Vec& hi) {
    require_same_dim(lo.size(), hi.size(), "box");
    const Eigen::Index n = lo.size();
    Mat N(2 * n, n);
    Vec b(2 * n);
    N.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      N(2 * i, i) = 1.0;
      b[2 * i] = hi[i];
      N(2 * i + 1, i) = -1.0;
      b[2 * i + 1] = -lo[i];
    }
    return hpolytope(std::move(N), std::move(b));
  }

  static ConvexBody vpolytope(Mat vertices) {
    if (vertices.cols() == 0) throw Error(ErrorKind::InvalidArgument, "VPolytope needs at least one vertex");
    if (!vertices.allFinite()) throw Error(ErrorKind::InvalidArgument, "VPolytope: non-finite vertex");
    return ConvexBody(VPolytope{std::move(vertices)});
  }

  static ConvexBody cone(Mat generators) {
    if (!generators.allFinite()) throw Error(ErrorKind::InvalidArgument, "Cone: non-finite generator");
    return ConvexBody(Cone{std::move(generators)});
  }

  static ConvexBody translate(ConvexBody base, Vec shift) {
    require_same_dim(base.dim(), shift.size(), "Translate");
    require_finite(shift, "Translate");
    return ConvexBody(Translate{std::make_shared<const ConvexBody>(std::move(base)), std::move(shift)});
  }

  static ConvexBody intersection(std::vector<ConvexBody> parts);

  Eigen::Index dim() const;
  const Variant& variant() const { return v_; }
  std::string kind() const;

  bool bounded() const;
  /// True when projections and normals are closed-form (no Dykstra, no sampling).
  bool analytic() const;
  /// Distance accuracy that applies to this body.
  double accuracy() const { return analytic() ? kTauGeo : kTauIter; }

 private:
  explicit ConvexBody(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Core primitives

double support(const ConvexBody& body, const Vec& xi);
Vec project(const ConvexBody& body, const Vec& x);

inline double distance(const ConvexBody& body, const Vec& x) { return (x - project(body, x)).norm(); }

inline bool contains(const ConvexBody& body, const Vec& x, double tol = -1.0) {
  return distance(body, x) <= (tol < 0.0 ? body.accuracy() : tol);
}

/// S° = the least-norm element.
inline Vec min_norm_point(const ConvexBody& body) { return project(body, Vec::Zero(body.dim())); }

namespace detail {

inline Vec dykstra(const std::vector<BodyPtr>& parts, const Vec& y) {
  Vec x = y;
  std::vector<Vec> incr(parts.size(), Vec::Zero(y.size()));
  for (int sweep = 0; sweep < 10000; ++sweep) {
    Vec before = x;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      Vec z = project(*parts[i], x + incr[i]);
      incr[i] = x + incr[i] - z;
      x = z;
    }
    if ((x - before).norm() <= 1e-14 * (1.0 + x.norm())) break;
  }
  return x;
}

inline double max_part_violation(const std::vector<BodyPtr>& parts, const Vec& x) {
  double worst = 0.0;
  for (const auto& p : parts) worst = std::max(worst, distance(*p, x));
  return worst;
}

/// Unit directions spread over the sphere: +-e_i followed by Halton directions.
inline std::vector<Vec> sphere_directions(Eigen::Index n, std::size_t count) {
  std::vector<Vec> dirs;
  for (Eigen::Index i = 0; i < n && dirs.size() < count; ++i) {
    dirs.push_back(unit(n, i));
    if (dirs.size() < count) dirs.push_back(-unit(n, i));
  }
  std::uint64_t k = 0;
  while (dirs.size() < count && k < 100 * count + 100) {
    Vec h = 2.0 * halton(k++, n).array() - 1.0;
    double nrm = h.norm();
    if (nrm > 0.1 && nrm <= 1.0) dirs.push_back(h / nrm);
  }
  return dirs;
}

/// Normal rays obtained by testing P(x + u) == x over sampled unit u.
inline std::vector<Vec> sampled_normal_rays(const ConvexBody& body, const Vec& x, std::size_t budget) {
  std::vector<Vec> rays;
  const double tol = 1e3 * body.accuracy();
  for (const auto& u : sphere_directions(x.size(), std::max<std::size_t>(budget * 8, 64))) {
    if ((project(body, x + u) - x).norm() <= tol) rays.push_back(u);
  }
  return rays;
}

/// sup{<xi, s> : s in C, ||s - center|| <= radius} for C given by a projection
/// oracle. Returns the value and a feasible maximizer.
struct BallCut {
  double value;
  Vec maximizer;
};

/// Largest t in [0, t_max] with ||P(t d)|| <= radius, where P projects onto a
/// closed convex set in ball-centered coordinates; returns P(t d). This is the
/// Lagrangian dual of the ball constraint, so ||P(t d)|| is nondecreasing in t.
template <typename Centered>
Vec ball_scaled_point(Centered&& P, const Vec& d, double radius, double t_max) {
  const double slack = kTauGeo * (1.0 + radius);
  Vec p0 = P(Vec::Zero(d.size()));
  if (p0.norm() > radius + slack)
    throw Error(ErrorKind::EmptyValue, "truncation ball misses the set (bound too small)");
  if (std::isfinite(t_max)) {
    Vec top = P(Vec(t_max * d));
    if (top.norm() <= radius) return top;
  }
  const double dn = d.norm();
  if (dn == 0.0) return p0;
  double hi = std::isfinite(t_max) ? t_max : 1e6 * (1.0 + radius + p0.norm()) / dn;
  Vec best = p0;
  if (!std::isfinite(t_max)) {
    Vec top = P(Vec(hi * d));
    if (top.norm() <= radius) return top;
  }
  // Shrink until feasible, then bisect geometrically.
  double lo = 0.0;
  for (int it = 0; it < 120 && lo == 0.0; ++it) {
    double mid = 0.5 * hi;
    Vec s = P(Vec(mid * d));
    if (s.norm() <= radius) {
      lo = mid;
      best = s;
    } else {
      hi = mid;
    }
  }
  for (int it = 0; it < 200 && lo > 0.0 && hi / lo - 1.0 > 1e-15; ++it) {
    double mid = std::sqrt(lo * hi);
    Vec s = P(Vec(mid * d));
    if (s.norm() <= radius) {
      lo = mid;
      best = s;
    } else {
      hi = mid;
    }
  }
  return best;
}

template <typename Projector>
BallCut support_within_ball(Projector&& proj, const Vec& center, double radius, const Vec& xi) {
  auto P = [&](const Vec& y) { return Vec(proj(y + center) - center); };
  Vec s = ball_scaled_point(P, xi, radius, kInf);
  return {xi.dot(s + center), s + center};
}

/// Projection onto ball(center, radius) intersected with the set behind proj.
template <typename Projector>
Vec project_within_ball(Projector&& proj, const Vec& center, double radius, const Vec& y) {
  auto P = [&](const Vec& z) { return Vec(proj(z + center) - center); };
  return ball_scaled_point(P, Vec(y - center), radius, 1.0) + center;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline ConvexBody ConvexBody::intersection(std::vector<ConvexBody> parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "Intersection needs at least one part");
  const Eigen::Index n = parts.front().dim();
  for (const auto& p : parts) require_same_dim(p.dim(), n, "Intersection");
  if (parts.size() == 1) return parts.front();

  // Halfspace-only intersections collapse into one HPolytope.
  bool all_h = std::all_of(parts.begin(), parts.end(),
                           [](const ConvexBody& b) { return std::holds_alternative<HPolytope>(b.variant()); });
  if (all_h) {
    Eigen::Index rows = 0;
    for (const auto& p : parts) rows += std::get<HPolytope>(p.variant()).normals.rows();
    Mat N(rows, n);
    Vec b(rows);
    Eigen::Index r = 0;
    for (const auto& p : parts) {
      const auto& h = std::get<HPolytope>(p.variant());
      N.middleRows(r, h.normals.rows()) = h.normals;
      b.segment(r, h.offsets.size()) = h.offsets;
      r += h.normals.rows();
    }
    return hpolytope(std::move(N), std::move(b));
  }

  Intersection in;
  for (auto& p : parts) in.parts.push_back(std::make_shared<const ConvexBody>(std::move(p)));
  Vec x = detail::dykstra(in.parts, Vec::Zero(n));
  if (detail::max_part_violation(in.parts, x) > kTauIter)
    throw Error(ErrorKind::Infeasible, "Intersection is empty");
  return ConvexBody(std::move(in));
}

inline Eigen::Index ConvexBody::dim() const {
  return std::visit(overloaded{
                        [](const Ball& b) { return b.center.size(); },
                        [](const HPolytope& h) { return h.normals.cols(); },
                        [](const VPolytope& v) { return v.vertices.rows(); },
                        [](const Cone& c) { return c.generators.rows(); },
                        [](const Translate& t) { return t.shift.size(); },
                        [](const Intersection& i) { return i.parts.front()->dim(); },
                    },
                    v_);
}

inline std::string ConvexBody::kind() const {
  static const char* names[] = {"Ball", "HPolytope", "VPolytope", "Cone", "Translate", "Intersection"};
  return names[v_.index()];
}

inline bool ConvexBody::bounded() const {
  return std::visit(overloaded{
                        [](const Ball&) { return true; },
                        [this](const HPolytope&) {
                          for (Eigen::Index i = 0; i < dim(); ++i) {
                            if (!std::isfinite(support(*this, unit(dim(), i))) ||
                                !std::isfinite(support(*this, Vec(-unit(dim(), i)))))
                              return false;
                          }
                          return true;
                        },
                        [](const VPolytope&) { return true; },
                        [](const Cone& c) { return c.generators.cols() == 0 || c.generators.norm() == 0.0; },
                        [](const Translate& t) { return t.base->bounded(); },
                        [](const Intersection& in) {
                          return std::any_of(in.parts.begin(), in.parts.end(),
                                             [](const BodyPtr& p) { return p->bounded(); });
                        },
                    },
                    v_);
}

inline bool ConvexBody::analytic() const {
  return std::visit(overloaded{
                        [](const Ball&) { return true; },
                        [](const HPolytope&) { return true; },
                        [](const VPolytope&) { return false; },
                        [](const Cone&) { return false; },
                        [](const Translate& t) { return t.base->analytic(); },
                        [](const Intersection&) { return false; },
                    },
                    v_);
}

inline double support(const ConvexBody& body, const Vec& xi) {
  require_same_dim(body.dim(), xi.size(), "support");
  require_finite(xi, "support");
  return std::visit(
      overloaded{
          [&](const Ball& b) { return b.center.dot(xi) + b.radius * xi.norm(); },
          [&](const HPolytope& h) {
            const double xn = xi.norm();
            if (xn == 0.0) return 0.0;
            // Unbounded iff xi has a positive component along the recession cone.
            auto rec = qp::project_halfspaces(h.normals, Vec::Zero(h.offsets.size()), xi);
            if (rec && rec->norm() > 1e-12 * xn) return kInf;
            // P(t xi) lands on the maximizing face for large t; the LP dual over
            // the active rows then gives the exact value.
            double t = (1.0 + h.offsets.cwiseAbs().maxCoeff()) / xn;
            double last = -kInf;
            for (int it = 0; it < 80; ++it, t *= 2.0) {
              Vec p = *qp::project_halfspaces(h.normals, h.offsets, Vec(t * xi));
              std::vector<Eigen::Index> act;
              for (Eigen::Index i = 0; i < h.normals.rows(); ++i) {
                if (h.normals.row(i).dot(p) >= h.offsets[i] - 1e-9 * (1.0 + std::abs(h.offsets[i])))
                  act.push_back(i);
              }
              if (!act.empty()) {
                Mat NA(xi.size(), static_cast<Eigen::Index>(act.size()));
                Vec bA(static_cast<Eigen::Index>(act.size()));
                for (std::size_t c = 0; c < act.size(); ++c) {
                  NA.col(static_cast<Eigen::Index>(c)) = h.normals.row(act[c]).transpose();
                  bA[static_cast<Eigen::Index>(c)] = h.offsets[act[c]];
                }
                Vec mu = qp::nnls(NA, xi);
                if ((NA * mu - xi).norm() <= 1e-11 * xn) return bA.dot(mu);
              }
              double val = xi.dot(p);
              if (std::abs(val - last) <= 1e-15 * (1.0 + std::abs(val))) return val;
              last = val;
            }
            return last;
          },
          [&](const VPolytope& v) { return (v.vertices.transpose() * xi).maxCoeff(); },
          [&](const Cone& c) {
            for (Eigen::Index j = 0; j < c.generators.cols(); ++j) {
              if (c.generators.col(j).dot(xi) > 1e-12 * c.generators.col(j).norm() * xi.norm()) return kInf;
            }
            return 0.0;
          },
          [&](const Translate& t) {
            double s = support(*t.base, xi);
            return std::isfinite(s) ? s + t.shift.dot(xi) : s;
          },
          [&](const Intersection& in) {
            // Needs one ball part; the rest is accessed through projection.
            for (std::size_t i = 0; i < in.parts.size(); ++i) {
              if (const auto* b = std::get_if<Ball>(&in.parts[i]->variant())) {
                std::vector<BodyPtr> rest;
                for (std::size_t j = 0; j < in.parts.size(); ++j)
                  if (j != i) rest.push_back(in.parts[j]);
                auto proj = [&](const Vec& y) {
                  return rest.size() == 1 ? project(*rest.front(), y) : detail::dykstra(rest, y);
                };
                return detail::support_within_ball(proj, b->center, b->radius, xi).value;
              }
            }
            throw Error(ErrorKind::Unsupported, "support of an Intersection requires a Ball part");
          },
      },
      body.variant());
}

inline Vec project(const ConvexBody& body, const Vec& x) {
  require_same_dim(body.dim(), x.size(), "project");
  return std::visit(overloaded{
                        [&](const Ball& b) -> Vec {
                          Vec d = x - b.center;
                          double nd = d.norm();
                          if (nd <= b.radius) return x;
                          return b.center + (b.radius / nd) * d;
                        },
                        [&](const HPolytope& h) -> Vec {
                          auto p = qp::project_halfspaces(h.normals, h.offsets, x);
                          if (!p) throw Error(ErrorKind::Infeasible, "HPolytope is empty");
                          return *p;
                        },
                        [&](const VPolytope& v) -> Vec {
                          Mat shifted = v.vertices.colwise() - x;
                          return x + qp::min_norm_hull(shifted).point;
                        },
                        [&](const Cone& c) -> Vec { return qp::project_cone(c.generators, x); },
                        [&](const Translate& t) -> Vec { return t.shift + project(*t.base, x - t.shift); },
                        [&](const Intersection& in) -> Vec {
                          for (std::size_t i = 0; i < in.parts.size(); ++i) {
                            if (const auto* b = std::get_if<Ball>(&in.parts[i]->variant())) {
                              std::vector<BodyPtr> rest;
                              for (std::size_t j = 0; j < in.parts.size(); ++j)
                                if (j != i) rest.push_back(in.parts[j]);
                              auto proj = [&](const Vec& y) {
                                return rest.size() == 1 ? project(*rest.front(), y) : detail::dykstra(rest, y);
                              };
                              return detail::project_within_ball(proj, b->center, b->radius, x);
                            }
                          }
                          return detail::dykstra(in.parts, x);
                        },
                    },
                    body.variant());
}

/// Unit generators of the normal cone of `body` at x (x in body). Empty list
/// means the cone is {0}.
inline std::vector<Vec> normal_rays(const ConvexBody& body, const Vec& x, std::size_t budget = 16) {
  const Eigen::Index n = x.size();
  std::vector<Vec> rays = std::visit(
      overloaded{
          [&](const Ball& b) {
            std::vector<Vec> r;
            if (b.radius == 0.0) {
              for (Eigen::Index i = 0; i < n; ++i) {
                r.push_back(unit(n, i));
                r.push_back(-unit(n, i));
              }
              return r;
            }
            Vec d = x - b.center;
            if (d.norm() >= b.radius - kTauGeo * (1.0 + b.radius)) r.push_back(d / d.norm());
            return r;
          },
          [&](const HPolytope& h) {
            std::vector<Vec> r;
            for (Eigen::Index i = 0; i < h.normals.rows(); ++i) {
              double nn = h.normals.row(i).norm();
              if (h.normals.row(i).dot(x) - h.offsets[i] >= -kTauGeo * (nn + std::abs(h.offsets[i])))
                r.push_back(h.normals.row(i).transpose() / nn);
            }
            return r;
          },
          [&](const Translate& t) { return normal_rays(*t.base, x - t.shift, budget); },
          [&](const Intersection& in) {
            std::vector<Vec> r;
            for (const auto& p : in.parts) {
              if (!p->analytic()) return detail::sampled_normal_rays(body, x, budget);
              auto pr = normal_rays(*p, x, budget);
              r.insert(r.end(), pr.begin(), pr.end());
            }
            return r;
          },
          [&](const auto&) { return detail::sampled_normal_rays(body, x, budget); },
      },
      body.variant());
  rays = dedupe(rays, 1e-12);
  if (rays.size() > budget) rays.resize(budget);
  return rays;
}

/// Embeds a body of R^n into R^(n+k) as body x {fixed}.
inline ConvexBody embed(const ConvexBody& body, const Vec& fixed) {
  const Eigen::Index n = body.dim();
  const Eigen::Index k = fixed.size();
  auto pad = [&](const Vec& v) {
    Vec out(n + k);
    out << v, fixed;
    return out;
  };
  auto pad_zero = [&](const Vec& v) {
    Vec out = Vec::Zero(n + k);
    out.head(n) = v;
    return out;
  };
  auto slab = [&]() {
    Mat N = Mat::Zero(2 * k, n + k);
    Vec b(2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
      N(2 * i, n + i) = 1.0;
      b[2 * i] = fixed[i];
      N(2 * i + 1, n + i) = -1.0;
      b[2 * i + 1] = -fixed[i];
    }
    return ConvexBody::hpolytope(N, b);
  };
  return std::visit(overloaded{
                        [&](const Ball& b) {
                          if (b.radius == 0.0) return ConvexBody::point(pad(b.center));
                          return ConvexBody::intersection({ConvexBody::ball(pad(b.center), b.radius), slab()});
                        },
                        [&](const HPolytope& h) {
                          Mat N = Mat::Zero(h.normals.rows(), n + k);
                          N.leftCols(n) = h.normals;
                          return ConvexBody::intersection({ConvexBody::hpolytope(N, h.offsets), slab()});
                        },
                        [&](const VPolytope& v) {
                          Mat V(n + k, v.vertices.cols());
                          for (Eigen::Index j = 0; j < V.cols(); ++j) V.col(j) = pad(v.vertices.col(j));
                          return ConvexBody::vpolytope(V);
                        },
                        [&](const Cone& c) {
                          Mat G = Mat::Zero(n + k, c.generators.cols());
                          G.topRows(n) = c.generators;
                          return ConvexBody::translate(ConvexBody::cone(G), pad(Vec::Zero(n)));
                        },
                        [&](const Translate& t) {
                          return ConvexBody::translate(embed(*t.base, fixed), pad_zero(t.shift));
                        },
                        [&](const Intersection& in) {
                          std::vector<ConvexBody> parts;
                          for (const auto& p : in.parts) parts.push_back(embed(*p, fixed));
                          return ConvexBody::intersection(std::move(parts));
                        },
                    },
                    body.variant());
}

// ---------------------------------------------------------------------------
// Finite unions

class ClosedSet {
 public:
  ClosedSet() = default;
  explicit ClosedSet(std::vector<ConvexBody> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw Error(ErrorKind::InvalidArgument, "ClosedSet needs at least one piece");
    for (const auto& p : pieces_) require_same_dim(p.dim(), pieces_.front().dim(), "ClosedSet");
  }
  ClosedSet(ConvexBody single) : ClosedSet(std::vector<ConvexBody>{std::move(single)}) {}  // NOLINT

  const std::vector<ConvexBody>& pieces() const { return pieces_; }
  Eigen::Index dim() const { return pieces_.front().dim(); }
  bool analytic() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const ConvexBody& b) { return b.analytic(); });
  }
  double accuracy() const { return analytic() ? kTauGeo : kTauIter; }

 private:
  std::vector<ConvexBody> pieces_;
};

inline double distance(const ClosedSet& set, const Vec& x) {
  double d = kInf;
  for (const auto& p : set.pieces()) d = std::min(d, distance(p, x));
  return d;
}

inline bool contains(const ClosedSet& set, const Vec& x, double tol = -1.0) {
  return distance(set, x) <= (tol < 0.0 ? set.accuracy() : tol);
}

/// All nearest points, lexicographically sorted.
inline std::vector<Vec> project_set(const ClosedSet& set, const Vec& x) {
  std::vector<Vec> proj;
  std::vector<double> dist;
  for (const auto& p : set.pieces()) {
    proj.push_back(project(p, x));
    dist.push_back((x - proj.back()).norm());
  }
  double dmin = *std::min_element(dist.begin(), dist.end());
  std::vector<Vec> out;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    if (dist[i] <= dmin + set.pieces()[i].accuracy()) out.push_back(proj[i]);
  }
  out = dedupe(out, 1e-9);
  sort_lex(out);
  return out;
}

/// Unit generators of the proximal normal cone of a union: per-piece cones of
/// the pieces containing x, deduplicated and capped at `budget`.
inline std::vector<Vec> proximal_normal_rays(const ClosedSet& set, const Vec& x, std::size_t budget = 16) {
  require_same_dim(set.dim(), x.size(), "proximal_normal_rays");
  if (!contains(set, x)) throw Error(ErrorKind::NotInSet, "point not in set");
  std::vector<Vec> rays;
  for (const auto& p : set.pieces()) {
    if (!contains(p, x)) continue;
    auto r = normal_rays(p, x, budget);
    rays.insert(rays.end(), r.begin(), r.end());
  }
  rays = dedupe(rays, 1e-12);
  if (rays.size() > budget) rays.resize(budget);
  return rays;
}

enum class TangentTest { Auto, Polar, Surrogate };

struct TangentOptions {
  std::vector<double> t_grid{1e-1, 1e-2, 1e-3, 1e-4};
  double tol = 1e-3;
  TangentTest method = TangentTest::Auto;
};

/// Liminf surrogate of the Bouligand tangent cone: min_t d_S(x + t v) / t.
inline double tangent_quotient(const ClosedSet& set, const Vec& x, const Vec& v, const std::vector<double>& t_grid) {
  double q = kInf;
  for (double t : t_grid) q = std::min(q, distance(set, Vec(x + t * v)) / t);
  return q;
}

inline bool tangent_membership(const ClosedSet& set, const Vec& x, const Vec& v, const TangentOptions& opt = {}) {
  require_same_dim(set.dim(), v.size(), "tangent_membership");
  if (!contains(set, x)) throw Error(ErrorKind::NotInSet, "point not in set");
  bool polar = opt.method == TangentTest::Polar || (opt.method == TangentTest::Auto && set.analytic());
  if (!polar) return tangent_quotient(set, x, v, opt.t_grid) <= opt.tol;
  // Tangent cone of a union is the union of the piece cones.
  for (const auto& p : set.pieces()) {
    if (!contains(p, x)) continue;
    bool ok = true;
    for (const auto& xi : normal_rays(p, x, 64)) {
      if (xi.dot(v) > opt.tol) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

/// Distance from v to the tangent cone of one convex piece at x, computed as a
/// projection onto the polar of its normal rays.
inline double tangent_gap(const ConvexBody& piece, const Vec& x, const Vec& v) {
  auto rays = normal_rays(piece, x, 64);
  if (rays.empty()) return 0.0;
  Mat N(static_cast<Eigen::Index>(rays.size()), x.size());
  for (std::size_t i = 0; i < rays.size(); ++i) N.row(static_cast<Eigen::Index>(i)) = rays[i].transpose();
  auto p = qp::project_halfspaces(N, Vec::Zero(N.rows()), v);
  return (v - *p).norm();
}

inline double tangent_gap(const ClosedSet& set, const Vec& x, const Vec& v) {
  double g = kInf;
  for (const auto& p : set.pieces()) {
    if (contains(p, x)) g = std::min(g, tangent_gap(p, x, v));
  }
  return g;
}

/// Axis-aligned bounding box of a bounded body, via support functions.
inline std::pair<Vec, Vec> bounding_box(const ConvexBody& body) {
  const Eigen::Index n = body.dim();
  Vec lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    hi[i] = support(body, unit(n, i));
    lo[i] = -support(body, Vec(-unit(n, i)));
  }
  return {lo, hi};
}

}  // namespace mfi
