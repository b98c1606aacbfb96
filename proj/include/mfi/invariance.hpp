#pragma once

// Strong and weak invariance of a closed set S for x' in F(x) - A(x):
// point-wise tangential and normal criteria, sampled certificates, and
// simulation-based falsification.

#include "mfi/integrator.hpp"

#include <random>

namespace mfi {

enum class Criterion {
  TangentProjected,    // v - proj_{A(x)} v in T_S(x) for all v in F(x)
  TangentIntersect,    // (v - A(x)) meets T_S(x) for all v in F(x)
  NormalProjected,     // <xi, v - proj_{A(x)} v> <= 0
  NormalInf,           // sigma_F(xi) - sigma_{A(x)}(xi) <= 0
  NormalInfTruncated,  // same with A(x) cut to the ball of radius ||F(x)|| + ||A°(x)||
  WeakTangent,         // some v - a, a in A(x) cut to radius m(x) + ||F(x)||, lies in T_S(x)
  WeakNormal,          // -sigma_F(-xi) - sigma_{A(x) cut}(xi) <= 0
};

inline const std::vector<std::pair<Criterion, std::string>>& criterion_names() {
  static const std::vector<std::pair<Criterion, std::string>> names{
      {Criterion::TangentProjected, "tangent-projected"}, {Criterion::TangentIntersect, "tangent-intersect"},
      {Criterion::NormalProjected, "normal-projected"},   {Criterion::NormalInf, "normal-inf"},
      {Criterion::NormalInfTruncated, "normal-inf-truncated"}, {Criterion::WeakTangent, "weak-tangent"},
      {Criterion::WeakNormal, "weak-normal"},
  };
  return names;
}

inline std::string to_string(Criterion c) {
  for (const auto& [k, s] : criterion_names())
    if (k == c) return s;
  return "?";
}

inline Criterion parse_criterion(const std::string& s) {
  for (const auto& [k, name] : criterion_names())
    if (name == s) return k;
  throw Error(ErrorKind::InvalidArgument, "unknown criterion variant '" + s + "'");
}

inline bool is_weak(Criterion c) { return c == Criterion::WeakTangent || c == Criterion::WeakNormal; }

/// Criteria whose margin comes out of an iterative scheme rather than a
/// closed-form support or projection.
inline bool is_iterative(Criterion c) { return c == Criterion::TangentIntersect || c == Criterion::WeakTangent; }

struct MarginResult {
  double margin = -kInf;
  Vec worst_xi;
  Vec worst_v;
  bool vacuous = true;  // no unit normal at x
};

struct SamplerConfig {
  std::size_t boundary_points = 200;
  std::size_t hypothesis_points = 200;
  std::size_t normal_budget = 16;
  std::uint64_t seed = 1;
};

struct Witness {
  Vec x;
  Vec xi;
  Vec v;
  double margin = 0.0;
};

struct PointReport {
  Vec x;
  double margin = -kInf;
  Vec worst_xi;
  Vec worst_v;
  std::optional<double> local_bound;
  std::string error;
};

enum class Verdict { Pass, Fail, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    default:
      return "inconclusive";
  }
}

struct HypothesisCheck {
  std::string name;
  bool ok = true;
  std::vector<Vec> witnesses;
};

struct CertificateReport {
  std::string variant;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::vector<PointReport> points;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<Witness> witnesses;
  std::vector<HypothesisCheck> hypothesis_checks;
  std::vector<std::string> caveats;
  std::string reason;
  double worst_margin = -kInf;
};

namespace detail {

inline Mat rows_of(const std::vector<Vec>& rays, Eigen::Index n) {
  Mat N(static_cast<Eigen::Index>(rays.size()), n);
  for (std::size_t i = 0; i < rays.size(); ++i) N.row(static_cast<Eigen::Index>(i)) = rays[i].transpose();
  return N;
}

/// Per-piece normal rays at x, keeping only the rays that are proximal
/// normals of the whole union (x + t xi still projects back to x).
inline std::vector<std::vector<Vec>> piece_normals(const ClosedSet& S, const Vec& x, std::size_t budget) {
  std::vector<std::vector<Vec>> out;
  const bool single = S.pieces().size() == 1;
  const double t = 1e-6 * (1.0 + x.norm());
  for (const auto& p : S.pieces()) {
    if (!contains(p, x)) continue;
    auto rays = normal_rays(p, x, budget);
    if (!single) {
      std::vector<Vec> keep;
      for (const auto& r : rays)
        if (distance(S, Vec(x + t * r)) >= t * (1.0 - 1e-6)) keep.push_back(r);
      rays = std::move(keep);
    }
    out.push_back(std::move(rays));
  }
  return out;
}

/// Unit directions of the cone spanned by `rays`: the generators, then
/// normalized pairwise sums, up to `budget`.
inline std::vector<Vec> cone_samples(const std::vector<Vec>& rays, std::size_t budget) {
  std::vector<Vec> out = rays;
  for (std::size_t i = 0; i < rays.size() && out.size() < budget; ++i)
    for (std::size_t j = i + 1; j < rays.size() && out.size() < budget; ++j) {
      Vec s = rays[i] + rays[j];
      if (s.norm() > 1e-12) out.push_back(s / s.norm());
    }
  return dedupe(out, 1e-12);
}

inline std::vector<Vec> all_normals(const std::vector<std::vector<Vec>>& per_piece, std::size_t budget) {
  std::vector<Vec> rays;
  for (const auto& r : per_piece) {
    auto s = cone_samples(r, budget);
    rays.insert(rays.end(), s.begin(), s.end());
  }
  return dedupe(rays, 1e-12);
}

/// Distance from y to the cone {w : N w <= 0}.
inline Vec project_polar(const Mat& N, const Vec& y) {
  if (N.rows() == 0) return y;
  return *qp::project_halfspaces(N, Vec::Zero(N.rows()), y);
}

/// dist(v - K, T) with T = {w : N w <= 0} and K a closed convex body.
inline double gap_to_cone(const ConvexBody& K, const Mat& N, const Vec& v) {
  if (N.rows() == 0) return 0.0;
  if (const auto* b = std::get_if<Ball>(&K.variant())) {
    Vec y = v - b->center;
    return std::max(0.0, (y - project_polar(N, y)).norm() - b->radius);
  }
  // Exact feasibility for translated cones: some g + G mu, mu >= 0, with
  // N (v - g - G mu) <= 0.
  const Cone* cone = std::get_if<Cone>(&K.variant());
  Vec g = Vec::Zero(v.size());
  if (const auto* tr = std::get_if<Translate>(&K.variant())) {
    cone = std::get_if<Cone>(&tr->base->variant());
    g = tr->shift;
  }
  if (cone) {
    const Mat& G = cone->generators;
    Mat Gl(N.rows() + G.cols(), G.cols());
    Gl.topRows(N.rows()) = N * G;
    Gl.bottomRows(G.cols()) = Mat::Identity(G.cols(), G.cols());
    Vec hl = Vec::Zero(Gl.rows());
    hl.head(N.rows()) = N * (v - g);
    if (G.cols() == 0) {
      if ((hl.array() <= 1e-12).all()) return 0.0;
    } else if (qp::ldp(Gl, hl)) {
      return 0.0;
    }
  }
  // Alternating projections between K and v - T.
  Vec a = project(K, v);
  Vec w = project_polar(N, Vec(v - a));
  double d = (v - a - w).norm();
  for (int it = 0; it < 20000; ++it) {
    a = project(K, Vec(v - w));
    w = project_polar(N, Vec(v - a));
    double nd = (v - a - w).norm();
    if (d - nd <= 1e-15 * (1.0 + d)) {
      d = nd;
      break;
    }
    d = nd;
  }
  return d;
}

inline ConvexBody value_at(const MonotoneOperator& A, const Vec& x) { return evaluate(A, x).get(); }

/// A maximizer of <xi, v> over F(x).
inline Vec support_point(const ConvexBody& Fx, const std::vector<Vec>& ext, const Vec& xi) {
  if (const auto* b = std::get_if<Ball>(&Fx.variant())) return b->center + b->radius * xi / xi.norm();
  Vec best = ext.front();
  for (const auto& v : ext)
    if (xi.dot(v) > xi.dot(best)) best = v;
  return best;
}

}  // namespace detail

/// Largest violation of a strong-invariance criterion at x in S ∩ dom A.
inline MarginResult strong_margin(const ClosedSet& S, const MonotoneOperator& A, const CuscoMap& F, const Vec& x,
                                  Criterion variant, std::size_t budget = 16) {
  require_same_dim(S.dim(), x.size(), "strong_margin");
  if (is_weak(variant)) throw Error(ErrorKind::InvalidArgument, "strong_margin: weak variant requested");
  if (!contains(S, x) || !A.in_domain(x)) throw Error(ErrorKind::NotInSet, "strong_margin: x outside S ∩ dom A");
  auto per_piece = detail::piece_normals(S, x, budget);
  MarginResult out;
  const Vec zero = Vec::Zero(x.size());
  auto update = [&](double m, const Vec& xi, const Vec& v) {
    if (out.worst_xi.size() == 0 || m > out.margin) {
      out.margin = m;
      out.worst_xi = xi;
      out.worst_v = v;
    }
  };
  bool any = false;
  for (const auto& r : per_piece) any = any || !r.empty();
  if (!any) {
    out.worst_xi = zero;
    out.worst_v = zero;
    return out;
  }
  out.vacuous = false;
  const ConvexBody Ax = detail::value_at(A, x);
  const ConvexBody Fx = value(F, x);
  auto ext = extreme_points(F, x);

  switch (variant) {
    case Criterion::TangentProjected:
    case Criterion::TangentIntersect: {
      for (const auto& v : ext) {
        double best = kInf;
        for (const auto& rays : per_piece) {
          Mat N = detail::rows_of(rays, x.size());
          double g = 0.0;
          if (variant == Criterion::TangentProjected) {
            Vec w = v - project(Ax, v);
            g = (w - detail::project_polar(N, w)).norm();
          } else {
            g = detail::gap_to_cone(Ax, N, v);
          }
          best = std::min(best, g);
        }
        update(best, zero, v);
      }
      break;
    }
    case Criterion::NormalProjected: {
      auto xis = detail::all_normals(per_piece, budget);
      for (const auto& v : ext) {
        Vec w = v - project(Ax, v);
        for (const auto& xi : xis) update(xi.dot(w), xi, v);
      }
      break;
    }
    case Criterion::NormalInf:
    case Criterion::NormalInfTruncated: {
      auto xis = detail::all_normals(per_piece, budget);
      const double R = norm_bound(F, x) + min_section(A, x).norm();
      for (const auto& xi : xis) {
        double sa = 0.0;
        if (variant == Criterion::NormalInf) {
          sa = support(Ax, xi);
        } else {
          auto proj = [&](const Vec& y) { return project(Ax, y); };
          sa = detail::support_within_ball(proj, zero, R, xi).value;
        }
        Vec v = detail::support_point(Fx, ext, xi);
        update(std::isfinite(sa) ? support(Fx, xi) - sa : -kInf, xi, v);
      }
      break;
    }
    default:
      break;
  }
  return out;
}

/// Largest violation of a weak-invariance criterion at x in S, given the local
/// bound m(x) on ||A°|| near x.
inline MarginResult weak_margin(const ClosedSet& S, const MonotoneOperator& A, const CuscoMap& F, const Vec& x,
                                double m, Criterion variant = Criterion::WeakNormal, std::size_t budget = 16) {
  require_same_dim(S.dim(), x.size(), "weak_margin");
  if (!is_weak(variant)) throw Error(ErrorKind::InvalidArgument, "weak_margin: strong variant requested");
  if (!contains(S, x) || !A.in_domain(x)) throw Error(ErrorKind::NotInSet, "weak_margin: x outside S ∩ dom A");
  if (m < 0.0) throw Error(ErrorKind::InvalidArgument, "weak_margin: m must be >= 0");
  auto per_piece = detail::piece_normals(S, x, budget);
  MarginResult out;
  const Vec zero = Vec::Zero(x.size());
  out.worst_xi = zero;
  out.worst_v = zero;
  bool any = false;
  for (const auto& r : per_piece) any = any || !r.empty();
  if (!any) return out;
  out.vacuous = false;

  const ConvexBody Ax = detail::value_at(A, x);
  const ConvexBody Fx = value(F, x);
  const double R = m + norm_bound(F, x);
  auto projA = [&](const Vec& y) { return project(Ax, y); };
  // Fails early with a clear message when the cut is empty.
  try {
    detail::project_within_ball(projA, zero, R, zero);
  } catch (const Error&) {
    throw Error(ErrorKind::EmptyValue, "bound too small: A(x) misses the ball of radius m(x) + ||F(x)||");
  }
  out.margin = -kInf;
  if (variant == Criterion::WeakNormal) {
    for (const auto& xi : detail::all_normals(per_piece, budget)) {
      double inf_v = -support(Fx, Vec(-xi));
      double m_xi = inf_v - detail::support_within_ball(projA, zero, R, xi).value;
      if (m_xi > out.margin || out.worst_xi.isZero(0.0)) {
        out.margin = m_xi;
        out.worst_xi = xi;
        out.worst_v = detail::support_point(Fx, extreme_points(F, x), Vec(-xi));
      }
    }
    return out;
  }
  // WeakTangent: min over v in F(x), a in the cut, w in T of ||v - a - w||,
  // by cyclic block minimization; then min over pieces.
  auto projK = [&](const Vec& y) { return detail::project_within_ball(projA, zero, R, y); };
  double best = kInf;
  Vec best_v = zero;
  for (const auto& rays : per_piece) {
    Mat N = detail::rows_of(rays, x.size());
    Vec v = min_norm_point(Fx);
    Vec a = projK(v);
    Vec w = detail::project_polar(N, Vec(v - a));
    double d = (v - a - w).norm();
    for (int it = 0; it < 5000 && d > 0.0; ++it) {
      v = project(Fx, Vec(a + w));
      a = projK(Vec(v - w));
      w = detail::project_polar(N, Vec(v - a));
      double nd = (v - a - w).norm();
      bool stalled = d - nd <= 1e-15 * (1.0 + d);
      d = nd;
      if (stalled) break;
    }
    if (d < best) {
      best = d;
      best_v = v;
    }
  }
  out.margin = best;
  out.worst_v = best_v;
  return out;
}

/// Local horizon (r/3) / (m + sup ||F||); +inf when nothing moves.
inline double weak_horizon(double r, double m, double supF) {
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "weak_horizon: r must be > 0");
  if (m < 0.0 || supF < 0.0) throw Error(ErrorKind::InvalidArgument, "weak_horizon: bounds must be >= 0");
  double den = m + supF;
  return den == 0.0 ? kInf : (r / 3.0) / den;
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline std::pair<Vec, double> sampling_ball(const ConvexBody& body) {
  if (body.bounded()) {
    auto [lo, hi] = bounding_box(body);
    return {Vec(0.5 * (lo + hi)), 0.5 * (hi - lo).norm()};
  }
  return {project(body, Vec::Zero(body.dim())), 5.0};
}

inline std::pair<Vec, double> sampling_ball(const ClosedSet& S) {
  Vec lo = Vec::Constant(S.dim(), kInf), hi = Vec::Constant(S.dim(), -kInf);
  for (const auto& p : S.pieces()) {
    auto [c, r] = sampling_ball(p);
    lo = lo.cwiseMin(Vec(c.array() - r));
    hi = hi.cwiseMax(Vec(c.array() + r));
  }
  return {Vec(0.5 * (lo + hi)), 0.5 * (hi - lo).norm()};
}

inline Vec jittered_direction(Eigen::Index n, std::size_t j, std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  if (n == 1) return unit(1, 0) * (j % 2 ? -1.0 : 1.0);
  if (n == 2) {
    // The grid keeps its first node on the axis.
    double a = 2.0 * M_PI * (static_cast<double>(j) + (j == 0 ? 0.0 : u(rng))) / static_cast<double>(count);
    return (Vec(2) << std::cos(a), std::sin(a)).finished();
  }
  Vec d = 2.0 * halton(j + 1, n).array() - 1.0;
  for (Eigen::Index i = 0; i < n; ++i) d[i] += 0.1 * u(rng);
  double nd = d.norm();
  return nd > 1e-12 ? Vec(d / nd) : unit(n, 0);
}

}  // namespace detail

/// Deterministic boundary-biased points of S: angular grids on balls, projected
/// outer clouds on other bodies, with seeded jitter.
inline std::vector<Vec> boundary_samples(const ClosedSet& S, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  const std::size_t np = S.pieces().size();
  for (std::size_t i = 0; i < np; ++i) {
    const auto& p = S.pieces()[i];
    std::size_t k = count / np + (i < count % np ? 1 : 0);
    if (k == 0) continue;
    if (const auto* b = std::get_if<Ball>(&p.variant())) {
      for (std::size_t j = 0; j < k; ++j)
        out.push_back(b->center + b->radius * detail::jittered_direction(p.dim(), j, k, rng));
      continue;
    }
    // A ring just outside the body; rays into vertex regions collapse, so
    // finer grids fill in until k distinct points are found.
    auto [c, r] = detail::sampling_ball(p);
    const double R = 1.05 * r + 1e-3;
    std::vector<Vec> mine;
    auto add = [&](std::size_t j, std::size_t m) {
      Vec y = project(p, Vec(c + R * detail::jittered_direction(p.dim(), j, m, rng)));
      for (const auto& q : mine)
        if ((q - y).norm() <= 1e-9) return;
      mine.push_back(std::move(y));
    };
    for (std::size_t j = 0; j < k; ++j) add(j, k);
    for (std::size_t round = 1; round <= 6 && mine.size() < k; ++round)
      for (std::size_t j = 1; j < (k << round) && mine.size() < k; j += 2) add(j, k << round);
    out.insert(out.end(), mine.begin(), mine.end());
  }
  return dedupe(out, 1e-9);
}

/// Halton points of the sampling box around S, projected onto S.
inline std::vector<Vec> interior_samples(const ClosedSet& S, std::size_t count) {
  auto [c, r] = detail::sampling_ball(S);
  std::vector<Vec> out;
  for (std::size_t j = 0; j < count; ++j) {
    Vec y = c + r * (2.0 * halton(j + 1, S.dim()).array() - 1.0).matrix();
    out.push_back(project_set(S, y).front());
  }
  return dedupe(out, 1e-9);
}

/// Points of dom A near S, for hypothesis checks.
inline std::vector<Vec> domain_samples(const MonotoneOperator& A, const ClosedSet& S, std::size_t count) {
  auto [c, r] = detail::sampling_ball(S);
  auto dom = A.domain();
  std::vector<Vec> out;
  for (std::size_t j = 0; j < count; ++j) {
    Vec y = c + (2.0 * r + 1.0) * (2.0 * halton(j + 1, S.dim()).array() - 1.0).matrix();
    out.push_back(dom ? project(*dom, y) : y);
  }
  return dedupe(out, 1e-9);
}

/// Checks that every projection onto S of a sampled point of dom A lies in
/// S ∩ dom A.
inline HypothesisCheck check_condition_star(const ClosedSet& S, const MonotoneOperator& A, std::size_t samples = 200) {
  HypothesisCheck hc{"projection condition", true, {}};
  for (const auto& y : domain_samples(A, S, samples)) {
    for (const auto& p : project_set(S, y)) {
      if (!contains(S, p) || !A.in_domain(p)) {
        hc.ok = false;
        hc.witnesses.push_back(y);
        break;
      }
    }
  }
  return hc;
}

/// Samples of S checked against dom A.
inline HypothesisCheck check_set_in_domain(const ClosedSet& S, const MonotoneOperator& A, std::size_t samples,
                                           std::uint64_t seed) {
  HypothesisCheck hc{"S inside dom A", true, {}};
  auto pts = boundary_samples(S, samples, seed);
  auto inner = interior_samples(S, samples);
  pts.insert(pts.end(), inner.begin(), inner.end());
  for (const auto& x : pts) {
    if (!A.in_domain(x)) {
      hc.ok = false;
      hc.witnesses.push_back(x);
    }
  }
  return hc;
}

inline double default_tolerance(const ClosedSet& S, const MonotoneOperator& A, Criterion c) {
  bool analytic = S.analytic();
  if (auto d = A.domain()) analytic = analytic && d->analytic();
  return analytic && !is_iterative(c) ? 1e-7 : 1e-4;
}

namespace detail {

inline void finalize(CertificateReport& rep, bool cone_caveat) {
  rep.caveats.push_back("sampled certificate");
  if (cone_caveat) rep.caveats.push_back("sampled-cone caveat");
  bool any_active = false, any_error = false;
  for (const auto& p : rep.points) {
    if (!p.error.empty()) {
      any_error = true;
      continue;
    }
    if (p.margin > -kInf || (p.worst_xi.size() && !p.worst_xi.isZero(0.0))) any_active = true;
    rep.worst_margin = std::max(rep.worst_margin, p.margin);
    if (p.margin > rep.tol) rep.witnesses.push_back({p.x, p.worst_xi, p.worst_v, p.margin});
  }
  if (!any_active) rep.caveats.push_back("no active normals");
  if (!rep.witnesses.empty()) {
    rep.verdict = Verdict::Fail;
  } else if (any_error) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "margin evaluation failed at some points";
  } else {
    rep.verdict = Verdict::Pass;
  }
}

}  // namespace detail

/// Sampled certificate of strong invariance over boundary points of S ∩ dom A.
inline CertificateReport certify_strong(const ClosedSet& S, const MonotoneOperator& A, const CuscoMap& F,
                                        Criterion variant, const SamplerConfig& cfg = {}, double tol = -1.0) {
  CertificateReport rep;
  rep.variant = to_string(variant);
  rep.tol = tol < 0.0 ? default_tolerance(S, A, variant) : tol;
  rep.seed = cfg.seed;
  auto star = check_condition_star(S, A, cfg.hypothesis_points);
  rep.hypothesis_checks.push_back(star);
  if (!star.ok) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "projection condition violated";
    rep.caveats.push_back("sampled certificate");
    return rep;
  }
  std::vector<Vec> pts;
  for (auto& x : boundary_samples(S, cfg.boundary_points, cfg.seed))
    if (A.in_domain(x)) pts.push_back(std::move(x));
  rep.points.resize(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    PointReport& pr = rep.points[i];
    pr.x = pts[i];
    try {
      auto m = strong_margin(S, A, F, pts[i], variant, cfg.normal_budget);
      pr.margin = m.margin;
      pr.worst_xi = m.worst_xi;
      pr.worst_v = m.worst_v;
    } catch (const std::exception& e) {
      pr.error = e.what();
    }
  });
  detail::finalize(rep, S.pieces().size() > 1 || !S.analytic());
  return rep;
}

/// Local bound m(x): supplied, or estimated from samples of S near x.
using LocalBound = std::function<double(const Vec&)>;

/// Sampled certificate of weak invariance; requires S inside dom A.
inline CertificateReport certify_weak(const ClosedSet& S, const MonotoneOperator& A, const CuscoMap& F,
                                      Criterion variant, const SamplerConfig& cfg = {}, double tol = -1.0,
                                      const LocalBound& m = nullptr) {
  CertificateReport rep;
  rep.variant = to_string(variant);
  rep.tol = tol < 0.0 ? default_tolerance(S, A, variant) : tol;
  rep.seed = cfg.seed;
  auto inside = check_set_in_domain(S, A, cfg.hypothesis_points, cfg.seed);
  rep.hypothesis_checks.push_back(inside);
  if (!inside.ok) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "S is not inside dom A";
    rep.caveats.push_back("sampled certificate");
    return rep;
  }
  auto pts = boundary_samples(S, cfg.boundary_points, cfg.seed);
  rep.points.resize(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    PointReport& pr = rep.points[i];
    pr.x = pts[i];
    try {
      double mx = m ? m(pts[i]) : local_min_section_bound(A, &S, pts[i], 0.05, 256);
      pr.local_bound = mx;
      auto r = weak_margin(S, A, F, pts[i], mx, variant, cfg.normal_budget);
      pr.margin = r.margin;
      pr.worst_xi = r.worst_xi;
      pr.worst_v = r.worst_v;
    } catch (const std::exception& e) {
      pr.error = e.what();
    }
  });
  if (!m) rep.caveats.push_back("estimated local bound");
  detail::finalize(rep, S.pieces().size() > 1 || !S.analytic());
  return rep;
}

// ---------------------------------------------------------------------------
// Simulation evidence

struct SimulationRun {
  std::string label;
  Vec v0;
  double max_distance = 0.0;
  double exit_time = kInf;  // first t with d_S > kappa h
  std::string error;
};

struct SimulationEvidence {
  std::vector<SimulationRun> fixed_runs;
  std::optional<SimulationRun> steered_run;
  double threshold = 0.0;
  bool strong_falsified = false;
  bool weak_supported = false;
};

namespace detail {

inline SimulationRun measure(const ClosedSet& S, const Trajectory& tr, double threshold, std::string label) {
  SimulationRun run;
  run.label = std::move(label);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    double d = distance(S, tr.states[k]);
    if (d > run.max_distance) run.max_distance = d;
    if (d > threshold && !std::isfinite(run.exit_time)) run.exit_time = tr.times[k];
  }
  if (!tr.ok()) run.error = tr.error;
  return run;
}

}  // namespace detail

/// One fixed-selection run per extreme point of F(x0), plus a run steered
/// toward S. Any fixed run leaving S by more than kappa h falsifies strong
/// invariance; a steered run staying within it supports weak invariance.
inline SimulationEvidence falsify_by_simulation(const ClosedSet& S, const MonotoneOperator& A, const CuscoMap& F,
                                                const Vec& x0, const IntegratorConfig& cfg, double kappa = 10.0) {
  if (!contains(S, x0)) throw Error(ErrorKind::NotInSet, "falsify_by_simulation: x0 not in S");
  SimulationEvidence ev;
  ev.threshold = kappa * cfg.h;
  auto ext = extreme_points(F, x0);
  ev.fixed_runs.resize(ext.size());
  parallel_for(ext.size(), [&](std::size_t i) {
    IntegratorConfig c = cfg;
    c.mode = FixedSelection{x0, ext[i]};
    c.refine = false;
    auto tr = integrate(A, F, c, x0);
    ev.fixed_runs[i] = detail::measure(S, tr, ev.threshold, "fixed");
    ev.fixed_runs[i].v0 = ext[i];
  });
  for (const auto& r : ev.fixed_runs)
    if (r.max_distance > ev.threshold) ev.strong_falsified = true;
  IntegratorConfig c = cfg;
  c.mode = distance_to(S);
  c.refine = false;
  ev.steered_run = detail::measure(S, integrate(A, F, c, x0), ev.threshold, "steered");
  ev.weak_supported = ev.steered_run->error.empty() && ev.steered_run->max_distance <= ev.threshold;
  return ev;
}

}  // namespace mfi
