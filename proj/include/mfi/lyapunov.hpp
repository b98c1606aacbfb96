#pragma once

// Strong a-Lyapunov pairs (V, W): subgradient and directional criteria,
// sampled certificates, the Pasch-Hausdorff envelope W_k, the epigraph lift
// and trajectory-level checks of
//   e^{at} V(x(t)) + int_0^t W(x) <= V(x0).

#include "mfi/invariance.hpp"

namespace mfi {

/// 1/2 x'Qx + b'x + c, Q symmetric PSD.
struct ConvexQuadratic {
  Mat Q;
  Vec b;
  double c = 0.0;
};

/// weight ||x||^p, p in {1, 2}.
struct NormPower {
  int p = 2;
  double weight = 1.0;
  Eigen::Index n = 0;
};

/// max_i (g_i'x + c_i); rows of G are the g_i.
struct MaxAffine {
  Mat G;
  Vec c;
};

/// Indicator of a convex body plus a quadratic.
struct IndicatorPlus {
  ConvexBody body;
  ConvexQuadratic smooth;
};

namespace detail {

inline void check_symmetric_psd(const Mat& Q, const char* what) {
  check_psd(Q, what);
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + Q.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::InvalidArgument, std::string(what) + ": Q must be symmetric");
}

}  // namespace detail

class ScalarFn {
 public:
  using Variant = std::variant<ConvexQuadratic, NormPower, MaxAffine, IndicatorPlus>;

  static ScalarFn quadratic(Mat Q, Vec b, double c = 0.0) {
    detail::check_symmetric_psd(Q, "ConvexQuadratic");
    require_same_dim(Q.rows(), b.size(), "ConvexQuadratic");
    return ScalarFn(ConvexQuadratic{std::move(Q), std::move(b), c});
  }
  static ScalarFn zero(Eigen::Index n) { return quadratic(Mat::Zero(n, n), Vec::Zero(n)); }
  static ScalarFn norm_power(int p, double weight, Eigen::Index n) {
    if (p != 1 && p != 2) throw Error(ErrorKind::InvalidArgument, "NormPower: p must be 1 or 2");
    if (!(weight >= 0.0) || !std::isfinite(weight)) throw Error(ErrorKind::InvalidArgument, "NormPower: weight must be >= 0");
    return ScalarFn(NormPower{p, weight, n});
  }
  static ScalarFn max_affine(Mat G, Vec c) {
    if (G.rows() == 0) throw Error(ErrorKind::InvalidArgument, "MaxAffine needs at least one piece");
    require_same_dim(G.rows(), c.size(), "MaxAffine");
    return ScalarFn(MaxAffine{std::move(G), std::move(c)});
  }
  static ScalarFn indicator_plus(ConvexBody body, ConvexQuadratic smooth) {
    detail::check_symmetric_psd(smooth.Q, "IndicatorPlus");
    require_same_dim(body.dim(), smooth.Q.rows(), "IndicatorPlus");
    require_same_dim(body.dim(), smooth.b.size(), "IndicatorPlus");
    return ScalarFn(IndicatorPlus{std::move(body), std::move(smooth)});
  }
  static ScalarFn indicator(ConvexBody body) {
    const auto n = body.dim();
    return indicator_plus(std::move(body), {Mat::Zero(n, n), Vec::Zero(n), 0.0});
  }

  const Variant& variant() const { return v_; }
  std::string kind() const {
    static const char* names[] = {"ConvexQuadratic", "NormPower", "MaxAffine", "IndicatorPlus"};
    return names[v_.index()];
  }
  Eigen::Index dim() const {
    return std::visit(overloaded{
                          [](const ConvexQuadratic& q) { return q.Q.rows(); },
                          [](const NormPower& p) { return p.n; },
                          [](const MaxAffine& m) { return m.G.cols(); },
                          [](const IndicatorPlus& i) { return i.body.dim(); },
                      },
                      v_);
  }
  /// Locally Lipschitz on its domain (trivial singular subdifferential).
  bool lipschitz() const { return !std::holds_alternative<IndicatorPlus>(v_); }

 private:
  explicit ScalarFn(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

namespace detail {

inline double eval_quad(const ConvexQuadratic& q, const Vec& x) { return 0.5 * x.dot(q.Q * x) + q.b.dot(x) + q.c; }
inline Vec grad_quad(const ConvexQuadratic& q, const Vec& x) { return q.Q * x + q.b; }

inline std::vector<Eigen::Index> active_pieces(const MaxAffine& m, const Vec& x) {
  Vec vals = m.G * x + m.c;
  double top = vals.maxCoeff();
  double tol = 1e-12 * (1.0 + std::abs(top));
  std::vector<Eigen::Index> act;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals[i] >= top - tol) act.push_back(i);
  return act;
}

}  // namespace detail

/// V(x), +inf outside dom V.
inline double eval(const ScalarFn& V, const Vec& x) {
  require_same_dim(V.dim(), x.size(), "eval");
  return std::visit(overloaded{
                        [&](const ConvexQuadratic& q) { return detail::eval_quad(q, x); },
                        [&](const NormPower& p) { return p.weight * (p.p == 1 ? x.norm() : x.squaredNorm()); },
                        [&](const MaxAffine& m) { return (m.G * x + m.c).maxCoeff(); },
                        [&](const IndicatorPlus& i) {
                          return contains(i.body, x) ? detail::eval_quad(i.smooth, x) : kInf;
                        },
                    },
                    V.variant());
}

inline bool in_dom(const ScalarFn& V, const Vec& x) { return std::isfinite(eval(V, x)); }

/// Samples of the subdifferential at x: the exact set when it is finite,
/// extreme points plus interior mixtures otherwise.
inline std::vector<Vec> subgradients(const ScalarFn& V, const Vec& x, std::size_t budget = 16) {
  if (!in_dom(V, x)) throw Error(ErrorKind::NotInSet, "subgradients: x outside dom V");
  const Eigen::Index n = x.size();
  return std::visit(
      overloaded{
          [&](const ConvexQuadratic& q) { return std::vector<Vec>{detail::grad_quad(q, x)}; },
          [&](const NormPower& p) {
            if (p.p == 2) return std::vector<Vec>{Vec(2.0 * p.weight * x)};
            if (x.norm() > 0.0) return std::vector<Vec>{Vec(p.weight * x / x.norm())};
            // weight * closed unit ball: the frame, then more sphere points and the center.
            std::vector<Vec> out;
            for (Eigen::Index i = 0; i < n; ++i) {
              out.push_back(p.weight * unit(n, i));
              out.push_back(-p.weight * unit(n, i));
            }
            for (const auto& d : detail::sphere_directions(n, budget)) out.push_back(p.weight * d);
            out.push_back(Vec::Zero(n));
            return dedupe(out, 1e-12);
          },
          [&](const MaxAffine& m) {
            std::vector<Vec> out;
            auto act = detail::active_pieces(m, x);
            for (auto i : act) out.push_back(m.G.row(i).transpose());
            out = dedupe(out, 1e-12);
            const std::size_t k = out.size();
            for (std::size_t i = 0; i < k && out.size() < budget; ++i)
              for (std::size_t j = i + 1; j < k && out.size() < budget; ++j) out.push_back(0.5 * (out[i] + out[j]));
            if (k > 2) {
              Vec c = Vec::Zero(n);
              for (std::size_t i = 0; i < k; ++i) c += out[i];
              out.push_back(c / static_cast<double>(k));
            }
            return out;
          },
          [&](const IndicatorPlus& ind) {
            Vec g = detail::grad_quad(ind.smooth, x);
            std::vector<Vec> out{g};
            for (const auto& r : normal_rays(ind.body, x, budget)) out.push_back(g + r);
            return out;
          },
      },
      V.variant());
}

/// Unit rays of the singular subdifferential; empty ({0}) for Lipschitz variants.
inline std::vector<Vec> singular_subgradients(const ScalarFn& V, const Vec& x, std::size_t budget = 16) {
  if (!in_dom(V, x)) throw Error(ErrorKind::NotInSet, "singular_subgradients: x outside dom V");
  if (const auto* ind = std::get_if<IndicatorPlus>(&V.variant())) return normal_rays(ind->body, x, budget);
  return {};
}

/// Contingent directional derivative V'(x; d); +inf when d leaves dom V.
inline double directional_derivative(const ScalarFn& V, const Vec& x, const Vec& d) {
  if (!in_dom(V, x)) throw Error(ErrorKind::NotInSet, "directional_derivative: x outside dom V");
  require_same_dim(V.dim(), d.size(), "directional_derivative");
  return std::visit(overloaded{
                        [&](const ConvexQuadratic& q) { return detail::grad_quad(q, x).dot(d); },
                        [&](const NormPower& p) {
                          if (p.p == 2) return 2.0 * p.weight * x.dot(d);
                          double nx = x.norm();
                          return nx > 0.0 ? p.weight * x.dot(d) / nx : p.weight * d.norm();
                        },
                        [&](const MaxAffine& m) {
                          double best = -kInf;
                          for (auto i : detail::active_pieces(m, x)) best = std::max(best, m.G.row(i).dot(d));
                          return best;
                        },
                        [&](const IndicatorPlus& ind) {
                          if (tangent_gap(ind.body, x, d) > 1e-9 * (1.0 + d.norm())) return kInf;
                          return detail::grad_quad(ind.smooth, x).dot(d);
                        },
                    },
                    V.variant());
}

struct LyapunovPair {
  ScalarFn V;
  ScalarFn W;
  double a = 0.0;
};

enum class LyapunovCriterion {
  Subgradient,           // sup_xi sup_v inf_{A(x)} <xi, v - x*> + aV + W, plus the singular part
  SubgradientTruncated,  // A(x) cut to radius ||F(x)|| + m(x)
  Directional,           // sup_v V'(x; v - proj_{A(x)} v) + aV + W
  DirectionalTruncated,  // sup_v inf over the cut A(x) of V'(x; v - x*) + aV + W
};

inline const std::vector<std::pair<LyapunovCriterion, std::string>>& lyapunov_criterion_names() {
  static const std::vector<std::pair<LyapunovCriterion, std::string>> names{
      {LyapunovCriterion::Subgradient, "subgradient"},
      {LyapunovCriterion::SubgradientTruncated, "subgradient-truncated"},
      {LyapunovCriterion::Directional, "directional"},
      {LyapunovCriterion::DirectionalTruncated, "directional-truncated"},
  };
  return names;
}

inline std::string to_string(LyapunovCriterion c) {
  for (const auto& [k, s] : lyapunov_criterion_names())
    if (k == c) return s;
  return "?";
}

inline LyapunovCriterion parse_lyapunov_criterion(const std::string& s) {
  for (const auto& [k, name] : lyapunov_criterion_names())
    if (name == s) return k;
  throw Error(ErrorKind::InvalidArgument, "unknown Lyapunov variant '" + s + "'");
}

inline bool is_truncated(LyapunovCriterion c) {
  return c == LyapunovCriterion::SubgradientTruncated || c == LyapunovCriterion::DirectionalTruncated;
}

namespace detail {

/// Points of F(x) over which the sup in v is taken: the extreme points, plus
/// a sphere of samples when the value is a ball.
inline std::vector<Vec> velocity_samples(const CuscoMap& F, const Vec& x, std::size_t budget) {
  auto pts = extreme_points(F, x);
  ConvexBody Fx = value(F, x);
  if (const auto* b = std::get_if<Ball>(&Fx.variant()); b && b->radius > 0.0)
    for (const auto& d : sphere_directions(x.size(), budget)) pts.push_back(b->center + b->radius * d);
  return dedupe(pts, 1e-12);
}

}  // namespace detail

/// Largest left-hand side of the chosen criterion at x in dom V ∩ dom A.
/// `m` is the local bound on ||A°|| used by the truncated variants.
inline MarginResult lyapunov_margin(const LyapunovPair& pair, const MonotoneOperator& A, const CuscoMap& F,
                                    const Vec& x, LyapunovCriterion variant, double m = 0.0,
                                    std::size_t budget = 16) {
  require_same_dim(pair.V.dim(), x.size(), "lyapunov_margin");
  require_same_dim(pair.W.dim(), x.size(), "lyapunov_margin");
  if (!in_dom(pair.V, x) || !A.in_domain(x))
    throw Error(ErrorKind::NotInSet, "lyapunov_margin: x outside dom V ∩ dom A");
  const Vec zero = Vec::Zero(x.size());
  const double base = pair.a * eval(pair.V, x) + eval(pair.W, x);
  const ConvexBody Ax = detail::value_at(A, x);
  const ConvexBody Fx = value(F, x);
  auto projA = [&](const Vec& y) { return project(Ax, y); };
  const double R = norm_bound(F, x) + m;
  if (is_truncated(variant)) {
    try {
      detail::project_within_ball(projA, zero, R, zero);
    } catch (const Error&) {
      throw Error(ErrorKind::EmptyValue, "bound too small: A(x) misses the ball of radius ||F(x)|| + m(x)");
    }
  }
  auto sigmaA = [&](const Vec& xi) {
    if (is_truncated(variant)) return detail::support_within_ball(projA, zero, R, xi).value;
    return support(Ax, xi);
  };

  MarginResult out;
  out.vacuous = false;
  out.margin = -kInf;
  out.worst_xi = zero;
  out.worst_v = zero;
  auto update = [&](double val, const Vec& xi, const Vec& v) {
    if (val > out.margin) {
      out.margin = val;
      out.worst_xi = xi;
      out.worst_v = v;
    }
  };

  if (variant == LyapunovCriterion::Subgradient || variant == LyapunovCriterion::SubgradientTruncated) {
    auto ext = extreme_points(F, x);
    auto term = [&](const Vec& xi) {
      double sa = sigmaA(xi);
      return std::isfinite(sa) ? support(Fx, xi) - sa : -kInf;
    };
    for (const auto& xi : subgradients(pair.V, x, budget)) update(term(xi) + base, xi, detail::support_point(Fx, ext, xi));
    for (const auto& xi : singular_subgradients(pair.V, x, budget)) update(term(xi), xi, detail::support_point(Fx, ext, xi));
    return out;
  }

  const auto vs = detail::velocity_samples(F, x, budget);
  if (variant == LyapunovCriterion::Directional) {
    for (const auto& v : vs) update(directional_derivative(pair.V, x, Vec(v - project(Ax, v))) + base, zero, v);
    return out;
  }
  // DirectionalTruncated: the inner infimum over candidate points of the cut
  // (the projection of v and the support points of the subgradient samples),
  // which bounds the exact value from above.
  auto projK = [&](const Vec& y) { return detail::project_within_ball(projA, zero, R, y); };
  std::vector<Vec> cands;
  for (const auto& xi : subgradients(pair.V, x, budget))
    cands.push_back(detail::support_within_ball(projA, zero, R, xi).maximizer);
  for (const auto& v : vs) {
    double best = directional_derivative(pair.V, x, Vec(v - projK(v)));
    for (const auto& c : cands) best = std::min(best, directional_derivative(pair.V, x, Vec(v - c)));
    update(best + base, zero, v);
  }
  return out;
}

struct LyapunovRegion {
  Vec center;
  double radius = 3.0;
  std::size_t count = 500;
};

/// Points of dom V in the ball of the region: Halton points of the ball, and
/// for constrained V also boundary and interior samples of the body.
inline std::vector<Vec> dom_samples(const ScalarFn& V, const LyapunovRegion& region, std::uint64_t seed) {
  const Eigen::Index n = V.dim();
  Vec c = region.center.size() ? region.center : Vec::Zero(n);
  std::vector<Vec> out;
  if (const auto* ind = std::get_if<IndicatorPlus>(&V.variant())) {
    ClosedSet body(ind->body);
    out = boundary_samples(body, region.count / 2, seed);
    auto inner = interior_samples(body, region.count - region.count / 2);
    out.insert(out.end(), inner.begin(), inner.end());
  } else {
    for (std::uint64_t k = 1; out.size() < region.count && k < 50 * region.count + 50; ++k) {
      Vec h = 2.0 * halton(k, n).array() - 1.0;
      if (h.norm() <= 1.0) out.push_back(c + region.radius * h);
    }
  }
  std::vector<Vec> keep;
  for (auto& x : out)
    if ((x - c).norm() <= region.radius * (1.0 + 1e-12) && in_dom(V, x)) keep.push_back(std::move(x));
  return dedupe(keep, 1e-12);
}

/// Largest T with 3 (||F(x0)|| + ||A°(x0)||) T e^{cT} <= rho; +inf if the
/// system is at rest at x0.
inline double local_horizon(const CuscoMap& F, const MonotoneOperator& A, const Vec& x0, double c, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "local_horizon: rho must be > 0");
  if (growth_bound(F, A, x0, c, 1.0) == 0.0) return kInf;
  double lo = 0.0, hi = 1.0;
  while (growth_bound(F, A, x0, c, hi) < rho) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (growth_bound(F, A, x0, c, mid) <= rho ? lo : hi) = mid;
  }
  return lo;
}

struct LyapunovReport {
  CertificateReport cert;
  double a = 0.0;
  std::optional<double> horizon;  // local criterion only
};

/// Sampled certificate over dom V inside the region. Checks dom V ⊂ dom A
/// and W >= 0 on the samples first.
inline LyapunovReport certify_lyapunov(const LyapunovPair& pair, const MonotoneOperator& A, const CuscoMap& F,
                                       LyapunovCriterion variant, const LyapunovRegion& region = {},
                                       std::uint64_t seed = 1, double tol = -1.0, const LocalBound& m = nullptr,
                                       std::size_t budget = 16) {
  if (pair.a < 0.0) throw Error(ErrorKind::InvalidArgument, "certify_lyapunov: a must be >= 0");
  LyapunovReport out;
  out.a = pair.a;
  CertificateReport& rep = out.cert;
  rep.variant = to_string(variant);
  bool analytic = true;
  if (auto d = A.domain()) analytic = d->analytic();
  if (const auto* ind = std::get_if<IndicatorPlus>(&pair.V.variant())) analytic = analytic && ind->body.analytic();
  rep.tol = tol >= 0.0 ? tol : (analytic && variant != LyapunovCriterion::DirectionalTruncated ? 1e-7 : 1e-4);
  rep.seed = seed;
  rep.caveats.push_back("sampled certificate");
  auto pts = dom_samples(pair.V, region, seed);

  HypothesisCheck dom{"dom V inside dom A", true, {}};
  HypothesisCheck wpos{"W >= 0", true, {}};
  for (const auto& x : pts) {
    if (!A.in_domain(x)) {
      dom.ok = false;
      dom.witnesses.push_back(x);
    }
    if (eval(pair.W, x) < -kTauGeo) {
      wpos.ok = false;
      wpos.witnesses.push_back(x);
    }
  }
  rep.hypothesis_checks = {dom, wpos};
  if (!dom.ok || !wpos.ok) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = !dom.ok ? "dom V is not inside dom A" : "W takes negative values";
    return out;
  }
  rep.points.resize(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    PointReport& pr = rep.points[i];
    pr.x = pts[i];
    try {
      double mx = 0.0;
      if (is_truncated(variant)) {
        mx = m ? m(pts[i]) : local_min_section_bound(A, nullptr, pts[i], 0.05, 256);
        pr.local_bound = mx;
      }
      auto r = lyapunov_margin(pair, A, F, pts[i], variant, mx, budget);
      pr.margin = r.margin;
      pr.worst_xi = r.worst_xi;
      pr.worst_v = r.worst_v;
    } catch (const std::exception& e) {
      pr.error = e.what();
    }
  });
  if (is_truncated(variant) && !m) rep.caveats.push_back("estimated local bound");
  bool any_error = false;
  for (const auto& p : rep.points) {
    if (!p.error.empty()) {
      any_error = true;
      continue;
    }
    rep.worst_margin = std::max(rep.worst_margin, p.margin);
    if (p.margin > rep.tol) rep.witnesses.push_back({p.x, p.worst_xi, p.worst_v, p.margin});
  }
  if (!rep.witnesses.empty()) {
    rep.verdict = Verdict::Fail;
  } else if (any_error || pts.empty()) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = pts.empty() ? "no samples of dom V in the region" : "margin evaluation failed at some points";
  } else {
    rep.verdict = Verdict::Pass;
  }
  return out;
}

/// Local criterion around x0: certificate on B(x0, rho) plus the horizon on
/// which trajectories from x0 stay in that ball.
inline LyapunovReport certify_lyapunov_local(const LyapunovPair& pair, const MonotoneOperator& A, const CuscoMap& F,
                                             LyapunovCriterion variant, const Vec& x0, double rho,
                                             std::size_t count = 200, std::uint64_t seed = 1, double tol = -1.0) {
  auto rep = certify_lyapunov(pair, A, F, variant, {x0, rho, count}, seed, tol);
  rep.horizon = local_horizon(F, A, x0, F.lipschitz(), rho);
  return rep;
}

// ---------------------------------------------------------------------------
// Pasch-Hausdorff envelope

namespace detail {

/// One subgradient of a convex W at a point of its domain.
inline Vec any_subgradient(const ScalarFn& W, const Vec& z) {
  return std::visit(overloaded{
                        [&](const ConvexQuadratic& q) { return grad_quad(q, z); },
                        [&](const NormPower&) { return subgradients(W, z, 1).front(); },
                        [&](const MaxAffine& m) {
                          Eigen::Index i = 0;
                          (m.G * z + m.c).maxCoeff(&i);
                          return Vec(m.G.row(i).transpose());
                        },
                        [&](const IndicatorPlus& ind) { return grad_quad(ind.smooth, z); },
                    },
                    W.variant());
}

}  // namespace detail

/// W_k(x) = inf_z W(z) + k ||x - z||. Closed forms for NormPower and for points
/// where a subgradient of norm <= k exists; otherwise the central-cut ellipsoid
/// method on the ball ||z - x|| <= W_k bound / k, stopped when the certified
/// gap is below 1e-11 (1 + W_k). W >= 0 is assumed; a negative value met
/// during the search is an error.
inline double pasch_hausdorff(const ScalarFn& W, double k, const Vec& x) {
  if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "pasch_hausdorff: k must be > 0");
  require_same_dim(W.dim(), x.size(), "pasch_hausdorff");
  if (const auto* p = std::get_if<NormPower>(&W.variant())) {
    const double r = x.norm(), w = p->weight;
    if (p->p == 1) return std::min(w, k) * r;
    if (w == 0.0) return 0.0;
    const double s = k / (2.0 * w);  // stationary radius along the ray
    return s >= r ? w * r * r : k * r - k * k / (4.0 * w);
  }
  const double wx = eval(W, x);
  if (std::isfinite(wx)) {
    // Convex W: x minimizes W + k||x - .|| iff some subgradient has norm <= k.
    double g = kInf;
    if (const auto* m = std::get_if<MaxAffine>(&W.variant())) {
      auto act = detail::active_pieces(*m, x);
      Mat V(x.size(), static_cast<Eigen::Index>(act.size()));
      for (std::size_t i = 0; i < act.size(); ++i) V.col(static_cast<Eigen::Index>(i)) = m->G.row(act[i]).transpose();
      g = qp::min_norm_hull(V).point.norm();
    } else if (const auto* q = std::get_if<ConvexQuadratic>(&W.variant())) {
      g = detail::grad_quad(*q, x).norm();
    }
    if (g <= k) return wx;
  }
  // Any minimizer z satisfies k||x - z|| <= W(p) + k||x - p|| for the nearest
  // domain point p, which fixes the starting ball.
  const Eigen::Index n = x.size();
  const ConvexBody* body = nullptr;
  if (const auto* ind = std::get_if<IndicatorPlus>(&W.variant())) body = &ind->body;
  Vec start = body ? project(*body, x) : x;
  const double w0 = eval(W, start);
  if (w0 < 0.0) throw Error(ErrorKind::InvalidArgument, "pasch_hausdorff: W must be >= 0");
  double best = w0 + k * (x - start).norm(), lower = 0.0;
  const double R = best / k + 1e-12;
  Vec z = x;
  Mat P = Mat::Identity(n, n) * (R * R);
  const int max_iter = 400 * static_cast<int>(n * n) + 400;
  for (int it = 0; it < max_iter && best - lower > 1e-11 * (1.0 + best); ++it) {
    Vec g;
    double wz = eval(W, z);
    if (!std::isfinite(wz)) {
      g = z - project(*body, z);  // feasibility cut
    } else {
      if (wz < 0.0) throw Error(ErrorKind::InvalidArgument, "pasch_hausdorff: W must be >= 0");
      const double dz = (z - x).norm();
      const double f = wz + k * dz;
      best = std::min(best, f);
      g = detail::any_subgradient(W, z);
      if (dz > 0.0) g += k * (z - x) / dz;
    }
    const double gPg = g.dot(P * g);
    if (!(gPg > 0.0)) break;  // zero subgradient: z is optimal
    const double width = std::sqrt(gPg);
    if (std::isfinite(wz)) lower = std::max(lower, wz + k * (z - x).norm() - width);
    const Vec Pg = P * g / width;
    if (n == 1) {
      z -= 0.5 * Pg;
      P *= 0.25;
    } else {
      const double nd = static_cast<double>(n);
      z -= Pg / (nd + 1.0);
      P = (nd * nd / (nd * nd - 1.0)) * (P - (2.0 / (nd + 1.0)) * Pg * Pg.transpose());
      P = 0.5 * (P + P.transpose());
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Epigraph lift

/// (x, alpha, beta, gamma) -> e^{a beta} V(x) + alpha.
struct LiftedValue {
  ScalarFn V;
  double a = 0.0;

  double operator()(const Vec& z) const {
    const Eigen::Index n = V.dim();
    require_same_dim(n + 3, z.size(), "LiftedValue");
    double v = eval(V, z.head(n));
    return std::isfinite(v) ? std::exp(a * z[n + 1]) * v + z[n] : kInf;
  }
};

struct EpigraphLift {
  MonotoneOperator A;
  CuscoMap F;
  LiftedValue V;
  /// (L^2 + k^2)^{1/2}, the Lipschitz constant of the lifted map.
  double lipschitz = 0.0;
};

/// A(x) x {0} on R^{n+3} and (F(x), W_k(x), 1, 0).
inline EpigraphLift epigraph_transform(const LyapunovPair& pair, const MonotoneOperator& A, const CuscoMap& F,
                                       double k) {
  if (!(k >= 1.0)) throw Error(ErrorKind::InvalidArgument, "epigraph_transform: k must be >= 1");
  require_same_dim(A.dim(), F.dim(), "epigraph_transform");
  ScalarFn W = pair.W;
  auto tail = [W, k](const Vec& x) { return (Vec(2) << pasch_hausdorff(W, k, x), 1.0).finished(); };
  return {MonotoneOperator::lifted(A, 3), CuscoMap::lifted(F, tail, 2, k, 3), {pair.V, pair.a},
          std::hypot(F.lipschitz(), k)};
}

// ---------------------------------------------------------------------------
// Trajectory check

struct TrajectoryCheck {
  bool ok = true;
  double max_violation = -kInf;
  std::size_t worst_index = 0;
  double worst_t = 0.0;
  double constant = 0.0;  // C in tol = C h
  double tol = 0.0;
  double v0 = 0.0;
  std::string error;
};

/// max_k e^{a t_k} V(x_k) + int_0^{t_k} W - V(x0) with trapezoid quadrature,
/// against tol = C h, C = max(1, (a sup V + Lip(W) sup ||x'||) max(1, T))
/// estimated on the run. The factor T absorbs the O(h t) drift of the scheme.
inline TrajectoryCheck verify_along_trajectory(const LyapunovPair& pair, const Trajectory& tr) {
  TrajectoryCheck out;
  if (tr.states.empty()) throw Error(ErrorKind::InvalidArgument, "verify_along_trajectory: empty trajectory");
  const std::size_t N = tr.states.size();
  std::vector<double> V(N), W(N);
  for (std::size_t k = 0; k < N; ++k) {
    V[k] = eval(pair.V, tr.states[k]);
    W[k] = eval(pair.W, tr.states[k]);
    if (!std::isfinite(V[k])) {
      out.ok = false;
      out.worst_index = k;
      out.worst_t = tr.times[k];
      out.max_violation = kInf;
      out.error = "V infinite at step " + std::to_string(k);
      return out;
    }
  }
  double supV = 0.0, lipW = 0.0, speed = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    supV = std::max(supV, std::abs(V[k]));
    if (k < tr.velocities.size()) speed = std::max(speed, tr.velocities[k].norm());
    if (k + 1 < N) {
      double d = (tr.states[k + 1] - tr.states[k]).norm();
      if (d > 1e-14) lipW = std::max(lipW, std::abs(W[k + 1] - W[k]) / d);
    }
  }
  out.constant = std::max(1.0, (pair.a * supV + lipW * speed) * std::max(1.0, tr.times.back()));
  out.tol = out.constant * tr.h;
  out.v0 = V[0];
  double integral = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    if (k > 0) integral += 0.5 * (tr.times[k] - tr.times[k - 1]) * (W[k] + W[k - 1]);
    double viol = std::exp(pair.a * tr.times[k]) * V[k] + integral - V[0];
    if (viol > out.max_violation) {
      out.max_violation = viol;
      out.worst_index = k;
      out.worst_t = tr.times[k];
    }
  }
  out.ok = out.max_violation <= out.tol;
  return out;
}

}  // namespace mfi
