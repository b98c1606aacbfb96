#pragma once

// Catching-up discretization of x' in F(x) - A(x):
//   x_{k+1} = J_{hA}(x_k + h v_k),  v_k in F(x_k),
// plus the a priori growth, divergence and Gronwall bounds.

#include "mfi/cusco_maps.hpp"
#include "mfi/monotone_operators.hpp"

#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>

namespace mfi {

/// v_k = f(x_k) for a Lipschitz selection f through (anchor, v0). Missing
/// fields default to the start point and the least-norm element of F(anchor).
struct FixedSelection {
  std::optional<Vec> anchor;
  std::optional<Vec> v0;
};

/// v_k is the extreme point of F(x_k) minimizing objective(x_{k+1}).
struct Steered {
  std::function<double(const Vec&)> objective;
  std::string label = "custom";
};

inline Steered distance_to(ClosedSet set) {
  return Steered{[s = std::move(set)](const Vec& x) { return distance(s, x); }, "distance"};
}

struct IntegratorConfig {
  double h = 1e-3;
  double T = 5.0;
  std::variant<FixedSelection, Steered> mode = FixedSelection{};
  bool refine = false;
};

struct Trajectory {
  double h = 0.0;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> velocities;
  std::vector<Vec> selections;
  /// Selection Lipschitz constant (FixedSelection mode only).
  std::optional<double> selection_constant;
  /// Index of the step that failed; the trajectory stops there.
  std::optional<std::size_t> error_index;
  std::string error;
  /// 2 x_{h/2}(T) - x_h(T) when refinement was requested.
  std::optional<Vec> extrapolated_final;

  bool ok() const { return !error_index; }
  const Vec& final_state() const { return states.back(); }
};

/// One catching-up step.
inline Vec step(const MonotoneOperator& A, const Vec& v, const Vec& x, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step: h must be > 0");
  return resolvent(A, h, Vec(x + h * v));
}

/// v - proj_{A(x)}(v), the least-norm element of v - A(x).
inline Vec right_derivative(const MonotoneOperator& A, const CuscoMap& F, const Vec& x, const Vec& v) {
  require_same_dim(F.dim(), x.size(), "right_derivative");
  if (!A.in_domain(x)) throw Error(ErrorKind::NotInSet, "right_derivative: x outside dom A");
  double gap = distance(value(F, x), v);
  if (gap > kTauGeo) throw Error(ErrorKind::NotInSet, "right_derivative: v not in F(x), violation " + std::to_string(gap));
  return v - project_onto_value(A, x, v);
}

namespace detail {

inline std::size_t step_count(double h, double T) {
  if (!(h > 0.0) || !(T > 0.0) || h > T) throw Error(ErrorKind::InvalidArgument, "integrate: need 0 < h <= T");
  double n = std::ceil(T / h - 1e-9);
  if (n > 1e7) throw Error(ErrorKind::InvalidArgument, "integrate: T/h exceeds 1e7");
  return static_cast<std::size_t>(n);
}

inline Trajectory integrate_once(const MonotoneOperator& A, const CuscoMap& F, const IntegratorConfig& cfg,
                                 const Vec& x0) {
  require_same_dim(A.dim(), x0.size(), "integrate");
  require_same_dim(F.dim(), x0.size(), "integrate");
  require_finite(x0, "integrate");
  if (auto dom = A.domain(); dom && distance(*dom, x0) > std::max(kTauGeo, dom->accuracy()))
    throw Error(ErrorKind::NotInSet, "integrate: x0 outside the closure of dom A");

  const std::size_t N = step_count(cfg.h, cfg.T);
  const double h = cfg.h;
  Trajectory tr;
  tr.h = h;
  tr.times.reserve(N + 1);
  tr.states.reserve(N + 1);

  std::function<Vec(const Vec&)> pick;
  std::function<double(const Vec&)> objective;
  if (const auto* fs = std::get_if<FixedSelection>(&cfg.mode)) {
    Vec anchor = fs->anchor.value_or(x0);
    Vec v0 = fs->v0 ? *fs->v0 : min_norm_point(value(F, anchor));
    Selection sel = lipschitz_selection(F, anchor, v0);
    tr.selection_constant = sel.constant;
    pick = sel.f;
  } else {
    objective = std::get<Steered>(cfg.mode).objective;
    if (!objective) throw Error(ErrorKind::InvalidArgument, "integrate: steered mode needs an objective");
  }

  Vec x = x0;
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  for (std::size_t k = 0; k < N; ++k) {
    try {
      Vec v, next;
      if (pick) {
        v = pick(x);
        next = step(A, v, x, h);
      } else {
        auto cands = extreme_points(F, x);
        sort_lex(cands);
        double best = kInf;
        for (const auto& c : cands) {
          Vec y = step(A, c, x, h);
          double val = objective(y);
          if (next.size() == 0 || val < best) {
            best = val;
            v = c;
            next = std::move(y);
          }
        }
      }
      require_finite(next, "integrate");
      tr.selections.push_back(v);
      tr.velocities.push_back((next - x) / h);
      x = std::move(next);
      tr.times.push_back(static_cast<double>(k + 1) * h);
      tr.states.push_back(x);
    } catch (const std::exception& e) {
      tr.error_index = k;
      tr.error = e.what();
      break;
    }
  }
  // The last grid point has no forward difference; use the right derivative.
  Vec vlast = pick ? pick(x) : (tr.selections.empty() ? Vec(min_norm_point(value(F, x))) : tr.selections.back());
  tr.selections.push_back(vlast);
  try {
    tr.velocities.push_back(A.in_domain(x) ? Vec(vlast - project_onto_value(A, x, vlast)) : Vec(Vec::Zero(x.size())));
  } catch (const std::exception&) {
    tr.velocities.push_back(Vec::Zero(x.size()));
  }
  return tr;
}

}  // namespace detail

inline Trajectory integrate(const MonotoneOperator& A, const CuscoMap& F, const IntegratorConfig& cfg, const Vec& x0) {
  Trajectory tr = detail::integrate_once(A, F, cfg, x0);
  if (cfg.refine && tr.ok()) {
    IntegratorConfig half = cfg;
    half.h = cfg.h / 2.0;
    half.refine = false;
    Trajectory fine = detail::integrate_once(A, F, half, x0);
    if (fine.ok()) tr.extrapolated_final = 2.0 * fine.final_state() - tr.final_state();
  }
  return tr;
}

/// factor * (||F(x0)|| + ||A°(x0)||) t e^{ct}; factor 3 bounds ||x(t) - x0||,
/// factor 4 bounds the distance between two solutions from x0.
inline double growth_bound(const CuscoMap& F, const MonotoneOperator& A, const Vec& x0, double c, double t,
                           double factor = 3.0) {
  if (t < 0.0 || c < 0.0) throw Error(ErrorKind::InvalidArgument, "growth_bound: need t >= 0 and c >= 0");
  if (t == 0.0) return 0.0;
  return factor * (norm_bound(F, x0) + min_section(A, x0).norm()) * t * std::exp(c * t);
}

inline double divergence_bound(const CuscoMap& F, const MonotoneOperator& A, const Vec& x0, double c, double t) {
  return growth_bound(F, A, x0, c, t, 4.0);
}

/// Bound on w(t) when (1 - alpha) w' <= a w + b w^alpha, w(t0) = w0:
///   (w0^{1-alpha} e^{int a} + int_t0^t e^{int_s^t a} b(s) ds)^{1/(1-alpha)}.
/// Simpson on 10^4 panels for both integrals.
inline double gronwall_bound(const std::function<double(double)>& a, const std::function<double(double)>& b,
                             double alpha, double w0, double t0, double t) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "gronwall_bound: alpha must be in [0,1)");
  if (w0 < 0.0) throw Error(ErrorKind::InvalidArgument, "gronwall_bound: w0 must be >= 0");
  if (t < t0) throw Error(ErrorKind::InvalidArgument, "gronwall_bound: need t >= t0");
  const double beta = 1.0 - alpha;
  if (t == t0) return w0;
  const int panels = 10000, nodes = 2 * panels + 1;
  const double dx = (t - t0) / (nodes - 1);
  // Cumulative int_t0^s a on the node grid, Simpson per interval.
  std::vector<double> I(nodes, 0.0), bv(nodes);
  for (int j = 0; j < nodes; ++j) {
    double s = t0 + j * dx;
    bv[j] = b(s);
    if (bv[j] < -1e-15) throw Error(ErrorKind::InvalidArgument, "gronwall_bound: b must be >= 0");
    if (j > 0) I[j] = I[j - 1] + dx / 6.0 * (a(s - dx) + 4.0 * a(s - 0.5 * dx) + a(s));
  }
  const double total = I.back();
  double outer = 0.0;
  for (int j = 0; j < nodes; ++j) {
    double w = (j == 0 || j == nodes - 1) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    outer += w * std::exp(total - I[j]) * bv[j];
  }
  outer *= dx / 3.0;
  double base = std::pow(w0, beta) * std::exp(total) + outer;
  return std::pow(base, 1.0 / beta);
}

/// Trajectory CSV: t, states, velocities, selections; 17 significant digits.
inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const Eigen::Index n = tr.states.empty() ? 0 : tr.states.front().size();
  os << "t";
  for (const char* p : {"x", "v", "sel"})
    for (Eigen::Index i = 1; i <= n; ++i) os << ',' << p << i;
  os << '\n';
  char buf[40];
  auto put = [&](double d) {
    std::snprintf(buf, sizeof buf, "%.17g", d);
    os << buf;
  };
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    put(tr.times[k]);
    for (const auto* vecs : {&tr.states, &tr.velocities, &tr.selections})
      for (Eigen::Index i = 0; i < n; ++i) {
        os << ',';
        put((*vecs)[k][i]);
      }
    os << '\n';
  }
}

}  // namespace mfi
