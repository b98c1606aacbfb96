#pragma once

// Scenario files: JSON objects with a "kind" tag per operator, map, body and
// function. Numbers may be JSON numbers or decimal strings ("inf" allowed).

#include "mfi/lyapunov.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mfi {

using Json = nlohmann::ordered_json;

struct ModeSpec {
  std::string kind = "FixedSelection";  // or "Steered"
  std::optional<Vec> anchor;
  std::optional<Vec> v0;
};

struct IntegratorSpec {
  double h = 1e-3;
  double T = 5.0;
  bool refine = false;
  std::optional<Vec> x0;
  ModeSpec mode;
};

struct LyapunovSpec {
  LyapunovPair pair;
  LyapunovRegion region;
};

struct SweepSpec {
  std::string param = "h";
  std::vector<double> values;
};

struct Scenario {
  std::string name = "scenario";
  Eigen::Index n = 0;
  std::uint64_t seed = 1;
  MonotoneOperator A = MonotoneOperator::zero(1);
  CuscoMap F = CuscoMap::constant(Vec::Zero(1));
  std::optional<ClosedSet> set;
  std::optional<LyapunovSpec> lyapunov;
  IntegratorSpec integrator;
  SamplerConfig sampler;
  /// Analytic local bound m(x) on ||A°|| near S, when known.
  std::optional<double> local_bound;
  std::optional<SweepSpec> sweep;
};

// ---------------------------------------------------------------------------
// Reading

namespace detail {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void schema_fail(const std::string& path, const std::string& msg) {
  throw SchemaError(path + ": " + msg);
}

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(path + "." + key, "missing field");
  return *it;
}

inline double read_number(const Json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec == std::errc() && p == end) return v;
  }
  schema_fail(path, "expected a number");
}

inline double read_number(const Json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  return read_number(j.at(key), path + "." + key);
}

inline Vec read_vec(const Json& j, const std::string& path) {
  if (!j.is_array()) schema_fail(path, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = read_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

/// Rows of numbers; an empty array is a 0 x cols matrix.
inline Mat read_mat(const Json& j, const std::string& path, Eigen::Index cols = -1) {
  if (!j.is_array()) schema_fail(path, "expected an array of rows");
  if (j.empty()) return Mat(0, std::max<Eigen::Index>(cols, 0));
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(read_vec(j[i], path + "[" + std::to_string(i) + "]"));
  Mat M(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != M.cols()) schema_fail(path, "ragged matrix");
    M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return M;
}

/// Points given as a list; returned as matrix columns.
inline Mat read_columns(const Json& j, const std::string& path, Eigen::Index n) {
  Mat rows = read_mat(j, path, n);
  return rows.transpose();
}

inline void expect_dim(Eigen::Index got, Eigen::Index n, const std::string& path) {
  if (got != n) schema_fail(path, "dimension mismatch: expected " + std::to_string(n) + ", got " + std::to_string(got));
}

inline std::string read_kind(const Json& j, const std::string& path) {
  const Json& k = field(j, "kind", path);
  if (!k.is_string()) schema_fail(path + ".kind", "expected a string");
  return k.get<std::string>();
}

/// Runs a constructor and reports library errors at `path`.
template <typename Fn>
auto at_path(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    schema_fail(path, e.what());
  }
}

inline ConvexBody read_body(const Json& j, const std::string& path, Eigen::Index n) {
  const std::string kind = read_kind(j, path);
  if (kind == "Ball") {
    Vec c = read_vec(field(j, "center", path), path + ".center");
    expect_dim(c.size(), n, path + ".center");
    double r = read_number(field(j, "radius", path), path + ".radius");
    return at_path(path + ".radius", [&] { return ConvexBody::ball(c, r); });
  }
  if (kind == "Point") {
    Vec p = read_vec(field(j, "point", path), path + ".point");
    expect_dim(p.size(), n, path + ".point");
    return ConvexBody::point(p);
  }
  if (kind == "Box") {
    Vec lo = read_vec(field(j, "lo", path), path + ".lo"), hi = read_vec(field(j, "hi", path), path + ".hi");
    expect_dim(lo.size(), n, path + ".lo");
    expect_dim(hi.size(), n, path + ".hi");
    return at_path(path, [&] { return ConvexBody::box(lo, hi); });
  }
  if (kind == "HPolytope") {
    Mat N = read_mat(field(j, "normals", path), path + ".normals", n);
    expect_dim(N.cols(), n, path + ".normals");
    Vec b = read_vec(field(j, "offsets", path), path + ".offsets");
    return at_path(path, [&] { return ConvexBody::hpolytope(N, b); });
  }
  if (kind == "VPolytope") {
    Mat V = read_columns(field(j, "vertices", path), path + ".vertices", n);
    expect_dim(V.rows(), n, path + ".vertices");
    return at_path(path, [&] { return ConvexBody::vpolytope(V); });
  }
  if (kind == "Cone") {
    Mat G = read_columns(field(j, "generators", path), path + ".generators", n);
    expect_dim(G.rows(), n, path + ".generators");
    return at_path(path, [&] { return ConvexBody::cone(G); });
  }
  if (kind == "Translate") {
    ConvexBody base = read_body(field(j, "base", path), path + ".base", n);
    Vec s = read_vec(field(j, "shift", path), path + ".shift");
    expect_dim(s.size(), n, path + ".shift");
    return ConvexBody::translate(std::move(base), s);
  }
  if (kind == "Intersection") {
    const Json& parts = field(j, "parts", path);
    if (!parts.is_array()) schema_fail(path + ".parts", "expected an array");
    std::vector<ConvexBody> bodies;
    for (std::size_t i = 0; i < parts.size(); ++i)
      bodies.push_back(read_body(parts[i], path + ".parts[" + std::to_string(i) + "]", n));
    return at_path(path, [&] { return ConvexBody::intersection(std::move(bodies)); });
  }
  schema_fail(path + ".kind", "unknown body kind '" + kind + "'");
}

inline QuadraticGradient read_quadratic_gradient(const Json& j, const std::string& path, Eigen::Index n) {
  Mat Q = read_mat(field(j, "Q", path), path + ".Q", n);
  expect_dim(Q.rows(), n, path + ".Q");
  expect_dim(Q.cols(), n, path + ".Q");
  Vec b = j.contains("b") ? read_vec(j.at("b"), path + ".b") : Vec(Vec::Zero(n));
  expect_dim(b.size(), n, path + ".b");
  return {Q, b};
}

inline Mat read_square(const Json& j, const std::string& key, const std::string& path, Eigen::Index n) {
  Mat M = read_mat(field(j, key, path), path + "." + key, n);
  expect_dim(M.rows(), n, path + "." + key);
  expect_dim(M.cols(), n, path + "." + key);
  return M;
}

inline MonotoneOperator read_operator(const Json& j, const std::string& path, Eigen::Index n) {
  const std::string kind = read_kind(j, path);
  if (kind == "NormalConeOf") return MonotoneOperator::normal_cone(read_body(field(j, "body", path), path + ".body", n));
  if (kind == "QuadraticGradient") {
    auto q = read_quadratic_gradient(j, path, n);
    return at_path(path + ".Q", [&] { return MonotoneOperator::quadratic(q.Q, q.b); });
  }
  if (kind == "Zero") return MonotoneOperator::zero(n);
  if (kind == "ScaledNormSubdiff") {
    double w = read_number(field(j, "weight", path), path + ".weight");
    return at_path(path + ".weight", [&] { return MonotoneOperator::scaled_norm(w, n); });
  }
  if (kind == "LinearMonotone") {
    Mat M = read_square(j, "M", path, n);
    return at_path(path + ".M", [&] { return MonotoneOperator::linear(M); });
  }
  if (kind == "SumWithNormalCone") {
    const Json& s = field(j, "smooth", path);
    const std::string sk = read_kind(s, path + ".smooth");
    std::variant<QuadraticGradient, LinearMonotone> smooth;
    if (sk == "QuadraticGradient") {
      smooth = read_quadratic_gradient(s, path + ".smooth", n);
    } else if (sk == "LinearMonotone") {
      smooth = LinearMonotone{read_square(s, "M", path + ".smooth", n)};
    } else {
      schema_fail(path + ".smooth.kind", "unknown smooth part '" + sk + "'");
    }
    ConvexBody body = read_body(field(j, "body", path), path + ".body", n);
    return at_path(path, [&] { return MonotoneOperator::sum_with_normal_cone(smooth, body); });
  }
  schema_fail(path + ".kind", "unknown operator kind '" + kind + "'");
}

inline AffineMap read_affine(const Json& j, const std::string& path, Eigen::Index n) {
  Mat C = j.contains("C") ? read_square(j, "C", path, n) : Mat(Mat::Zero(n, n));
  Vec d = j.contains("d") ? read_vec(j.at("d"), path + ".d") : Vec(Vec::Zero(n));
  expect_dim(d.size(), n, path + ".d");
  return {C, d};
}

inline CuscoMap read_cusco(const Json& j, const std::string& path, Eigen::Index n) {
  const std::string kind = read_kind(j, path);
  const double L = read_number(j, "lipschitz", path, -1.0);
  if (kind == "Singleton") {
    auto f = read_affine(j, path, n);
    return at_path(path, [&] { return CuscoMap::singleton(f.C, f.d, L); });
  }
  if (kind == "Constant") {
    Vec v = read_vec(field(j, "value", path), path + ".value");
    expect_dim(v.size(), n, path + ".value");
    return at_path(path, [&] { return CuscoMap::constant(v, L); });
  }
  if (kind == "BallValued") {
    auto c = read_affine(j, path, n);
    double r0 = read_number(field(j, "r0", path), path + ".r0");
    Vec g = j.contains("g") ? read_vec(j.at("g"), path + ".g") : Vec(Vec::Zero(n));
    expect_dim(g.size(), n, path + ".g");
    return at_path(path + ".r0", [&] { return CuscoMap::ball_valued(c.C, c.d, r0, g, L); });
  }
  if (kind == "PolytopeValued") {
    const Json& vs = field(j, "vertices", path);
    if (!vs.is_array()) schema_fail(path + ".vertices", "expected an array");
    std::vector<AffineMap> maps;
    for (std::size_t i = 0; i < vs.size(); ++i) maps.push_back(read_affine(vs[i], path + ".vertices[" + std::to_string(i) + "]", n));
    return at_path(path, [&] { return CuscoMap::polytope_valued(maps, L); });
  }
  schema_fail(path + ".kind", "unknown cusco kind '" + kind + "'");
}

inline ConvexQuadratic read_convex_quadratic(const Json& j, const std::string& path, Eigen::Index n) {
  auto q = read_quadratic_gradient(j, path, n);
  return {q.Q, q.b, read_number(j, "c", path, 0.0)};
}

inline ScalarFn read_scalar(const Json& j, const std::string& path, Eigen::Index n) {
  const std::string kind = read_kind(j, path);
  if (kind == "ConvexQuadratic") {
    auto q = read_convex_quadratic(j, path, n);
    return at_path(path + ".Q", [&] { return ScalarFn::quadratic(q.Q, q.b, q.c); });
  }
  if (kind == "Zero") return ScalarFn::zero(n);
  if (kind == "NormPower") {
    double p = read_number(field(j, "p", path), path + ".p");
    double w = read_number(j, "weight", path, 1.0);
    return at_path(path, [&] { return ScalarFn::norm_power(static_cast<int>(p), w, n); });
  }
  if (kind == "MaxAffine") {
    Mat G = read_mat(field(j, "G", path), path + ".G", n);
    expect_dim(G.cols(), n, path + ".G");
    Vec c = read_vec(field(j, "c", path), path + ".c");
    return at_path(path, [&] { return ScalarFn::max_affine(G, c); });
  }
  if (kind == "IndicatorPlus") {
    ConvexBody body = read_body(field(j, "body", path), path + ".body", n);
    ConvexQuadratic smooth{Mat::Zero(n, n), Vec::Zero(n), 0.0};
    if (j.contains("smooth")) smooth = read_convex_quadratic(j.at("smooth"), path + ".smooth", n);
    return at_path(path + ".smooth", [&] { return ScalarFn::indicator_plus(body, smooth); });
  }
  schema_fail(path + ".kind", "unknown function kind '" + kind + "'");
}

inline std::uint64_t read_seed(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
  }
  schema_fail(path, "expected a nonnegative integer");
}

inline std::size_t read_count(const Json& j, const std::string& key, const std::string& path, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  double v = read_number(j.at(key), path + "." + key);
  if (!(v >= 0.0) || v != std::floor(v)) schema_fail(path + "." + key, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Validates and builds a scenario; every problem found is reported with its
/// field path in one Schema error.
inline Scenario scenario_from_json(const Json& j) {
  using namespace detail;
  if (!j.is_object()) throw Error(ErrorKind::Schema, "scenario: expected a JSON object");
  Scenario s;
  std::vector<std::string> errors;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  };
  guard([&] {
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
  });
  guard([&] {
    double n = read_number(field(j, "dimension", "scenario"), "scenario.dimension");
    if (!(n >= 1.0) || n != std::floor(n)) schema_fail("scenario.dimension", "expected a positive integer");
    s.n = static_cast<Eigen::Index>(n);
  });
  if (!errors.empty()) throw Error(ErrorKind::Schema, errors.front());
  const Eigen::Index n = s.n;
  guard([&] {
    if (j.contains("seed")) s.seed = read_seed(j.at("seed"), "scenario.seed");
  });
  guard([&] { s.A = read_operator(field(j, "operator", "scenario"), "scenario.operator", n); });
  guard([&] { s.F = read_cusco(field(j, "cusco", "scenario"), "scenario.cusco", n); });
  guard([&] {
    if (!j.contains("set")) return;
    const Json& st = j.at("set");
    if (st.is_object() && st.contains("pieces")) {
      const Json& ps = st.at("pieces");
      if (!ps.is_array() || ps.empty()) schema_fail("scenario.set.pieces", "expected a nonempty array");
      std::vector<ConvexBody> pieces;
      for (std::size_t i = 0; i < ps.size(); ++i)
        pieces.push_back(read_body(ps[i], "scenario.set.pieces[" + std::to_string(i) + "]", n));
      s.set = ClosedSet(std::move(pieces));
    } else {
      s.set = ClosedSet(read_body(st, "scenario.set", n));
    }
  });
  guard([&] {
    if (!j.contains("lyapunov")) return;
    const Json& l = j.at("lyapunov");
    const std::string p = "scenario.lyapunov";
    ScalarFn V = read_scalar(field(l, "V", p), p + ".V", n);
    ScalarFn W = l.contains("W") ? read_scalar(l.at("W"), p + ".W", n) : ScalarFn::zero(n);
    double a = read_number(l, "a", p, 0.0);
    if (!(a >= 0.0)) schema_fail(p + ".a", "a must be >= 0");
    LyapunovRegion region{Vec::Zero(n), 3.0, 500};
    if (l.contains("region")) {
      const Json& r = l.at("region");
      if (r.contains("center")) region.center = read_vec(r.at("center"), p + ".region.center");
      expect_dim(region.center.size(), n, p + ".region.center");
      region.radius = read_number(r, "radius", p + ".region", 3.0);
      if (!(region.radius > 0.0)) schema_fail(p + ".region.radius", "radius must be > 0");
      region.count = read_count(r, "count", p + ".region", 500);
    }
    s.lyapunov = LyapunovSpec{{V, W, a}, region};
  });
  guard([&] {
    if (!j.contains("integrator")) return;
    const Json& ic = j.at("integrator");
    const std::string p = "scenario.integrator";
    s.integrator.h = read_number(ic, "h", p, 1e-3);
    s.integrator.T = read_number(ic, "T", p, 5.0);
    if (!(s.integrator.h > 0.0) || !(s.integrator.T >= s.integrator.h))
      schema_fail(p, "need 0 < h <= T");
    if (ic.contains("refine")) s.integrator.refine = ic.at("refine").get<bool>();
    if (ic.contains("x0")) {
      s.integrator.x0 = read_vec(ic.at("x0"), p + ".x0");
      expect_dim(s.integrator.x0->size(), n, p + ".x0");
    }
    if (ic.contains("mode")) {
      const Json& m = ic.at("mode");
      s.integrator.mode.kind = read_kind(m, p + ".mode");
      if (s.integrator.mode.kind != "FixedSelection" && s.integrator.mode.kind != "Steered")
        schema_fail(p + ".mode.kind", "unknown mode '" + s.integrator.mode.kind + "'");
      if (m.contains("anchor")) {
        s.integrator.mode.anchor = read_vec(m.at("anchor"), p + ".mode.anchor");
        expect_dim(s.integrator.mode.anchor->size(), n, p + ".mode.anchor");
      }
      if (m.contains("v0")) {
        s.integrator.mode.v0 = read_vec(m.at("v0"), p + ".mode.v0");
        expect_dim(s.integrator.mode.v0->size(), n, p + ".mode.v0");
      }
    }
  });
  guard([&] {
    if (!j.contains("sampler")) return;
    const Json& sc = j.at("sampler");
    const std::string p = "scenario.sampler";
    s.sampler.boundary_points = read_count(sc, "boundary_points", p, 200);
    s.sampler.hypothesis_points = read_count(sc, "hypothesis_points", p, 200);
    s.sampler.normal_budget = read_count(sc, "normal_budget", p, 16);
  });
  guard([&] {
    if (!j.contains("local_bound")) return;
    double m = read_number(j.at("local_bound"), "scenario.local_bound");
    if (!(m >= 0.0)) schema_fail("scenario.local_bound", "must be >= 0");
    s.local_bound = m;
  });
  guard([&] {
    if (!j.contains("sweep")) return;
    const Json& sw = j.at("sweep");
    SweepSpec spec;
    if (sw.contains("param")) spec.param = sw.at("param").get<std::string>();
    if (spec.param != "h") schema_fail("scenario.sweep.param", "only 'h' can be swept");
    spec.values = [&] {
      Vec v = read_vec(field(sw, "values", "scenario.sweep"), "scenario.sweep.values");
      return std::vector<double>(v.data(), v.data() + v.size());
    }();
    for (double h : spec.values)
      if (!(h > 0.0)) schema_fail("scenario.sweep.values", "step sizes must be > 0");
    s.sweep = spec;
  });
  s.sampler.seed = s.seed;
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(ErrorKind::Schema, msg);
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open scenario '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Schema, "scenario '" + path + "': invalid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Writing

/// Finite doubles as JSON numbers (shortest round-trip form); infinities and
/// NaN as strings.
inline Json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

inline Json mat_json(const Mat& M) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(vec_json(M.row(i).transpose()));
  return a;
}

inline Json columns_json(const Mat& M) { return mat_json(M.transpose()); }

inline Json to_json(const ConvexBody& b) {
  return std::visit(overloaded{
                        [](const Ball& x) { return Json{{"kind", "Ball"}, {"center", vec_json(x.center)}, {"radius", number_json(x.radius)}}; },
                        [](const HPolytope& x) { return Json{{"kind", "HPolytope"}, {"normals", mat_json(x.normals)}, {"offsets", vec_json(x.offsets)}}; },
                        [](const VPolytope& x) { return Json{{"kind", "VPolytope"}, {"vertices", columns_json(x.vertices)}}; },
                        [](const Cone& x) { return Json{{"kind", "Cone"}, {"generators", columns_json(x.generators)}}; },
                        [](const Translate& x) { return Json{{"kind", "Translate"}, {"base", to_json(*x.base)}, {"shift", vec_json(x.shift)}}; },
                        [](const Intersection& x) {
                          Json parts = Json::array();
                          for (const auto& p : x.parts) parts.push_back(to_json(*p));
                          return Json{{"kind", "Intersection"}, {"parts", parts}};
                        },
                    },
                    b.variant());
}

inline Json to_json(const MonotoneOperator& A) {
  auto quad = [](const QuadraticGradient& q) {
    return Json{{"kind", "QuadraticGradient"}, {"Q", mat_json(q.Q)}, {"b", vec_json(q.b)}};
  };
  auto lin = [](const LinearMonotone& l) { return Json{{"kind", "LinearMonotone"}, {"M", mat_json(l.M)}}; };
  return std::visit(overloaded{
                        [](const NormalConeOf& x) { return Json{{"kind", "NormalConeOf"}, {"body", to_json(x.body)}}; },
                        [&](const QuadraticGradient& x) { return quad(x); },
                        [](const ScaledNormSubdiff& x) { return Json{{"kind", "ScaledNormSubdiff"}, {"weight", number_json(x.weight)}}; },
                        [&](const LinearMonotone& x) { return lin(x); },
                        [&](const SumWithNormalCone& x) {
                          Json smooth = std::visit(overloaded{quad, lin}, x.smooth);
                          return Json{{"kind", "SumWithNormalCone"}, {"smooth", smooth}, {"body", to_json(x.body)}};
                        },
                        [](const LiftedOperator&) -> Json {
                          throw Error(ErrorKind::Unsupported, "lifted operators are not serializable");
                        },
                    },
                    A.variant());
}

inline Json to_json(const CuscoMap& F) {
  auto aff = [](Json j, const AffineMap& m) {
    j["C"] = mat_json(m.C);
    j["d"] = vec_json(m.d);
    return j;
  };
  Json out = std::visit(overloaded{
                            [&](const Singleton& x) { return aff(Json{{"kind", "Singleton"}}, x.f); },
                            [&](const BallValued& x) {
                              Json j = aff(Json{{"kind", "BallValued"}}, x.center);
                              j["r0"] = number_json(x.r0);
                              j["g"] = vec_json(x.g);
                              return j;
                            },
                            [&](const PolytopeValued& x) {
                              Json vs = Json::array();
                              for (const auto& m : x.vertex_maps) vs.push_back(aff(Json::object(), m));
                              return Json{{"kind", "PolytopeValued"}, {"vertices", vs}};
                            },
                            [](const LiftedCusco&) -> Json {
                              throw Error(ErrorKind::Unsupported, "lifted maps are not serializable");
                            },
                        },
                        F.variant());
  out["lipschitz"] = number_json(F.lipschitz());
  return out;
}

inline Json to_json(const ConvexQuadratic& q) {
  return Json{{"Q", mat_json(q.Q)}, {"b", vec_json(q.b)}, {"c", number_json(q.c)}};
}

inline Json to_json(const ScalarFn& V) {
  return std::visit(overloaded{
                        [](const ConvexQuadratic& q) {
                          Json j{{"kind", "ConvexQuadratic"}};
                          j.update(to_json(q));
                          return j;
                        },
                        [](const NormPower& p) { return Json{{"kind", "NormPower"}, {"p", p.p}, {"weight", number_json(p.weight)}}; },
                        [](const MaxAffine& m) { return Json{{"kind", "MaxAffine"}, {"G", mat_json(m.G)}, {"c", vec_json(m.c)}}; },
                        [](const IndicatorPlus& i) {
                          return Json{{"kind", "IndicatorPlus"}, {"body", to_json(i.body)}, {"smooth", to_json(i.smooth)}};
                        },
                    },
                    V.variant());
}

inline Json to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["dimension"] = s.n;
  j["seed"] = s.seed;
  j["operator"] = to_json(s.A);
  j["cusco"] = to_json(s.F);
  if (s.set) {
    Json pieces = Json::array();
    for (const auto& p : s.set->pieces()) pieces.push_back(to_json(p));
    j["set"] = Json{{"pieces", pieces}};
  }
  if (s.lyapunov) {
    const auto& l = *s.lyapunov;
    j["lyapunov"] = Json{{"V", to_json(l.pair.V)},
                         {"W", to_json(l.pair.W)},
                         {"a", number_json(l.pair.a)},
                         {"region", Json{{"center", vec_json(l.region.center)},
                                         {"radius", number_json(l.region.radius)},
                                         {"count", l.region.count}}}};
  }
  Json ic{{"h", number_json(s.integrator.h)}, {"T", number_json(s.integrator.T)}, {"refine", s.integrator.refine}};
  if (s.integrator.x0) ic["x0"] = vec_json(*s.integrator.x0);
  Json mode{{"kind", s.integrator.mode.kind}};
  if (s.integrator.mode.anchor) mode["anchor"] = vec_json(*s.integrator.mode.anchor);
  if (s.integrator.mode.v0) mode["v0"] = vec_json(*s.integrator.mode.v0);
  ic["mode"] = mode;
  j["integrator"] = ic;
  j["sampler"] = Json{{"boundary_points", s.sampler.boundary_points},
                      {"hypothesis_points", s.sampler.hypothesis_points},
                      {"normal_budget", s.sampler.normal_budget}};
  if (s.local_bound) j["local_bound"] = number_json(*s.local_bound);
  if (s.sweep) {
    Json vals = Json::array();
    for (double h : s.sweep->values) vals.push_back(number_json(h));
    j["sweep"] = Json{{"param", s.sweep->param}, {"values", vals}};
  }
  return j;
}

inline std::string serialize(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

/// The integrator settings of a scenario, ready to run.
inline IntegratorConfig integrator_config(const Scenario& s) {
  IntegratorConfig cfg;
  cfg.h = s.integrator.h;
  cfg.T = s.integrator.T;
  cfg.refine = s.integrator.refine;
  if (s.integrator.mode.kind == "Steered") {
    if (!s.set) throw Error(ErrorKind::Schema, "scenario.integrator.mode: Steered mode needs a set");
    cfg.mode = distance_to(*s.set);
  } else {
    cfg.mode = FixedSelection{s.integrator.mode.anchor, s.integrator.mode.v0};
  }
  return cfg;
}

}  // namespace mfi
