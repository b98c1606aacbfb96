#include "mfi/cli.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace mfi;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = MFI_SCENARIO_DIR;

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mfi_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

Json gradient_flow() {
  return Json::parse(R"({
    "dimension": 2,
    "operator": {"kind": "QuadraticGradient", "Q": [[1, 0], [0, 1]]},
    "cusco": {"kind": "Constant", "value": [0, 0]},
    "integrator": {"x0": [1, 0]}
  })");
}

std::string schema_error(const Json& j) {
  try {
    scenario_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
    return e.what();
  }
  ADD_FAILURE() << "scenario loaded";
  return {};
}

CommandOptions opts(const std::string& cmd, const std::string& out) {
  CommandOptions o;
  o.command = cmd;
  o.out_dir = out;
  return o;
}

bool has(const std::string& s, const std::string& sub) { return s.find(sub) != std::string::npos; }

CommandResult run(const std::string& cmd, const Json& j, const fs::path& out, CommandOptions opt = {}) {
  opt.command = cmd;
  opt.out_dir = out.string();
  return run_command(opt, scenario_from_json(j));
}

}  // namespace

TEST(LoadScenario, MinimalGradientFlowDefaults) {
  Scenario s = scenario_from_json(gradient_flow());
  EXPECT_EQ(s.n, 2);
  EXPECT_DOUBLE_EQ(s.integrator.h, 1e-3);
  EXPECT_DOUBLE_EQ(s.integrator.T, 5.0);
  EXPECT_EQ(s.seed, 1u);
  EXPECT_EQ(s.A.kind(), "QuadraticGradient");
  EXPECT_FALSE(s.set.has_value());
  EXPECT_FALSE(s.lyapunov.has_value());
}

TEST(LoadScenario, NegativeRadius) {
  Json j = gradient_flow();
  j["set"] = Json{{"kind", "Ball"}, {"center", {0, 0}}, {"radius", -1}};
  std::string msg = schema_error(j);
  EXPECT_TRUE(has(msg, "radius must be >= 0")) << msg;
  EXPECT_TRUE(has(msg, "scenario.set")) << msg;
}

TEST(LoadScenario, NotPsd) {
  Json j = gradient_flow();
  j["operator"]["Q"] = Json::array({{1, 0}, {0, -1e-3}});
  std::string msg = schema_error(j);
  EXPECT_TRUE(has(msg, "not PSD")) << msg;
  EXPECT_TRUE(has(msg, "scenario.operator.Q")) << msg;
}

TEST(LoadScenario, FieldPathsAndCollectedErrors) {
  Json j = gradient_flow();
  j["cusco"] = Json{{"kind", "Cloud"}};
  j["integrator"]["x0"] = Json::array({1, 2, 3});
  std::string msg = schema_error(j);
  EXPECT_TRUE(has(msg, "scenario.cusco.kind: unknown cusco kind 'Cloud'")) << msg;
  EXPECT_TRUE(has(msg, "scenario.integrator.x0: dimension mismatch")) << msg;

  Json k = gradient_flow();
  k.erase("operator");
  EXPECT_TRUE(has(schema_error(k), "scenario.operator: missing field"));

  Json b = gradient_flow();
  b["integrator"]["h"] = "0.00x1";
  EXPECT_TRUE(has(schema_error(b), "scenario.integrator.h: expected a number"));
}

TEST(LoadScenario, DecimalStringsAndInfinity) {
  Json j = gradient_flow();
  j["integrator"]["h"] = "0.1000000000000000055511151231257827";
  j["integrator"]["T"] = "2.5";
  j["cusco"] = Json{{"kind", "Constant"}, {"value", {"-0.5", "1e-1"}}};
  j["local_bound"] = "inf";
  Scenario s = scenario_from_json(j);
  EXPECT_EQ(s.integrator.h, 0.1);
  EXPECT_EQ(s.integrator.T, 2.5);
  Vec v = extreme_points(s.F, Vec::Zero(2)).front();
  EXPECT_EQ(v[0], -0.5);
  EXPECT_EQ(v[1], 0.1);
  EXPECT_TRUE(std::isinf(*s.local_bound));
  EXPECT_EQ(number_json(-kInf), "-inf");

  // Infinite data is still rejected where the map needs finite values.
  j["cusco"]["value"] = Json::array({"0", "-inf"});
  EXPECT_TRUE(has(schema_error(j), "scenario.cusco: Singleton: non-finite"));
}

TEST(LoadScenario, MissingFileAndBadJson) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
  fs::path p = fresh_dir("badjson");
  fs::create_directories(p);
  detail::write_file(p / "s.json", "{ \"dimension\": 2, ");
  try {
    load_scenario((p / "s.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
  }
}

TEST(Serialize, RoundTripShippedScenarios) {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    Scenario s = load_scenario(entry.path().string());
    std::string once = serialize(s);
    std::string twice = serialize(scenario_from_json(Json::parse(once)));
    EXPECT_EQ(once, twice) << entry.path();
  }
  EXPECT_GE(seen, 4u);
}

TEST(Serialize, RoundTripEveryKind) {
  Json j = Json::parse(R"({
    "name": "kitchen-sink",
    "dimension": 2,
    "seed": "18446744073709551615",
    "operator": {"kind": "SumWithNormalCone",
                 "smooth": {"kind": "LinearMonotone", "M": [[1, 2], [-2, 0.5]]},
                 "body": {"kind": "Intersection", "parts": [
                   {"kind": "Ball", "center": [0, 0], "radius": 2},
                   {"kind": "Box", "lo": [-1, -1], "hi": [1, "1.5"]}]}},
    "cusco": {"kind": "PolytopeValued", "lipschitz": 3,
              "vertices": [{"C": [[0.1, 0], [0, 0.1]], "d": [1, 0]}, {"d": [0, 1]}, {"d": [-1, -1]}]},
    "set": {"pieces": [
      {"kind": "VPolytope", "vertices": [[0, 0], [1, 0], [0, 1]]},
      {"kind": "Translate", "base": {"kind": "Cone", "generators": [[1, 0], [1, 1]]}, "shift": [2, 0]},
      {"kind": "HPolytope", "normals": [[1, 0]], "offsets": [5]}]},
    "lyapunov": {"V": {"kind": "IndicatorPlus", "body": {"kind": "Point", "point": [0, 0]},
                       "smooth": {"Q": [[2, 0], [0, 2]], "b": [0, 1], "c": 3}},
                 "W": {"kind": "MaxAffine", "G": [[1, 0], [-1, 0]], "c": [0, 0]},
                 "a": "0.25", "region": {"center": [0, 0], "radius": 1, "count": 50}},
    "integrator": {"h": 0.01, "T": 1, "x0": [0.1, 0.1], "refine": true,
                   "mode": {"kind": "FixedSelection", "anchor": [0, 0], "v0": [0, 0]}},
    "sampler": {"boundary_points": 10, "hypothesis_points": 20, "normal_budget": 4},
    "local_bound": "inf",
    "sweep": {"param": "h", "values": [0.1, 0.01]}
  })");
  Scenario s = scenario_from_json(j);
  EXPECT_EQ(s.seed, 18446744073709551615ull);
  std::string once = serialize(s);
  Scenario back = scenario_from_json(Json::parse(once));
  EXPECT_EQ(serialize(back), once);
  Vec x(2);
  x << 0.3, -0.2;
  EXPECT_EQ(resolvent(back.A, 0.5, x), resolvent(s.A, 0.5, x));
  EXPECT_EQ(back.F.lipschitz(), 3.0);
  EXPECT_EQ(eval(back.lyapunov->pair.W, x), 0.3);
  EXPECT_TRUE(std::isinf(*back.local_bound));
  EXPECT_EQ(back.set->pieces().size(), 3u);

  for (const char* v : {R"({"kind": "NormPower", "p": 1, "weight": 2})", R"({"kind": "Zero"})",
                        R"({"kind": "ConvexQuadratic", "Q": [[1, 0], [0, 0]]})"}) {
    Json k = gradient_flow();
    k["lyapunov"] = Json{{"V", Json::parse(v)}};
    std::string a = serialize(scenario_from_json(k));
    EXPECT_EQ(serialize(scenario_from_json(Json::parse(a))), a);
  }
  for (const char* op : {R"({"kind": "ScaledNormSubdiff", "weight": 0.5})", R"({"kind": "Zero"})",
                         R"({"kind": "NormalConeOf", "body": {"kind": "Ball", "center": [1, 0], "radius": 1}})"}) {
    Json k = gradient_flow();
    k["operator"] = Json::parse(op);
    k["cusco"] = Json::parse(R"({"kind": "BallValued", "C": [[0, 1], [-1, 0]], "r0": 0.5, "g": [0.1, 0]})");
    std::string a = serialize(scenario_from_json(k));
    EXPECT_EQ(serialize(scenario_from_json(Json::parse(a))), a);
  }
}

TEST(RunCommand, SimulateRowCount) {
  for (auto [h, T] : std::vector<std::pair<double, double>>{{1e-3, 5.0}, {0.3, 1.0}, {0.25, 1.0}, {1e-2, 0.55}}) {
    Json j = gradient_flow();
    j["integrator"]["h"] = h;
    j["integrator"]["T"] = T;
    fs::path out = fresh_dir("rows");
    CommandResult r = run("simulate", j, out);
    ASSERT_EQ(r.exit_code, kExitPass) << r.message;
    std::string csv = slurp(out / "trajectory.csv");
    EXPECT_EQ(count_lines(csv), static_cast<std::size_t>(std::ceil(T / h - 1e-9)) + 1 + 1) << h << " " << T;
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,x2,v1,v2,sel1,sel2");
    Json summary = Json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(summary["ok"], true);
  }
}

TEST(RunCommand, SimulateNeedsStartPoint) {
  Json j = gradient_flow();
  j["integrator"].erase("x0");
  CommandResult r = run("simulate", j, fresh_dir("nox0"));
  EXPECT_EQ(r.exit_code, kExitError);
  EXPECT_TRUE(has(r.message, "x0 is required"));
}

TEST(RunCommand, DriftCounterexampleFails) {
  fs::path out = fresh_dir("drift");
  CommandOptions opt = opts("check-invariance", out.string());
  CommandResult r = run_command(opt, (kScenarios / "drift_escape.json").string());
  EXPECT_EQ(r.exit_code, kExitViolated);
  Json rep = Json::parse(slurp(out / "certificate.json"));
  EXPECT_EQ(rep["verdict"], "fail");
  ASSERT_FALSE(rep["witnesses"].empty());
  EXPECT_GT(rep["witnesses"][0]["margin"].get<double>(), rep["tol"].get<double>());
  EXPECT_EQ(rep["simulation"]["strong_falsified"], true);
  EXPECT_EQ(rep["points"].size(), 200u);
}

TEST(RunCommand, SweepTable) {
  fs::path out = fresh_dir("sweep");
  CommandOptions opt = opts("sweep", out.string());
  opt.sweep_values = std::vector<double>{1e-2, 1e-3, 1e-4};
  CommandResult r = run_command(opt, (kScenarios / "gradient_flow.json").string());
  ASSERT_EQ(r.exit_code, kExitPass) << r.message;
  std::string csv = slurp(out / "sweep.csv");
  ASSERT_EQ(count_lines(csv), 4u);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "h,steps,ok,x1,x2,delta_to_finest,lyapunov_violation");
  std::vector<double> delta;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    delta.push_back(std::stod(cells[5]));
  }
  // First-order scheme: the error against the finest run drops about tenfold.
  EXPECT_GT(delta[0], 5.0 * delta[1]);
  EXPECT_EQ(delta[2], 0.0);
}

TEST(RunCommand, LyapunovReportFields) {
  fs::path out = fresh_dir("lyap");
  CommandOptions opt = opts("check-lyapunov", out.string());
  opt.variant = "directional";
  CommandResult r = run_command(opt, (kScenarios / "gradient_flow.json").string());
  ASSERT_EQ(r.exit_code, kExitPass) << r.message;
  Json rep = Json::parse(slurp(out / "lyapunov.json"));
  EXPECT_EQ(rep["variant"], "directional");
  EXPECT_EQ(rep["a"], 0.0);
  EXPECT_DOUBLE_EQ(rep["V(x0)"].get<double>(), 0.625);  // (1 + 0.25) / 2
  EXPECT_TRUE(rep.contains("worst_violation_t"));
  EXPECT_EQ(rep["trajectory"]["ok"], true);
}

TEST(RunCommand, SeedAndTolOverrides) {
  fs::path out = fresh_dir("seed");
  CommandOptions opt = opts("check-invariance", out.string());
  opt.seed = 99;
  opt.tol = 0.25;
  run_command(opt, (kScenarios / "sweeping_ball.json").string());
  Json rep = Json::parse(slurp(out / "certificate.json"));
  EXPECT_EQ(rep["seed"], 99u);
  EXPECT_EQ(rep["tol"], 0.25);
}

// Exit codes on canned scenarios: 0 pass, 1 violated or falsified, 2 error.
TEST(ExitCodeProperty, CannedScenarios) {
  struct Case {
    std::string cmd, file;
    std::optional<std::string> variant;
    int code;
  };
  std::vector<Case> cases = {
      {"simulate", "gradient_flow.json", std::nullopt, kExitPass},
      {"sweep", "gradient_flow.json", std::nullopt, kExitPass},
      {"check-lyapunov", "gradient_flow.json", std::nullopt, kExitPass},
      {"check-lyapunov", "gradient_flow.json", "subgradient-truncated", kExitPass},
      {"check-invariance", "gradient_flow.json", std::nullopt, kExitError},  // no set
      {"check-lyapunov", "drift_escape.json", std::nullopt, kExitError},     // no pair
      {"check-invariance", "drift_escape.json", "tangent-projected", kExitViolated},
      {"check-invariance", "drift_escape.json", "normal-inf", kExitViolated},
      {"check-invariance", "sweeping_ball.json", std::nullopt, kExitPass},
      {"check-invariance", "sweeping_ball.json", "normal-inf-truncated", kExitPass},
      {"check-invariance", "weak_point.json", "weak-normal", kExitPass},
      {"check-invariance", "weak_point.json", "weak-tangent", kExitPass},
      {"check-invariance", "weak_point.json", "normal-projected", kExitViolated},
      {"check-invariance", "drift_escape.json", "no-such-variant", kExitError},
      {"explode", "drift_escape.json", std::nullopt, kExitError},
      {"simulate", "missing.json", std::nullopt, kExitError},
  };
  for (const auto& c : cases) {
    CommandOptions opt = opts(c.cmd, fresh_dir("codes").string());
    opt.variant = c.variant;
    CommandResult r = run_command(opt, (kScenarios / c.file).string());
    EXPECT_EQ(r.exit_code, c.code) << c.cmd << " " << c.file << " " << c.variant.value_or("") << ": " << r.message;
  }
}

TEST(ExitCodeProperty, UnwritableOutput) {
  fs::path blocker = fresh_dir("blocker");
  detail::write_file(blocker, "x");
  CommandOptions opt = opts("simulate", (blocker / "sub").string());
  CommandResult r = run_command(opt, (kScenarios / "gradient_flow.json").string());
  EXPECT_EQ(r.exit_code, kExitError);
  fs::remove(blocker);
}

TEST(Determinism, ByteIdenticalArtifacts) {
  struct Run {
    std::string cmd, file, artifact;
  };
  std::vector<Run> runs = {{"simulate", "gradient_flow.json", "trajectory.csv"},
                           {"simulate", "sweeping_ball.json", "summary.json"},
                           {"sweep", "gradient_flow.json", "sweep.csv"},
                           {"check-lyapunov", "gradient_flow.json", "lyapunov.json"},
                           {"check-invariance", "sweeping_ball.json", "certificate.json"},
                           {"check-invariance", "drift_escape.json", "certificate.json"}};
  for (const auto& r : runs) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      fs::path out = fresh_dir("det" + std::to_string(rep));
      CommandOptions opt = opts(r.cmd, out.string());
      run_command(opt, (kScenarios / r.file).string());
      std::string bytes = slurp(out / r.artifact);
      ASSERT_FALSE(bytes.empty());
      if (rep == 0)
        first = bytes;
      else
        EXPECT_EQ(bytes, first) << r.cmd << " " << r.file;
    }
  }
}
