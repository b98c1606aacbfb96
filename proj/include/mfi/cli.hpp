#pragma once

// Command dispatch for the mf tool: each command reads a scenario, runs one
// module and writes its artifacts into an output directory.

#include "mfi/scenario.hpp"

#include <filesystem>
#include <iostream>

namespace mfi {

enum ExitCode : int { kExitPass = 0, kExitViolated = 1, kExitError = 2 };

struct CommandOptions {
  std::string command;  // simulate | check-invariance | check-lyapunov | sweep
  std::string out_dir = "out";
  std::optional<std::string> variant;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> sweep_values;
};

struct CommandResult {
  int exit_code = kExitError;
  std::string message;
  std::vector<std::string> files;  // written artifacts, relative to out_dir
};

// ---------------------------------------------------------------------------
// Report JSON

inline Json to_json(const Witness& w) {
  return Json{{"x", vec_json(w.x)}, {"xi", vec_json(w.xi)}, {"v", vec_json(w.v)}, {"margin", number_json(w.margin)}};
}

inline Json to_json(const CertificateReport& r, const std::string& scenario) {
  Json j;
  j["scenario"] = scenario;
  j["variant"] = r.variant;
  j["tol"] = number_json(r.tol);
  j["seed"] = r.seed;
  j["verdict"] = to_string(r.verdict);
  if (!r.reason.empty()) j["reason"] = r.reason;
  j["worst_margin"] = number_json(r.worst_margin);
  Json hyp = Json::array();
  for (const auto& h : r.hypothesis_checks) {
    Json w = Json::array();
    for (const auto& x : h.witnesses) w.push_back(vec_json(x));
    hyp.push_back(Json{{"name", h.name}, {"ok", h.ok}, {"witnesses", w}});
  }
  j["hypothesis_checks"] = hyp;
  j["caveats"] = r.caveats;
  Json wit = Json::array();
  for (const auto& w : r.witnesses) wit.push_back(to_json(w));
  j["witnesses"] = wit;
  Json pts = Json::array();
  for (const auto& p : r.points) {
    Json q{{"x", vec_json(p.x)}, {"margin", number_json(p.margin)}, {"worst_xi", vec_json(p.worst_xi)},
           {"worst_v", vec_json(p.worst_v)}};
    if (p.local_bound) q["local_bound"] = number_json(*p.local_bound);
    if (!p.error.empty()) q["error"] = p.error;
    pts.push_back(q);
  }
  j["points"] = pts;
  return j;
}

inline Json to_json(const SimulationRun& r) {
  Json j{{"label", r.label}, {"v0", vec_json(r.v0)}, {"max_distance", number_json(r.max_distance)},
         {"exit_time", number_json(r.exit_time)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline Json to_json(const SimulationEvidence& e) {
  Json runs = Json::array();
  for (const auto& r : e.fixed_runs) runs.push_back(to_json(r));
  Json j{{"threshold", number_json(e.threshold)},
         {"strong_falsified", e.strong_falsified},
         {"weak_supported", e.weak_supported},
         {"fixed_runs", runs}};
  if (e.steered_run) j["steered_run"] = to_json(*e.steered_run);
  return j;
}

inline Json to_json(const TrajectoryCheck& c) {
  Json j{{"ok", c.ok},
         {"max_violation", number_json(c.max_violation)},
         {"worst_violation_t", number_json(c.worst_t)},
         {"constant", number_json(c.constant)},
         {"tol", number_json(c.tol)}};
  if (!c.error.empty()) j["error"] = c.error;
  return j;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + p.string() + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline const Vec& require_x0(const Scenario& s, const char* cmd) {
  if (!s.integrator.x0) throw Error(ErrorKind::Schema, std::string(cmd) + ": scenario.integrator.x0 is required");
  return *s.integrator.x0;
}

inline LocalBound constant_bound(const Scenario& s) {
  if (!s.local_bound) return nullptr;
  double m = *s.local_bound;
  return [m](const Vec&) { return m; };
}

inline Json trajectory_summary(const Scenario& s, const Trajectory& tr) {
  Json j{{"scenario", s.name}, {"seed", s.seed}, {"h", number_json(tr.h)}, {"T", number_json(s.integrator.T)},
         {"rows", tr.states.size()}, {"ok", tr.ok()}};
  j["mode"] = s.integrator.mode.kind;
  if (tr.selection_constant) j["selection_constant"] = number_json(*tr.selection_constant);
  if (tr.extrapolated_final) j["extrapolated_final"] = vec_json(*tr.extrapolated_final);
  if (!tr.states.empty()) {
    j["final_t"] = number_json(tr.times.back());
    j["final_x"] = vec_json(tr.states.back());
  }
  if (!tr.ok()) {
    j["error"] = tr.error;
    j["error_index"] = *tr.error_index;
  }
  if (s.set) {
    double dmax = 0.0;
    for (const auto& x : tr.states) dmax = std::max(dmax, distance(*s.set, x));
    j["max_distance_to_set"] = number_json(dmax);
  }
  return j;
}

inline CommandResult simulate(const Scenario& s, const std::filesystem::path& out) {
  const Vec& x0 = require_x0(s, "simulate");
  Trajectory tr = integrate(s.A, s.F, integrator_config(s), x0);
  std::ostringstream csv;
  write_csv(csv, tr);
  write_file(out / "trajectory.csv", csv.str());
  write_file(out / "summary.json", dump(trajectory_summary(s, tr)));
  CommandResult r{kExitPass, "simulated " + std::to_string(tr.states.size()) + " rows", {"trajectory.csv", "summary.json"}};
  if (!tr.ok()) {
    r.exit_code = kExitError;
    r.message = "integration failed: " + tr.error;
  }
  return r;
}

inline int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return kExitPass;
    case Verdict::Fail:
      return kExitViolated;
    default:
      return kExitError;
  }
}

inline CommandResult check_invariance(const Scenario& s, const CommandOptions& opt, const std::filesystem::path& out) {
  if (!s.set) throw Error(ErrorKind::Schema, "check-invariance: scenario.set is required");
  const Criterion variant = parse_criterion(opt.variant.value_or("normal-projected"));
  const double tol = opt.tol.value_or(-1.0);
  CertificateReport rep = is_weak(variant) ? certify_weak(*s.set, s.A, s.F, variant, s.sampler, tol, constant_bound(s))
                                           : certify_strong(*s.set, s.A, s.F, variant, s.sampler, tol);
  Json j = to_json(rep, s.name);
  int code = verdict_code(rep.verdict);
  std::string msg = "verdict " + to_string(rep.verdict);
  if (s.integrator.x0 && contains(*s.set, *s.integrator.x0)) {
    IntegratorConfig cfg = integrator_config(s);
    SimulationEvidence ev = falsify_by_simulation(*s.set, s.A, s.F, *s.integrator.x0, cfg);
    j["simulation"] = to_json(ev);
    bool falsified = is_weak(variant) ? !ev.weak_supported : ev.strong_falsified;
    if (falsified && code == kExitPass) {
      j["verdict"] = "fail";
      j["reason"] = "certified but falsified by simulation";
      msg = "verdict fail (falsified by simulation)";
      code = kExitViolated;
    } else if (falsified && code == kExitError) {
      code = kExitViolated;
      msg += ", falsified by simulation";
    }
  }
  write_file(out / "certificate.json", dump(j));
  return {code, msg, {"certificate.json"}};
}

inline CommandResult check_lyapunov(const Scenario& s, const CommandOptions& opt, const std::filesystem::path& out) {
  if (!s.lyapunov) throw Error(ErrorKind::Schema, "check-lyapunov: scenario.lyapunov is required");
  const auto& L = *s.lyapunov;
  const LyapunovCriterion variant = parse_lyapunov_criterion(opt.variant.value_or("subgradient"));
  LyapunovReport rep = certify_lyapunov(L.pair, s.A, s.F, variant, L.region, s.seed, opt.tol.value_or(-1.0),
                                        constant_bound(s), s.sampler.normal_budget);
  Json j = to_json(rep.cert, s.name);
  j["a"] = number_json(rep.a);
  int code = verdict_code(rep.cert.verdict);
  std::string msg = "verdict " + to_string(rep.cert.verdict);
  if (s.integrator.x0) {
    const Vec& x0 = *s.integrator.x0;
    j["V(x0)"] = number_json(eval(L.pair.V, x0));
    Trajectory tr = integrate(s.A, s.F, integrator_config(s), x0);
    TrajectoryCheck chk;
    if (tr.ok()) {
      chk = verify_along_trajectory(L.pair, tr);
    } else {
      chk.ok = false;
      chk.error = "integration failed: " + tr.error;
    }
    j["worst_violation_t"] = number_json(chk.worst_t);
    j["trajectory"] = to_json(chk);
    if (!chk.ok && code != kExitViolated) {
      code = kExitViolated;
      msg += ", violated along the trajectory";
    }
  }
  write_file(out / "lyapunov.json", dump(j));
  return {code, msg, {"lyapunov.json"}};
}

/// One row per step size: final state, its distance to the finest run, the
/// observed order against the next finer row, and per-scenario checks.
inline CommandResult sweep(const Scenario& s, const CommandOptions& opt, const std::filesystem::path& out) {
  const Vec& x0 = require_x0(s, "sweep");
  std::vector<double> hs = opt.sweep_values ? *opt.sweep_values
                           : s.sweep        ? s.sweep->values
                                            : std::vector<double>{1e-2, 1e-3, 1e-4};
  if (hs.empty()) throw Error(ErrorKind::InvalidArgument, "sweep: no step sizes");
  for (double h : hs)
    if (!(h > 0.0) || h > s.integrator.T) throw Error(ErrorKind::InvalidArgument, "sweep: need 0 < h <= T");
  std::vector<Trajectory> runs;
  for (double h : hs) {
    IntegratorConfig cfg = integrator_config(s);
    cfg.h = h;
    runs.push_back(integrate(s.A, s.F, cfg, x0));
  }
  std::size_t finest = static_cast<std::size_t>(std::min_element(hs.begin(), hs.end()) - hs.begin());
  const Eigen::Index n = s.n;
  std::ostringstream csv;
  csv << "h,steps,ok";
  for (Eigen::Index i = 1; i <= n; ++i) csv << ",x" << i;
  csv << ",delta_to_finest";
  if (s.set) csv << ",max_distance_to_set";
  if (s.lyapunov) csv << ",lyapunov_violation";
  csv << '\n';
  char buf[40];
  auto put = [&](double d) {
    if (std::isinf(d)) {
      csv << (d > 0 ? "inf" : "-inf");
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", d);
      csv << buf;
    }
  };
  int code = kExitPass;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const Trajectory& tr = runs[r];
    put(hs[r]);
    csv << ',' << (tr.states.empty() ? 0 : tr.states.size() - 1) << ',' << (tr.ok() ? 1 : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      csv << ',';
      put(tr.states.back()[i]);
    }
    csv << ',';
    put(tr.ok() && runs[finest].ok() ? (tr.states.back() - runs[finest].states.back()).norm() : kInf);
    if (s.set) {
      double dmax = 0.0;
      for (const auto& x : tr.states) dmax = std::max(dmax, distance(*s.set, x));
      csv << ',';
      put(dmax);
    }
    if (s.lyapunov) {
      csv << ',';
      put(tr.ok() ? verify_along_trajectory(s.lyapunov->pair, tr).max_violation : kInf);
    }
    csv << '\n';
    if (!tr.ok()) code = kExitError;
  }
  write_file(out / "sweep.csv", csv.str());
  return {code, "swept " + std::to_string(hs.size()) + " step sizes", {"sweep.csv"}};
}

}  // namespace detail

/// Runs one command on a loaded scenario. Library errors become exit 2.
inline CommandResult run_command(const CommandOptions& opt, Scenario s) {
  try {
    if (opt.seed) {
      s.seed = *opt.seed;
      s.sampler.seed = *opt.seed;
    }
    if (opt.tol && !(*opt.tol >= 0.0)) throw Error(ErrorKind::InvalidArgument, "--tol must be >= 0");
    std::filesystem::path out(opt.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + opt.out_dir + "': " + ec.message());
    if (opt.command == "simulate") return detail::simulate(s, out);
    if (opt.command == "check-invariance") return detail::check_invariance(s, opt, out);
    if (opt.command == "check-lyapunov") return detail::check_lyapunov(s, opt, out);
    if (opt.command == "sweep") return detail::sweep(s, opt, out);
    throw Error(ErrorKind::InvalidArgument, "unknown command '" + opt.command + "'");
  } catch (const std::exception& e) {
    return {kExitError, e.what(), {}};
  }
}

inline CommandResult run_command(const CommandOptions& opt, const std::string& scenario_path) {
  try {
    return run_command(opt, load_scenario(scenario_path));
  } catch (const std::exception& e) {
    return {kExitError, e.what(), {}};
  }
}

}  // namespace mfi
