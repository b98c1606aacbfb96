// mf: simulate differential inclusions and check invariance / Lyapunov
// certificates for a JSON scenario.

#include "mfi/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Differential inclusions x' in F(x) - A(x): simulation and certificates"};
  app.require_subcommand(1);

  mfi::CommandOptions opt;
  std::string scenario;
  std::string variant;
  double tol = -1.0;
  std::uint64_t seed = 0;
  std::string param = "h";
  std::vector<double> values;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario, "scenario JSON file")->required();
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--variant", variant, "criterion variant tag");
    sub->add_option("--tol", tol, "margin tolerance");
    sub->add_option("--seed", seed, "sampling seed (overrides the scenario)");
  };
  for (const char* name : {"simulate", "check-invariance", "check-lyapunov"})
    add_common(app.add_subcommand(name, std::string(name)));
  CLI::App* sweep = app.add_subcommand("sweep", "integrate over several step sizes");
  add_common(sweep);
  sweep->add_option("--param", param, "swept parameter")->check(CLI::IsMember({"h"}));
  sweep->add_option("--values", values, "step sizes");

  CLI11_PARSE(app, argc, argv);

  opt.command = app.get_subcommands().front()->get_name();
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--variant")) opt.variant = variant;
  if (sub->count("--tol")) opt.tol = tol;
  if (sub->count("--seed")) opt.seed = seed;
  if (!values.empty()) opt.sweep_values = values;

  mfi::CommandResult r = mfi::run_command(opt, scenario);
  if (r.exit_code == mfi::kExitError)
    std::cerr << "mf: " << r.message << '\n';
  else
    std::cout << opt.command << ": " << r.message << '\n';
  for (const auto& f : r.files) std::cout << "  wrote " << (std::filesystem::path(opt.out_dir) / f).string() << '\n';
  return r.exit_code;
}
