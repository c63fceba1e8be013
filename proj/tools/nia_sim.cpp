// nia-sim: command-line front end for the simulation modes.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nia/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Noisy adiabatic sweep simulator"};
  std::string mode;
  std::string config;
  std::vector<std::string> overrides;
  unsigned jobs = 0;
  long long seed = -1;
  std::string out;
  bool no_timestamp = false;

  app.add_option("mode", mode,
                 "simulate | ensemble | sweep | kernel | pulse-export | oracle-check | spectator-check")
      ->required();
  app.add_option("--config", config, "preset name (fig3a..fig3d, fig4a, fig4b) or config file")->required();
  app.add_option("--set", overrides, "override a key: key=value (repeatable)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "output directory");
  app.add_flag("--no-timestamp", no_timestamp, "omit the generation time from outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nia::kExitOk : nia::kExitUsage;
  }

  nia::RunConfig cfg;
  nia::Mode m{};
  try {
    m = nia::parse_mode(mode);
    cfg = nia::load_config(config);
    for (const auto& s : overrides) nia::apply_override(cfg, s);
    if (jobs > 0) cfg.jobs = jobs;
    if (seed >= 0) nia::set_key(cfg, "seed", std::to_string(seed));
    if (!out.empty()) cfg.out = out;
    if (no_timestamp) cfg.timestamp = false;
  } catch (const nia::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nia::kExitUsage;
  }

  const nia::RunOutcome r = nia::run_mode(m, cfg, std::cout, std::cerr);
  for (const auto& f : r.files) std::cout << "wrote " << f << '\n';
  return r.exit_code;
}
