#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nia_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

// Runs nia-sim with `args`; returns its exit status.
int sim(const std::string& args) {
  const std::string cmd = std::string(NIA_SIM_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

std::string header_value(const fs::path& p, const std::string& key) {
  std::istringstream in(slurp(p));
  std::string line;
  const std::string prefix = "# " + key + " = ";
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  return {};
}

const std::string kSmallNoisy = "--config fig3d --set realizations=3 --set T=0.2e-3 --no-timestamp";

}  // namespace

TEST(Cli, ReproducibleBytes) {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  ASSERT_EQ(sim("ensemble " + kSmallNoisy + " --out " + a.string()), 0);
  ASSERT_EQ(sim("ensemble " + kSmallNoisy + " --jobs 3 --out " + b.string()), 0);
  const std::string x = slurp(a / "ensemble.csv");
  EXPECT_FALSE(x.empty());
  EXPECT_EQ(x, slurp(b / "ensemble.csv"));
  EXPECT_EQ(x.find("generated"), std::string::npos);
}

TEST(Cli, TimestampIsOptIn) {
  const fs::path a = scratch("stamp");
  ASSERT_EQ(sim("simulate --config fig3a --out " + a.string()), 0);
  EXPECT_FALSE(header_value(a / "trajectory.csv", "generated").empty());
  EXPECT_EQ(header_value(a / "trajectory.csv", "J0"), "4000");
}

TEST(Cli, SeedChangesNoisyOutput) {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  ASSERT_EQ(sim("ensemble " + kSmallNoisy + " --seed 2 --out " + a.string()), 0);
  ASSERT_EQ(sim("ensemble " + kSmallNoisy + " --seed 3 --out " + b.string()), 0);
  EXPECT_NE(data_rows(a / "ensemble.csv"), data_rows(b / "ensemble.csv"));
}

TEST(Cli, UsageErrors) {
  const fs::path o = scratch("usage");
  EXPECT_EQ(sim("simulate --config fig3a --set bogus=1 --out " + o.string()), 1);
  EXPECT_EQ(sim("levitate --config fig3a --out " + o.string()), 1);
  EXPECT_EQ(sim("simulate --config nowhere.conf --out " + o.string()), 1);
  EXPECT_EQ(sim("simulate --config fig3a --set dt=0 --out " + o.string()), 1);
  EXPECT_EQ(sim("pulse-export --config fig4a --out " + o.string()), 1);
  EXPECT_EQ(sim("simulate"), 1);
  EXPECT_FALSE(fs::exists(o / "trajectory.csv"));
}

TEST(Cli, EnsembleNeedsSeed) {
  const fs::path o = scratch("noseed");
  const std::string cfg = (o.parent_path() / "noseed.conf").string();
  fs::create_directories(o.parent_path());
  std::ofstream(cfg) << "noise.enabled = true\nrealizations = 2\nT = 0.1e-3\n";
  EXPECT_EQ(sim("ensemble --config " + cfg + " --out " + o.string()), 1);
  EXPECT_EQ(sim("ensemble --config " + cfg + " --seed 5 --out " + o.string()), 0);
}

TEST(Cli, PresetFileAndNameAgree) {
  const fs::path a = scratch("by_name"), b = scratch("by_path");
  ASSERT_EQ(sim("simulate --config fig3a --no-timestamp --out " + a.string()), 0);
  ASSERT_EQ(sim("simulate --config " + std::string(NIA_PRESET_DIR) + "/fig3a.conf --no-timestamp --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
}

TEST(Cli, OracleCheckPasses) {
  const fs::path o = scratch("oracle");
  EXPECT_EQ(sim("oracle-check --config fig3b --out " + o.string()), 0);
  EXPECT_TRUE(fs::exists(o / "oracle_check.csv"));
  EXPECT_EQ(sim("oracle-check " + kSmallNoisy + " --out " + o.string()), 0);
}

TEST(Cli, SweepPointsMatchStandaloneRuns) {
  const fs::path s1 = scratch("sweep1"), s2 = scratch("sweep2"), one = scratch("single");
  ASSERT_EQ(sim("sweep " + kSmallNoisy + " --set sweep.parameter=T --set sweep.values=0.1e-3,0.2e-3 --out " +
                s1.string()),
            0);
  ASSERT_EQ(sim("sweep " + kSmallNoisy + " --set sweep.parameter=T --set sweep.values=0.2e-3,0.15e-3,0.1e-3 --out " +
                s2.string()),
            0);
  ASSERT_EQ(sim("ensemble " + kSmallNoisy + " --out " + one.string()), 0);
  EXPECT_EQ(data_rows(s1 / "sweep_1.csv"), data_rows(one / "ensemble.csv"));
  EXPECT_EQ(data_rows(s2 / "sweep_0.csv"), data_rows(one / "ensemble.csv"));
  EXPECT_EQ(data_rows(s1 / "sweep_0.csv"), data_rows(s2 / "sweep_2.csv"));
  const std::string h = header_value(s1 / "sweep_index.csv", "sweep_remainder_hash");
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, header_value(s2 / "sweep_index.csv", "sweep_remainder_hash"));
  EXPECT_EQ(h, header_value(s1 / "sweep_0.csv", "sweep_remainder_hash"));
  // the per-point file carries the same config hash as the standalone run
  EXPECT_EQ(header_value(s1 / "sweep_1.csv", "config_hash"), header_value(one / "ensemble.csv", "config_hash"));
}

TEST(Cli, PulseExportWritesSteps) {
  const fs::path o = scratch("pulse");
  ASSERT_EQ(sim("pulse-export --config fig3d --set T=0.1e-3 --out " + o.string()), 0);
  const std::string rows = data_rows(o / "pulse.tsv");
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 100);
  EXPECT_LT(std::stod(header_value(o / "pulse.tsv", "reconstruction_infidelity")), 1e-6);
}

TEST(Cli, KernelAndSpectatorModes) {
  const fs::path o = scratch("kernel");
  ASSERT_EQ(sim("kernel --config fig3b --out " + o.string()), 0);
  EXPECT_NE(slurp(o / "kernel.csv").find("t,mean_psi0_abs2,se_psi0_abs2,mean_defect,se_defect"), std::string::npos);
  EXPECT_EQ(sim("kernel --config fig3b --set kernel.points=100 --out " + o.string()), 1);
  EXPECT_EQ(sim("spectator-check --config fig3b --set J12=0 --out " + o.string()), 0);
  // without noise averaging the static zz shift moves pop0 by ~10%
  EXPECT_EQ(sim("spectator-check --config fig3b --out " + o.string()), 3);
}
