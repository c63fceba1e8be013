#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "nia/config.hpp"

using namespace nia;

namespace {

bool mentions(const std::vector<Violation>& v, const std::string& needle, Severity sev = Severity::error) {
  for (const Violation& x : v)
    if (x.severity == sev && x.message.find(needle) != std::string::npos) return true;
  return false;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Validate, PresetsAreClean) {
  for (const auto& [name, text] : preset_texts()) {
    const RunConfig c = preset(name);
    EXPECT_FALSE(has_errors(validate(c, Mode::simulate))) << name;
    EXPECT_FALSE(has_errors(validate(c, Mode::oracle_check))) << name;
  }
  EXPECT_FALSE(has_errors(validate(preset("fig3d"), Mode::ensemble)));
}

TEST(Validate, NonPositiveStep) {
  RunConfig c = preset("fig3a");
  c.dt = 0.0;
  EXPECT_TRUE(mentions(validate(c), "dt must be positive"));
  c.dt = -1e-6;
  EXPECT_TRUE(mentions(validate(c), "dt must be positive"));
}

TEST(Validate, NoiseBandInvariant) {
  RunConfig c = preset("fig3d");
  c.noise_omega0 = 6000.0;
  const auto v = validate(c);
  EXPECT_TRUE(has_errors(v));
  EXPECT_TRUE(mentions(v, "NoiseSpec invariant"));
  // same values with noise off are irrelevant
  c.noise_enabled = false;
  EXPECT_FALSE(has_errors(validate(c)));
}

TEST(Validate, EnsembleNeedsExplicitSeed) {
  RunConfig c = preset("fig3d");
  c.seed_set = false;
  EXPECT_TRUE(mentions(validate(c, Mode::ensemble), "seed"));
  apply_override(c, "seed=7");
  EXPECT_FALSE(has_errors(validate(c, Mode::ensemble)));
}

TEST(Validate, ModeSystemChecks) {
  EXPECT_TRUE(has_errors(validate(preset("fig4a"), Mode::pulse_export)));
  RunConfig c = preset("fig3b");
  c.kernel_points = 499;
  EXPECT_TRUE(mentions(validate(c, Mode::kernel), "kernel.points"));
  EXPECT_FALSE(has_errors(validate(c, Mode::simulate)));
}

TEST(Validate, CoarseStepWarnsOnly) {
  RunConfig c = preset("fig3b");
  c.dt = 0.2e-3;
  const auto v = validate(c);
  EXPECT_FALSE(has_errors(v));
  EXPECT_TRUE(mentions(v, "under-resolved", Severity::warning));
}

TEST(Validate, SweepChecks) {
  RunConfig c = preset("fig3d");
  c.sweep_parameter = "dt";
  c.sweep_values = {1e-6};
  EXPECT_TRUE(mentions(validate(c, Mode::sweep), "sweep.parameter"));
  c.sweep_parameter = "T";
  c.sweep_values.clear();
  EXPECT_TRUE(mentions(validate(c, Mode::sweep), "sweep.values"));
  apply_override(c, "sweep.values=0.3e-3, 0.5e-3");
  ASSERT_EQ(c.sweep_values.size(), 2u);
  EXPECT_FALSE(has_errors(validate(c, Mode::sweep)));
}

TEST(ConfigText, CommentsAndWhitespace) {
  RunConfig c;
  apply_config_text(c, "# header\n\n  J0 = 123.5   # trailing\nsystem=pair\n\tT\t=\t2e-3\n");
  EXPECT_EQ(c.J0, 123.5);
  EXPECT_EQ(c.system, SystemKind::pair);
  EXPECT_EQ(c.T, 2e-3);
}

TEST(ConfigText, Rejections) {
  RunConfig c;
  EXPECT_THROW(apply_config_text(c, "bogus = 1\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "J0 4000\n"), ConfigError);
  EXPECT_THROW(apply_override(c, "J0=abc"), ConfigError);
  EXPECT_THROW(apply_override(c, "noise.normalization=loud"), ConfigError);
  EXPECT_THROW(apply_override(c, "convention=radians"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.conf"), ConfigError);
}

TEST(ConfigText, RoundTripThroughKeyValues) {
  RunConfig c = preset("fig4b");
  apply_override(c, "convention=hertz");
  apply_override(c, "noise.normalization=unit-rms");
  std::string text;
  for (const auto& [k, v] : to_key_values(c)) text += k + " = " + v + "\n";
  RunConfig d;
  apply_config_text(d, text);
  EXPECT_EQ(to_key_values(c), to_key_values(d));
  EXPECT_EQ(config_hash(c), config_hash(d));
}

TEST(Presets, ParameterValues) {
  for (const char* name : {"fig3a", "fig3b", "fig3c", "fig3d"}) {
    const RunConfig c = preset(name);
    EXPECT_EQ(c.system, SystemKind::single);
    EXPECT_EQ(c.J0, 4000.0);
    EXPECT_EQ(c.dt, 1e-6);
  }
  EXPECT_EQ(preset("fig3a").T, 0.3e-3);
  EXPECT_EQ(preset("fig3b").T, 0.5e-3);
  EXPECT_EQ(preset("fig3c").T, 1.5e-3);
  const RunConfig d = preset("fig3d");
  EXPECT_TRUE(d.noise_enabled);
  EXPECT_EQ(d.T, 0.5e-3);
  EXPECT_EQ(d.noise_amplitude, 4000.0);
  EXPECT_EQ(d.noise_omega_cut, 5000.0);
  EXPECT_EQ(d.noise_omega0, 1.0);
  EXPECT_EQ(d.realizations, 100u);

  for (const char* name : {"fig4a", "fig4b"}) {
    const RunConfig c = preset(name);
    EXPECT_EQ(c.system, SystemKind::pair);
    EXPECT_EQ(c.J0, 100.0);
    EXPECT_EQ(c.T, 10e-3);
    EXPECT_EQ(c.dt, 1e-5);
    EXPECT_EQ(c.initial_state, "pair01");
  }
  const RunConfig b = preset("fig4b");
  EXPECT_EQ(b.noise_amplitude, 1000.0);
  EXPECT_EQ(b.noise_omega_cut, 25000.0);
  EXPECT_EQ(b.noise_omega0, 1.0);
  EXPECT_FALSE(preset("fig4a").noise_enabled);
}

TEST(Presets, FilesMatchBuiltins) {
  for (const auto& [name, text] : preset_texts()) {
    const std::string path = std::string(NIA_PRESET_DIR) + "/" + name + ".conf";
    EXPECT_EQ(slurp(path), text) << path;
    EXPECT_EQ(config_hash(load_config(path)), config_hash(preset(name)));
  }
}

TEST(ConfigHash, StableAndSensitive) {
  const RunConfig a = preset("fig3d");
  RunConfig b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.out = "/tmp/elsewhere";
  b.jobs = 8;
  b.timestamp = false;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.J0 = 4001.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  // FNV-1a 64 reference vectors
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(ConfigHash, SweepRemainderIgnoresSweptKey) {
  RunConfig a = preset("fig3d");
  a.sweep_parameter = "T";
  a.sweep_values = {0.3e-3, 0.5e-3};
  RunConfig b = a;
  b.T = 0.3e-3;
  b.sweep_values = {0.3e-3};
  const std::vector<std::string> ex = {"T", "sweep.parameter", "sweep.values"};
  EXPECT_EQ(config_hash(a, ex), config_hash(b, ex));
  b.J0 = 5000.0;
  EXPECT_NE(config_hash(a, ex), config_hash(b, ex));
}

TEST(InitialState, Presets) {
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_TRUE(parse_initial_state("zero", 2) == StateVector::basis(2, 0));
  EXPECT_TRUE(parse_initial_state("one", 2) == StateVector::basis(2, 1));
  EXPECT_TRUE(parse_initial_state("pair01", 4) == StateVector::basis(4, 1));
  EXPECT_TRUE(parse_initial_state("plus", 2) == (StateVector{r, r}));
  const StateVector amps = parse_initial_state("amps:0.6,0,0,0.8", 2);
  EXPECT_EQ(amps[1], Complex(0.0, 0.8));
  EXPECT_THROW(parse_initial_state("amps:1,0,1,0", 2), ConfigError);
  EXPECT_THROW(parse_initial_state("pair01", 2), ConfigError);
  EXPECT_THROW(parse_initial_state("sideways", 2), ConfigError);

  RunConfig c = preset("fig3b");
  c.system = SystemKind::spectator;
  c.spectator_initial = "plus";
  const StateVector s = make_initial_state(c);
  EXPECT_NEAR(s[0].real(), r, 1e-15);
  EXPECT_NEAR(s[1].real(), r, 1e-15);
  EXPECT_EQ(s[2], Complex(0.0));
}
