#pragma once

// Mode drivers behind nia-sim. Each writes its files into cfg.out and returns
// a process exit code.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nia/config.hpp"
#include "nia/evolve.hpp"
#include "nia/kernel.hpp"
#include "nia/metrics.hpp"
#include "nia/pulse.hpp"

namespace nia {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumeric = 2, kExitThreshold = 3 };

inline constexpr double kOracleToleranceClean = 1e-6;
inline constexpr double kOracleToleranceNoisy = 1e-4;
inline constexpr double kSpectatorTolerance = 1e-2;

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::ensemble: return "ensemble";
    case Mode::sweep: return "sweep";
    case Mode::kernel: return "kernel";
    case Mode::pulse_export: return "pulse-export";
    case Mode::oracle_check: return "oracle-check";
    case Mode::spectator_check: return "spectator-check";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::simulate, Mode::ensemble, Mode::sweep, Mode::kernel, Mode::pulse_export, Mode::oracle_check,
                 Mode::spectator_check}) {
    if (mode_name(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

// Runs fn(i) for i in [0, n) on `jobs` threads. Each index writes only its own
// slot, so results do not depend on scheduling. The lowest-index exception is
// rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::string fmt12(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::vector<std::string> preamble(const RunConfig& c, Mode mode, const std::vector<std::string>& extra = {}) {
  std::vector<std::string> out;
  out.push_back(std::string("nia-sim ") + kVersion);
  out.push_back("mode = " + mode_name(mode));
  out.push_back("config_hash = " + hex64(config_hash(c)));
  for (const auto& [k, v] : to_key_values(c)) {
    if (!is_output_key(k)) out.push_back(k + " = " + v);
  }
  for (const auto& e : extra) out.push_back(e);
  if (c.timestamp) out.push_back("generated = " + utc_now());
  return out;
}

inline std::ofstream open_output(const RunConfig& c, const std::string& name, std::vector<std::string>& written) {
  std::filesystem::create_directories(c.out);
  const std::filesystem::path p = std::filesystem::path(c.out) / name;
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  written.push_back(p.string());
  return os;
}

inline void write_preamble(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) os << "# " << l << '\n';
}

inline std::string realization_range(std::size_t m) {
  return "realizations_used = 0.." + std::to_string(m - 1);
}

inline EvolutionConfig evolution_config(const RunConfig& c) {
  return {c.dt, c.renormalize, c.store_every};
}

inline std::optional<NoiseRealization> realization(const RunConfig& c, std::size_t index) {
  if (!c.noise_enabled) return std::nullopt;
  return NoiseRealization(make_noise_spec(c), index);
}

inline Trajectory run_member(const RunConfig& c, const Schedule& schedule, std::size_t index) {
  const auto noise = realization(c, index);
  Trajectory tr = evolve_stepwise(schedule, noise ? &*noise : nullptr, evolution_config(c), make_initial_state(c));
  tr.meta.seed = c.seed;
  tr.meta.realization = index;
  return tr;
}

inline std::vector<Trajectory> run_members(const RunConfig& c, const Schedule& schedule, std::size_t m) {
  std::vector<Trajectory> out(m);
  parallel_for(m, c.jobs, [&](std::size_t i) { out[i] = run_member(c, schedule, i); });
  return out;
}

inline const char* kSampleColumns[] = {"pop0", "pop1", "im_coherence", "fidelity_e0", "gap", "noise"};

inline void write_sample(std::ostream& os, const Sample& s) {
  os << fmt12(s.t) << ',' << fmt12(s.pop0) << ',' << fmt12(s.pop1) << ',' << fmt12(s.im_coherence) << ','
     << fmt12(s.fidelity_e0) << ',' << fmt12(s.gap) << ',' << fmt12(s.noise);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t";
  for (const char* col : kSampleColumns) os << ',' << col;
  os << '\n';
  for (const Sample& s : tr.samples) {
    write_sample(os, s);
    os << '\n';
  }
}

// Columns: t, realization-0 sample, then mean_* and se_* per metric.
inline void write_ensemble_csv(std::ostream& os, const std::vector<Trajectory>& trajs, const EnsembleSummary& e) {
  os << "t";
  for (const char* col : kSampleColumns) os << ',' << col;
  for (const char* col : kSampleColumns) os << ",mean_" << col << ",se_" << col;
  os << '\n';
  const MetricStats* stats[] = {&e.pop0, &e.pop1, &e.im_coherence, &e.fidelity_e0, &e.gap, &e.noise};
  for (std::size_t i = 0; i < e.times.size(); ++i) {
    write_sample(os, trajs.front().samples[i]);
    for (const MetricStats* s : stats) os << ',' << fmt12(s->mean[i]) << ',' << fmt12(s->se[i]);
    os << '\n';
  }
}

}  // namespace detail

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> files;
};

inline RunOutcome run_simulate(const RunConfig& c, std::ostream& log) {
  RunOutcome r;
  const Trajectory tr = detail::run_member(c, make_schedule(c), 0);
  auto os = detail::open_output(c, "trajectory.csv", r.files);
  detail::write_preamble(os, detail::preamble(c, Mode::simulate, {c.noise_enabled ? "realization = 0" : "realization = none"}));
  detail::write_trajectory_csv(os, tr);
  const Sample& f = tr.final();
  log << "final pop0 = " << detail::fmt12(f.pop0) << ", pop1 = " << detail::fmt12(f.pop1)
      << ", fidelity_e0 = " << detail::fmt12(f.fidelity_e0) << '\n';
  return r;
}

inline RunOutcome run_ensemble(const RunConfig& c, std::ostream& log, const std::string& file = "ensemble.csv",
                               const std::vector<std::string>& extra = {}) {
  RunOutcome r;
  const std::size_t m = c.noise_enabled ? c.realizations : 1;
  const std::vector<Trajectory> trajs = detail::run_members(c, make_schedule(c), m);
  const EnsembleSummary e = aggregate(trajs);
  std::vector<std::string> meta = extra;
  meta.push_back(detail::realization_range(m));
  auto os = detail::open_output(c, file, r.files);
  detail::write_preamble(os, detail::preamble(c, Mode::ensemble, meta));
  detail::write_ensemble_csv(os, trajs, e);
  log << file << ": " << m << " realizations, final mean pop0 = " << detail::fmt12(e.pop0.mean.back()) << " +- "
      << detail::fmt12(e.pop0.se.back()) << '\n';
  return r;
}

// Each value runs through the same path as a standalone ensemble run with the
// swept key overridden.
inline RunOutcome run_sweep(const RunConfig& c, std::ostream& log) {
  RunOutcome r;
  const std::vector<std::string> excluded = {c.sweep_parameter, "sweep.parameter", "sweep.values"};
  const std::string remainder = hex64(config_hash(c, excluded));
  std::vector<std::string> summary;
  for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
    RunConfig point = c;
    point.sweep_parameter.clear();
    point.sweep_values.clear();
    set_key(point, c.sweep_parameter, detail::fmt_double(c.sweep_values[i]));
    const auto bad = validate(point, Mode::ensemble);
    if (has_errors(bad)) throw ConfigError("sweep point " + std::to_string(i) + ": " + bad.front().message);
    const std::string file = "sweep_" + std::to_string(i) + ".csv";
    RunOutcome one = run_ensemble(point, log, file,
                                  {"sweep_parameter = " + c.sweep_parameter, "sweep_remainder_hash = " + remainder});
    r.files.insert(r.files.end(), one.files.begin(), one.files.end());
    summary.push_back(c.sweep_parameter + "=" + detail::fmt12(c.sweep_values[i]) + " -> " + file);
  }
  auto os = detail::open_output(c, "sweep_index.csv", r.files);
  std::vector<std::string> meta = {"sweep_remainder_hash = " + remainder};
  detail::write_preamble(os, detail::preamble(c, Mode::sweep, meta));
  os << "index," << c.sweep_parameter << ",file\n";
  for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
    os << i << ',' << detail::fmt12(c.sweep_values[i]) << ",sweep_" << i << ".csv\n";
  }
  return r;
}

inline RunOutcome run_kernel(const RunConfig& c, std::ostream& log) {
  RunOutcome r;
  const Schedule schedule = make_schedule(c);
  const std::size_t m = c.noise_enabled ? c.realizations : 1;
  std::vector<MemorySolution> sols(m);
  parallel_for(m, c.jobs, [&](std::size_t i) {
    const auto noise = detail::realization(c, i);
    sols[i] = solve_memory_equation(schedule, noise ? &*noise : nullptr, c.kernel_points);
  });
  const std::size_t n = sols.front().times.size();
  auto os = detail::open_output(c, "kernel.csv", r.files);
  detail::write_preamble(os, detail::preamble(c, Mode::kernel, {detail::realization_range(m)}));
  os << "t,mean_psi0_abs2,se_psi0_abs2,mean_defect,se_defect\n";
  auto mean_se = [&](auto&& f, std::size_t i) {
    double s = 0.0, ss = 0.0;
    for (const auto& sol : sols) s += f(sol, i);
    const double mean = s / static_cast<double>(m);
    for (const auto& sol : sols) ss += (f(sol, i) - mean) * (f(sol, i) - mean);
    const double se = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
    return std::pair{mean, se};
  };
  auto abs2 = [](const MemorySolution& s, std::size_t i) { return std::norm(s.psi0[i]); };
  auto defect = [](const MemorySolution& s, std::size_t i) { return adiabatic_defect(s, i); };
  for (std::size_t i = 0; i < n; ++i) {
    const auto [pm, ps] = mean_se(abs2, i);
    const auto [dm, ds] = mean_se(defect, i);
    os << detail::fmt12(sols.front().times[i]) << ',' << detail::fmt12(pm) << ',' << detail::fmt12(ps) << ','
       << detail::fmt12(dm) << ',' << detail::fmt12(ds) << '\n';
  }
  double worst = 0.0;
  for (const auto& s : sols) worst += max_adiabatic_defect(s);
  log << "mean max adiabatic defect = " << detail::fmt12(worst / static_cast<double>(m)) << " over " << m
      << " realization(s)\n";
  return r;
}

inline RunOutcome run_pulse_export(const RunConfig& c, std::ostream& log) {
  RunOutcome r;
  const Schedule schedule = make_schedule(c);
  const auto noise = detail::realization(c, 0);
  const NoiseRealization* np = noise ? &*noise : nullptr;
  const auto steps = decompose_pulse(schedule, np, detail::evolution_config(c));
  const double err = operator_infidelity(reconstruct_propagator(steps), direct_propagator(schedule, np, detail::evolution_config(c)));
  auto os = detail::open_output(c, "pulse.tsv", r.files);
  write_pulse_file(os, steps,
                   detail::preamble(c, Mode::pulse_export,
                                    {c.noise_enabled ? "realization = 0" : "realization = none",
                                     "reconstruction_infidelity = " + detail::fmt12(err)}));
  log << steps.size() << " pulse steps, reconstruction infidelity = " << detail::fmt12(err) << '\n';
  return r;
}

inline RunOutcome run_oracle_check(const RunConfig& c, std::ostream& log) {
  RunOutcome r;
  const Schedule schedule = make_schedule(c);
  const std::size_t m = c.noise_enabled ? c.realizations : 1;
  std::vector<double> infid(m);
  parallel_for(m, c.jobs, [&](std::size_t i) {
    const auto noise = detail::realization(c, i);
    const NoiseRealization* np = noise ? &*noise : nullptr;
    const StateVector psi0 = make_initial_state(c);
    const Trajectory a = evolve_stepwise(schedule, np, detail::evolution_config(c), psi0);
    const Trajectory b = evolve_oracle(schedule, np, detail::evolution_config(c), psi0, c.oracle_sampling);
    infid[i] = state_infidelity(a.final_state(), b.final_state());
  });
  const double tol = c.noise_enabled ? kOracleToleranceNoisy : kOracleToleranceClean;
  const double worst = *std::max_element(infid.begin(), infid.end());
  auto os = detail::open_output(c, "oracle_check.csv", r.files);
  detail::write_preamble(os, detail::preamble(c, Mode::oracle_check,
                                              {detail::realization_range(m), "tolerance = " + detail::fmt12(tol)}));
  os << "realization,final_state_infidelity\n";
  for (std::size_t i = 0; i < m; ++i) os << i << ',' << detail::fmt12(infid[i]) << '\n';
  log << "worst final-state infidelity = " << detail::fmt12(worst) << " (tolerance " << detail::fmt12(tol) << ")\n";
  if (!(worst <= tol)) r.exit_code = kExitThreshold;
  return r;
}

// Compares the driven qubit alone with the same qubit coupled to a spectator,
// on ensemble-mean population curves over shared noise realizations.
inline RunOutcome run_spectator_check(const RunConfig& c, std::ostream& log) {
  RunOutcome r;
  RunConfig base = c;
  base.system = SystemKind::single;
  RunConfig emb = c;
  emb.system = SystemKind::spectator;
  RunConfig sanity = emb;
  sanity.J12 = 0.0;
  const std::size_t m = c.noise_enabled ? c.realizations : 1;
  const auto tb = detail::run_members(base, make_schedule(base), m);
  const auto te = detail::run_members(emb, make_schedule(emb), m);
  const auto ts = detail::run_members(sanity, make_schedule(sanity), 1);

  const EnsembleSummary sb = aggregate(tb);
  const EnsembleSummary se = aggregate(te);
  Trajectory mb = tb.front(), me = te.front();
  for (std::size_t i = 0; i < mb.samples.size(); ++i) {
    mb.samples[i].pop0 = sb.pop0.mean[i];
    me.samples[i].pop0 = se.pop0.mean[i];
  }
  const double err = spectator_error(mb, me);
  double worst_single = 0.0;
  for (std::size_t i = 0; i < m; ++i) worst_single = std::max(worst_single, spectator_error(tb[i], te[i]));
  const double zero_coupling = spectator_error(tb.front(), ts.front());

  auto os = detail::open_output(c, "spectator_check.csv", r.files);
  detail::write_preamble(os, detail::preamble(c, Mode::spectator_check,
                                              {detail::realization_range(m),
                                               "ensemble_relative_error = " + detail::fmt12(err),
                                               "worst_single_realization_error = " + detail::fmt12(worst_single),
                                               "zero_coupling_error = " + detail::fmt12(zero_coupling)}));
  os << "t,mean_pop0_base,mean_pop0_embedded\n";
  for (std::size_t i = 0; i < sb.times.size(); ++i) {
    os << detail::fmt12(sb.times[i]) << ',' << detail::fmt12(sb.pop0.mean[i]) << ','
       << detail::fmt12(se.pop0.mean[i]) << '\n';
  }
  log << "spectator relative error (ensemble mean) = " << detail::fmt12(err)
      << ", worst single realization = " << detail::fmt12(worst_single)
      << ", J12 = 0 check = " << detail::fmt12(zero_coupling) << '\n';
  if (!(err < kSpectatorTolerance)) r.exit_code = kExitThreshold;
  return r;
}

// Validates, dispatches, and maps library errors to exit codes.
inline RunOutcome run_mode(Mode mode, const RunConfig& c, std::ostream& log, std::ostream& err) {
  const auto issues = validate(c, mode);
  for (const auto& v : issues) {
    err << (v.severity == Severity::error ? "error: " : "warning: ") << v.field << ": " << v.message << '\n';
  }
  if (has_errors(issues)) return {kExitUsage, {}};
  try {
    switch (mode) {
      case Mode::simulate: return run_simulate(c, log);
      case Mode::ensemble: return run_ensemble(c, log);
      case Mode::sweep: return run_sweep(c, log);
      case Mode::kernel: return run_kernel(c, log);
      case Mode::pulse_export: return run_pulse_export(c, log);
      case Mode::oracle_check: return run_oracle_check(c, log);
      case Mode::spectator_check: return run_spectator_check(c, log);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return {kExitUsage, {}};
  } catch (const UnsupportedSchedule& e) {
    err << "error: " << e.what() << '\n';
    return {kExitUsage, {}};
  } catch (const Error& e) {
    err << "numeric failure: " << e.what() << '\n';
    return {kExitNumeric, {}};
  }
  return {kExitUsage, {}};
}

}  // namespace nia
