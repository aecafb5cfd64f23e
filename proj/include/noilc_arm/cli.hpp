#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "noilc_arm/config.hpp"
#include "noilc_arm/correction_io.hpp"
#include "noilc_arm/csv.hpp"
#include "noilc_arm/harness.hpp"
#include "noilc_arm/version.hpp"

namespace noilc_arm::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDivergence = 3 };

// Command-line settings shared by run, replay and sweep. Unset fields leave
// the config file untouched.
struct Overrides {
  std::optional<std::size_t> iterations;
  std::optional<std::string> plant;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> baseline;
  std::optional<std::string> disturbance;
  bool no_noise = false;
};

inline ConfigDocument load_document(const std::optional<std::filesystem::path>& path) {
  return path ? ConfigDocument::parse(read_text_file(*path)) : ConfigDocument{};
}

inline void apply_overrides(ConfigDocument& doc, const Overrides& o) {
  if (o.iterations) doc.set("experiment.iterations", static_cast<double>(*o.iterations));
  if (o.plant) {
    doc.set("experiment.plant", *o.plant);
    doc.set("feedback.enabled", *o.plant != "nominal");
  }
  if (o.seed) doc.set("experiment.seed", static_cast<double>(*o.seed));
  if (o.baseline) doc.set("experiment.learning", *o.baseline);
  if (o.disturbance) doc.set("disturbance.kind", *o.disturbance);
  if (o.no_noise) doc.set("measurement.noise_std_deg", 0.0);
}

inline std::filesystem::path base_dir(const std::optional<std::filesystem::path>& path) {
  return path ? path->parent_path() : std::filesystem::path{};
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string trace_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trace_%03zu.csv", j);
  return buf;
}

inline void write_trace(const std::filesystem::path& path, const ExperimentConfig& cfg,
                        const Trajectory& ref, const IterationRecord& rec) {
  CsvWriter w(path.string());
  w.header({"t", "y_des_deg", "y_deg", "u_pid_pa", "u_corr_pa", "u_tot_pa", "p_a_pa", "p_b_pa"});
  for (Eigen::Index k = 0; k < rec.u_tot.size(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    w.row(ref.time(ks), rad2deg(ref.angle[ks]), rad2deg(rec.y(k)), rec.u_pid(k),
          rec.u_corr(k) * cfg.norms.input_scale, rec.u_tot(k), rec.p_a(k), rec.p_b(k));
  }
  w.close();
}

struct RunResult {
  int code = kOk;
  std::vector<IterationRecord> records;
};

// Runs the experiment described by `doc` and writes every artifact into out.
inline RunResult run_to_directory(const ConfigDocument& doc, const std::filesystem::path& cfg_dir,
                                  const std::filesystem::path& out, std::ostream& log,
                                  const std::string& config_label = "") {
  const ExperimentConfig cfg = config_from_document(doc, cfg_dir);
  std::filesystem::create_directories(out);
  RunResult result;
  result.records = run_experiment(cfg);
  const Trajectory ref = cfg.reference();

  nlohmann::json outputs = nlohmann::json::array();
  CsvWriter iters((out / "iterations.csv").string());
  iters.header({"j", "rms_deg", "clamp_count"});
  for (const IterationRecord& rec : result.records) {
    iters.row(rec.j, rec.rms_deg, rec.clamp_count);
    const std::string name = trace_name(rec.j);
    write_trace(out / name, cfg, ref, rec);
    outputs.push_back(name);
    log << "iteration " << rec.j << " rms_deg " << format_number(rec.rms_deg) << " clamps "
        << rec.clamp_count << "\n";
  }
  iters.close();
  outputs.insert(outputs.begin(), "iterations.csv");

  const IterationRecord& last = result.records.back();
  save_correction(out / "correction.bin", IlcIterate{last.u_corr, last.e, last.j, cfg.T_ilc()});
  outputs.push_back("correction.bin");

  nlohmann::json manifest = {
      {"tool", "noilc_arm"},
      {"version", kVersion},
      {"timestamp", utc_timestamp()},
      {"config", config_label},
      {"config_hash", doc.hash()},
      {"iterations", cfg.iterations},
      {"samples", ref.size()},
      {"initial_rms_deg", result.records.front().rms_deg},
      {"final_rms_deg", last.rms_deg},
      {"outputs", outputs},
  };
  std::ofstream(out / "manifest.json", std::ios::binary | std::ios::trunc)
      << manifest.dump(2) << "\n";
  return result;
}

// Maps library errors onto exit codes and prints a one-line diagnostic.
template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrityError& e) {
    err << "error: integrity: " << e.what() << "\n";
    return kUsage;
  } catch (const LengthMismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

inline int cmd_run(const std::optional<std::filesystem::path>& config,
                   const std::filesystem::path& out, const Overrides& o, std::ostream& log,
                   std::ostream& err) {
  return guarded(
      [&] {
        ConfigDocument doc = load_document(config);
        apply_overrides(doc, o);
        const RunResult r =
            run_to_directory(doc, base_dir(config), out, log, config ? config->string() : "");
        log << "wrote " << r.records.size() << " iterations to " << out.string() << "\n";
        return r.code;
      },
      err);
}

inline int cmd_replay(const std::filesystem::path& correction,
                      const std::optional<std::filesystem::path>& config,
                      const std::optional<std::filesystem::path>& out,
                      std::optional<std::size_t> iteration, const Overrides& o, std::ostream& log,
                      std::ostream& err) {
  return guarded(
      [&] {
        ConfigDocument doc = load_document(config);
        apply_overrides(doc, o);
        const ExperimentConfig cfg = config_from_document(doc, base_dir(config));
        const Trajectory ref = cfg.reference();
        const IlcIterate it = load_correction(correction, ref.size());
        const std::size_t j = iteration.value_or(cfg.iterations);
        const IterationRecord rec = run_single_iteration(cfg, it.u, j);
        if (out) {
          std::filesystem::create_directories(*out);
          write_trace(*out / "replay_trace.csv", cfg, ref, rec);
        }
        log << "rms_deg " << format_number(rec.rms_deg) << "\n";
        return static_cast<int>(kOk);
      },
      err);
}

inline int cmd_validate(const std::filesystem::path& config, std::ostream& log,
                        std::ostream& err) {
  return guarded(
      [&] {
        const LoadedConfig lc = load_config(config);
        log << "ok " << config.string() << " hash " << lc.document.hash() << " samples "
            << lc.config.reference().size() << "\n";
        return static_cast<int>(kOk);
      },
      err);
}

inline std::size_t sweep_thread_cap(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NOILC_ARM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

struct SweepJob {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
};

// Runs the cartesian product of configs and seeds, one directory per job.
// The exit code is the most severe among the jobs.
inline int cmd_sweep(const std::vector<std::filesystem::path>& configs,
                     const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
                     const Overrides& o, std::ostream& log, std::ostream& err) {
  std::vector<SweepJob> jobs;
  for (const auto& c : configs) {
    if (seeds.empty()) {
      jobs.push_back({c, std::nullopt, out / c.stem()});
    } else {
      for (std::uint64_t s : seeds)
        jobs.push_back({c, s, out / (c.stem().string() + "_seed" + std::to_string(s))});
    }
  }
  std::vector<int> codes(jobs.size(), kOk);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      Overrides job_o = o;
      if (jobs[i].seed) job_o.seed = jobs[i].seed;
      std::ostringstream job_log;
      std::ostringstream job_err;
      codes[i] = cmd_run(jobs[i].config, jobs[i].out, job_o, job_log, job_err);
      std::lock_guard<std::mutex> lock(io);
      log << "[" << jobs[i].out.string() << "] exit " << codes[i] << "\n";
      err << job_err.str();
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = sweep_thread_cap(jobs.size());
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = kOk;
  for (int c : codes) {
    if (c == kDivergence) code = kDivergence;
    else if (c != kOk && code == kOk) code = c;
  }
  return code;
}

}  // namespace noilc_arm::cli
