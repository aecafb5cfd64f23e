#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noilc_arm/cli.hpp"

namespace {

void add_overrides(CLI::App* cmd, noilc_arm::cli::Overrides& o, std::optional<std::size_t>& iters,
                   std::optional<std::string>& plant, std::optional<std::uint64_t>& seed,
                   std::optional<std::string>& baseline, std::optional<std::string>& dist) {
  cmd->add_option("--iterations", iters, "learning iterations after iteration 0");
  cmd->add_option("--plant", plant, "truth plant")
      ->check(CLI::IsMember({"nominal", "pneumatic"}));
  cmd->add_option("--seed", seed, "measurement noise seed");
  cmd->add_flag("--no-noise", o.no_noise, "disable measurement noise");
  cmd->add_option("--baseline", baseline, "learning law instead of NOILC")
      ->check(CLI::IsMember({"pd-ilc", "none"}));
  cmd->add_option("--disturbance", dist, "repetitive output disturbance")
      ->check(CLI::IsMember({"fixed", "none"}));
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = noilc_arm::cli;
  CLI::App app{"Norm-optimal iterative learning control for a pneumatic soft arm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", noilc_arm::kVersion);

  cli::Overrides o;
  std::optional<std::size_t> iters;
  std::optional<std::string> plant;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> baseline;
  std::optional<std::string> dist;

  std::optional<std::string> config;
  std::string out = "out";

  auto* run = app.add_subcommand("run", "run a learning experiment and write CSV artifacts");
  run->add_option("--config", config, "experiment config (TOML)")->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory");
  add_overrides(run, o, iters, plant, seed, baseline, dist);

  std::string correction;
  std::optional<std::string> replay_out;
  std::optional<std::size_t> replay_j;
  auto* replay = app.add_subcommand("replay", "run one iteration with a stored correction");
  replay->add_option("correction", correction, "correction file")->required();
  replay->add_option("--config", config, "experiment config (TOML)")->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "directory for replay_trace.csv");
  replay->add_option("--iteration", replay_j, "iteration index used for the noise stream");
  add_overrides(replay, o, iters, plant, seed, baseline, dist);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config and its trajectory");
  validate->add_option("path,--config", validate_path, "experiment config (TOML)");

  std::vector<std::string> sweep_configs;
  std::vector<std::uint64_t> sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "run several experiments concurrently");
  sweep->add_option("--config", sweep_configs, "experiment configs")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--seeds", sweep_seeds, "seeds to run for every config");
  sweep->add_option("--out", out, "root output directory");
  add_overrides(sweep, o, iters, plant, seed, baseline, dist);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  o.iterations = iters;
  o.plant = plant;
  o.seed = seed;
  o.baseline = baseline;
  o.disturbance = dist;

  std::optional<std::filesystem::path> cfg_path;
  if (config) cfg_path = *config;

  if (*run) return cli::cmd_run(cfg_path, out, o, std::cout, std::cerr);
  if (*replay) {
    std::optional<std::filesystem::path> ro;
    if (replay_out) ro = *replay_out;
    return cli::cmd_replay(correction, cfg_path, ro, replay_j, o, std::cout, std::cerr);
  }
  if (*validate) {
    if (validate_path.empty()) {
      std::cerr << "error: validate needs a config path\n";
      return cli::kUsage;
    }
    return cli::cmd_validate(validate_path, std::cout, std::cerr);
  }
  if (*sweep) {
    std::vector<std::filesystem::path> paths(sweep_configs.begin(), sweep_configs.end());
    return cli::cmd_sweep(paths, sweep_seeds, out, o, std::cout, std::cerr);
  }
  return cli::kUsage;
}
