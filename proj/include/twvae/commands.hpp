#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twvae/evaluate.hpp"
#include "twvae/run_config.hpp"
#include "twvae/training.hpp"

namespace twvae {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct SynthArgs {
  std::size_t count = 128;
  std::size_t latent_dims = 2;
  double timing_spread = 0.5;
  std::uint64_t seed = 0;
  std::size_t length = 200;
  double test_fraction = 0.0;
  std::filesystem::path out = "synth";
};

struct TrainArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides output_dir
  std::size_t checkpoint_every = 0;
};

struct TrainRun {
  std::vector<EpochMetrics> history;
  EvalReport report;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
};

/// Loads or synthesizes the data, fits preprocessing on the train split,
/// trains and writes checkpoint.bin, metrics.tsv and eval.txt into out_dir.
/// Relative dataset paths resolve against base_dir.
TrainRun run_training(const RunConfig& config, const std::filesystem::path& base_dir,
                      const std::filesystem::path& out_dir, std::size_t checkpoint_every, std::ostream& log);

/// Flat `key = value` rendering of an evaluation.
std::string format_eval_report(const EvalReport& report, const std::vector<std::string>& train_names,
                               const std::vector<std::string>& test_names);

// Each command returns its process exit code; messages go to `err`.
int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest, std::ostream& out,
             std::ostream& err);
/// Writes to `output` when given, otherwise to `out`.
int cmd_interp(const std::filesystem::path& checkpoint, const std::filesystem::path& traj_a,
               const std::filesystem::path& traj_b, std::size_t steps, const std::optional<std::filesystem::path>& output,
               std::ostream& out, std::ostream& err);
int cmd_warp(const std::filesystem::path& checkpoint, const std::filesystem::path& trajectory,
             const std::optional<std::filesystem::path>& output, std::ostream& out, std::ostream& err);

}  // namespace twvae
