#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "twvae/model_config.hpp"
#include "twvae/preprocess.hpp"

namespace twvae {

/// Everything one training run needs. The text form is flat `key = value`
/// lines with `#` comments; lists are comma separated.
struct RunConfig {
  ModelConfig model;
  std::uint64_t seed = 0;
  std::size_t epochs = 20000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  bool augment = true;
  double augment_eta = 0.1;
  std::size_t augment_knots = 10;
  PreprocessMode preprocess = PreprocessMode::none;
  bool log_wallclock = true;
  std::string output_dir = ".";
  // Either a manifest path or, when empty, a synthetic dataset.
  std::string dataset;
  std::size_t synth_count = 128;
  std::size_t synth_latent_dims = 2;
  double synth_timing_spread = 0.5;
  double synth_test_fraction = 0.0;
  std::uint64_t synth_seed = 0;

  std::vector<std::string> validate() const;
};

/// Thrown with one message per bad line or field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> warnings;
  std::vector<std::string> keys_set;
};

/// Parses and validates; every problem is collected before throwing.
ParsedConfig parse_run_config(const std::string& text);
ParsedConfig load_run_config(const std::filesystem::path& path);

/// Canonical text form: every key, fixed order, round-trips exactly.
std::string to_text(const RunConfig& config);

}  // namespace twvae
