#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

#include "twvae/models.hpp"
#include "twvae/preprocess.hpp"
#include "twvae/run_config.hpp"
#include "twvae/tensor.hpp"

namespace twvae {

/// Binary layout, little endian:
///   "TWVAE1\n", u32 record count,
///   per record: u32 name length, name, u32 rank, u32 dims..., f32 payload,
///   u32 config length, config text (canonical RunConfig form).
/// Besides the model parameters the records hold "meta.epoch" and the
/// preprocessing statistics ("preprocess.means", "preprocess.scales").
struct Checkpoint {
  RunConfig config;
  PreprocessStats preprocess;
  ModelBundle bundle;
  std::size_t epoch = 0;
};

std::string serialize_checkpoint(const ModelBundle& bundle, const PreprocessStats& preprocess,
                                 const RunConfig& config, std::size_t epoch);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle, const PreprocessStats& preprocess,
                     const RunConfig& config, std::size_t epoch);
/// Throws std::runtime_error naming the path when it cannot be read.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Replaces every value by its nearest float so that in-memory parameters
/// equal what a checkpoint stores.
void round_to_float(ModelBundle& bundle);
PreprocessStats round_to_float(PreprocessStats stats);

}  // namespace twvae
