#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "twvae/trajectory.hpp"

namespace twvae {

/// Parse failure carrying the file and 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::filesystem::path& file, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One trajectory per file: a `# channels: a,b,...` header, then one row of
/// comma-separated samples per timestep.
Trajectory load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Manifest lines are `relative/path.csv,train|test`; paths resolve against
/// the manifest's directory.
Dataset load_manifest(const std::filesystem::path& manifest);
/// Writes every trajectory as <dir>/<name> (or traj_NNNN.csv) plus <dir>/manifest.csv.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

std::string format_double(double v);

}  // namespace twvae
