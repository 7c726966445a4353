#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace twvae {

/// Read-only view of a [rows x cols] row-major block of samples.
struct SeriesView {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return values.subspan(i * cols, cols); }
};

/// Positions sampled at the uniform grid j/(T-1), j = 0..T-1, stored
/// [T x n] row-major, with one label per channel.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::size_t length, std::size_t dims, std::vector<double> samples,
             std::vector<std::string> channels = {});

  std::size_t length() const { return length_; }
  std::size_t dims() const { return dims_; }
  std::span<const double> samples() const& { return samples_; }
  std::span<const double> samples() const&& = delete;
  std::span<const double> row(std::size_t i) const { return std::span(samples_).subspan(i * dims_, dims_); }
  double at(std::size_t i, std::size_t d) const { return samples_[i * dims_ + d]; }
  const std::vector<std::string>& channels() const { return channels_; }
  SeriesView view() const { return {samples_, length_, dims_}; }

  /// Linear interpolation at time t in [0,1].
  std::vector<double> sample_at(double t) const;

  bool operator==(const Trajectory&) const = default;

 private:
  std::size_t length_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> samples_;
  std::vector<std::string> channels_;
};

std::vector<std::string> default_channel_names(std::size_t dims);
std::vector<double> uniform_grid(std::size_t count);

/// Resamples onto a uniform grid of `length` points by linear interpolation.
Trajectory resample(const Trajectory& traj, std::size_t length);

enum class Split { train, test };

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::vector<Split> splits;
  std::vector<std::string> names;  // optional, e.g. relative CSV paths

  std::size_t size() const { return trajectories.size(); }
  std::vector<Trajectory> select(Split which) const;
};

}  // namespace twvae
