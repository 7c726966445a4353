#include "twvae/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace twvae {

Trajectory::Trajectory(std::size_t length, std::size_t dims, std::vector<double> samples,
                       std::vector<std::string> channels)
    : length_(length), dims_(dims), samples_(std::move(samples)), channels_(std::move(channels)) {
  if (length_ < 2) throw std::invalid_argument("Trajectory: need at least 2 samples");
  if (dims_ == 0) throw std::invalid_argument("Trajectory: need at least 1 channel");
  if (samples_.size() != length_ * dims_) throw std::invalid_argument("Trajectory: sample count mismatch");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw std::domain_error("Trajectory: non-finite sample");
  }
  if (channels_.empty()) channels_ = default_channel_names(dims_);
  if (channels_.size() != dims_) throw std::invalid_argument("Trajectory: channel label count mismatch");
}

std::vector<double> Trajectory::sample_at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("Trajectory::sample_at: t outside [0,1]");
  double pos = t * static_cast<double>(length_ - 1);
  // Grid times land exactly on their sample rather than one ulp short.
  if (const double r = std::round(pos); std::abs(pos - r) < 1e-9) pos = r;
  std::size_t i = static_cast<std::size_t>(std::floor(pos));
  if (i >= length_ - 1) i = length_ - 2;
  const double frac = pos - static_cast<double>(i);
  std::vector<double> out(dims_);
  for (std::size_t d = 0; d < dims_; ++d) {
    const double a = at(i, d), b = at(i + 1, d);
    out[d] = frac == 1.0 ? b : a + frac * (b - a);
  }
  return out;
}

std::vector<std::string> default_channel_names(std::size_t dims) {
  static const char* planar[] = {"x", "y"};
  static const char* pose[] = {"x", "y", "z", "rw", "rx", "ry", "rz"};
  std::vector<std::string> names;
  for (std::size_t d = 0; d < dims; ++d) {
    if (dims == 2) names.emplace_back(planar[d]);
    else if (dims == 7) names.emplace_back(pose[d]);
    else names.push_back("c" + std::to_string(d));
  }
  return names;
}

std::vector<double> uniform_grid(std::size_t count) {
  if (count < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
  std::vector<double> g(count);
  for (std::size_t j = 0; j < count; ++j) g[j] = static_cast<double>(j) / static_cast<double>(count - 1);
  g.back() = 1.0;
  return g;
}

Trajectory resample(const Trajectory& traj, std::size_t length) {
  if (length < 2) throw std::invalid_argument("resample: output length must be >= 2");
  const auto grid = uniform_grid(length);
  std::vector<double> out;
  out.reserve(length * traj.dims());
  for (double t : grid) {
    const auto p = traj.sample_at(t);
    out.insert(out.end(), p.begin(), p.end());
  }
  return Trajectory(length, traj.dims(), std::move(out), traj.channels());
}

std::vector<Trajectory> Dataset::select(Split which) const {
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (splits[i] == which) out.push_back(trajectories[i]);
  }
  return out;
}

}  // namespace twvae
