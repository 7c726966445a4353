#include "twvae/preprocess.hpp"

#include <cmath>
#include <stdexcept>

namespace twvae {

PreprocessMode parse_preprocess_mode(const std::string& name) {
  if (name == "none") return PreprocessMode::none;
  if (name == "planar") return PreprocessMode::planar;
  if (name == "pose") return PreprocessMode::pose;
  throw std::invalid_argument("unknown preprocess mode '" + name + "' (expected none, planar or pose)");
}

std::string to_string(PreprocessMode mode) {
  switch (mode) {
    case PreprocessMode::none: return "none";
    case PreprocessMode::planar: return "planar";
    case PreprocessMode::pose: return "pose";
  }
  return "none";
}

namespace {

std::size_t position_channels(PreprocessMode mode, std::size_t dims) {
  switch (mode) {
    case PreprocessMode::planar: return 2;
    case PreprocessMode::pose: return 3;
    case PreprocessMode::none: return dims;
  }
  return dims;
}

}  // namespace

Trajectory PreprocessStats::apply(const Trajectory& traj) const {
  if (traj.dims() != means.size()) throw std::invalid_argument("PreprocessStats::apply: channel count mismatch");
  const std::size_t npos = position_channels(mode, traj.dims());
  std::vector<double> out(traj.samples().begin(), traj.samples().end());
  for (std::size_t i = 0; i < traj.length(); ++i) {
    for (std::size_t d = 0; d < traj.dims(); ++d) {
      double& v = out[i * traj.dims() + d];
      v -= means[d];
      if (d >= npos) v *= quaternion_scale;
      v /= position_scale;
    }
  }
  return Trajectory(traj.length(), traj.dims(), std::move(out), traj.channels());
}

Trajectory PreprocessStats::invert(const Trajectory& traj) const {
  if (traj.dims() != means.size()) throw std::invalid_argument("PreprocessStats::invert: channel count mismatch");
  const std::size_t npos = position_channels(mode, traj.dims());
  std::vector<double> out(traj.samples().begin(), traj.samples().end());
  for (std::size_t i = 0; i < traj.length(); ++i) {
    for (std::size_t d = 0; d < traj.dims(); ++d) {
      double& v = out[i * traj.dims() + d];
      v *= position_scale;
      if (d >= npos) v /= quaternion_scale;
      v += means[d];
    }
  }
  return Trajectory(traj.length(), traj.dims(), std::move(out), traj.channels());
}

std::vector<Trajectory> PreprocessStats::apply(const std::vector<Trajectory>& trajs) const {
  std::vector<Trajectory> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) out.push_back(apply(t));
  return out;
}

PreprocessStats fit_preprocess(const std::vector<Trajectory>& train, PreprocessMode mode) {
  if (train.empty()) throw std::invalid_argument("fit_preprocess: empty training set");
  const std::size_t dims = train.front().dims();
  for (const auto& t : train) {
    if (t.dims() != dims) throw std::invalid_argument("fit_preprocess: inconsistent channel counts");
  }
  PreprocessStats stats;
  stats.mode = mode;
  if (mode == PreprocessMode::none) {
    stats.means.assign(dims, 0.0);
    return stats;
  }
  if (mode == PreprocessMode::planar && dims != 2) {
    throw std::invalid_argument("fit_preprocess: planar mode needs 2 channels, got " + std::to_string(dims));
  }
  if (mode == PreprocessMode::pose && dims != 7) {
    throw std::invalid_argument("fit_preprocess: pose mode needs 7 channels (x,y,z,rw,rx,ry,rz), got " +
                                std::to_string(dims));
  }

  std::vector<double> sums(dims, 0.0);
  std::size_t count = 0;
  for (const auto& t : train) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      for (std::size_t d = 0; d < dims; ++d) sums[d] += t.at(i, d);
    }
    count += t.length();
  }
  stats.means.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) stats.means[d] = sums[d] / static_cast<double>(count);

  const std::size_t npos = position_channels(mode, dims);
  double sq = 0.0;
  for (const auto& t : train) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      for (std::size_t d = 0; d < npos; ++d) {
        const double c = t.at(i, d) - stats.means[d];
        sq += c * c;
      }
    }
  }
  const double pooled = sq / static_cast<double>(count);
  if (!(pooled > 0.0)) throw std::invalid_argument("fit_preprocess: zero-variance dataset");
  stats.position_scale = std::sqrt(pooled / static_cast<double>(npos));
  stats.quaternion_scale = mode == PreprocessMode::pose ? kQuaternionLengthScale : 1.0;
  return stats;
}

}  // namespace twvae
