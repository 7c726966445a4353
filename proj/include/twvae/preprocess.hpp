#pragma once

#include <string>
#include <vector>

#include "twvae/trajectory.hpp"

namespace twvae {

enum class PreprocessMode { none, planar, pose };

PreprocessMode parse_preprocess_mode(const std::string& name);
std::string to_string(PreprocessMode mode);

/// Length scale applied to quaternion channels in pose mode (metres).
inline constexpr double kQuaternionLengthScale = 0.08;

/// Per-channel centering and scaling fitted on a training split.
/// Positions are divided by position_scale; in pose mode the quaternion
/// channels are multiplied by quaternion_scale before the same division.
struct PreprocessStats {
  PreprocessMode mode = PreprocessMode::none;
  std::vector<double> means;
  double position_scale = 1.0;
  double quaternion_scale = 1.0;

  Trajectory apply(const Trajectory& traj) const;
  Trajectory invert(const Trajectory& traj) const;
  std::vector<Trajectory> apply(const std::vector<Trajectory>& trajs) const;
};

/// planar: 2 channels, pooled E[x^2 + y^2] = 2 after the transform.
/// pose: channels x,y,z,rw,rx,ry,rz, pooled E[x^2 + y^2 + z^2] = 3.
/// none: identity statistics.
PreprocessStats fit_preprocess(const std::vector<Trajectory>& train, PreprocessMode mode);

}  // namespace twvae
