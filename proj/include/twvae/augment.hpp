#pragma once

#include <cstddef>
#include <vector>

#include "twvae/rng.hpp"
#include "twvae/trajectory.hpp"

namespace twvae {

/// Monotone piecewise-linear map of [0,1] onto itself through the knots
/// (input[k], output[k]); the first knot is (0,0) and the last (1,1).
struct TimingNoiseFn {
  std::vector<double> input;
  std::vector<double> output;

  double operator()(double t) const;
};

/// Random timing perturbation: two vectors of `knots` uniform draws are
/// squared, scaled by `eta`, cumulatively summed, added to the uniform grid
/// over `knots` points and renormalized to end at 1; a (0,0) knot is
/// prepended when the first perturbed knot is off the origin.
TimingNoiseFn make_timing_noise(Rng& rng, double eta, std::size_t knots = 10);

/// Samples `traj` by linear interpolation at noise(j/(length-1)).
Trajectory augment(const Trajectory& traj, const TimingNoiseFn& noise, std::size_t length);

}  // namespace twvae
