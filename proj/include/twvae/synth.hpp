#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "twvae/rng.hpp"
#include "twvae/timewarp.hpp"
#include "twvae/trajectory.hpp"

namespace twvae {

struct SynthOptions {
  std::size_t count = 128;
  std::size_t length = 200;
  std::size_t latent_dims = 2;   // 1..3: slant, width, apex height
  double timing_spread = 0.5;    // warp slopes lie in [1 - spread, 1 + spread]
  std::size_t warp_segments = 5;
  double test_fraction = 0.0;    // trailing share of items labelled test
};

struct SynthDataset {
  Dataset data;
  std::vector<std::vector<double>> latents;
  std::vector<WarpCoefficients> warps;
};

/// Point of the planar three-stroke glyph at canonical time s in [0,1].
/// The glyph's control points are affine in the latent coordinates.
std::vector<double> glyph_point(std::span<const double> latents, double s);

/// Glyph sampled at warp(t_j) on the uniform grid.
Trajectory render_glyph(std::span<const double> latents, const WarpCoefficients& warp, std::size_t length);

/// Draws latents uniform in [-1,1]^latent_dims and a random retiming per
/// item. Ground truth is returned alongside the trajectories.
SynthDataset synth_dataset(Rng& rng, const SynthOptions& options);

}  // namespace twvae
