#include "twvae/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace twvae {

namespace {

using Point = std::array<double, 2>;

// Glyph version 1: up-stroke, down-stroke, cross-stroke.
std::array<Point, 4> control_points(std::span<const double> latents) {
  const double slant = latents.size() > 0 ? 0.35 * latents[0] : 0.0;
  const double width = 1.0 + (latents.size() > 1 ? 0.3 * latents[1] : 0.0);
  const double height = 1.0 + (latents.size() > 2 ? 0.3 * latents[2] : 0.0);
  return {{
      {-width, -1.0},
      {slant, height},
      {width, -1.0},
      {0.5 * (slant - width), 0.5 * (height - 1.0)},
  }};
}

}  // namespace

std::vector<double> glyph_point(std::span<const double> latents, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("glyph_point: s outside [0,1]");
  const auto cp = control_points(latents);
  const double pos = 3.0 * s;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), 2);
  const double u = pos - static_cast<double>(k);
  const double blend = u * u * (3.0 - 2.0 * u);
  return {cp[k][0] + blend * (cp[k + 1][0] - cp[k][0]), cp[k][1] + blend * (cp[k + 1][1] - cp[k][1])};
}

Trajectory render_glyph(std::span<const double> latents, const WarpCoefficients& warp, std::size_t length) {
  const auto grid = uniform_grid(length);
  std::vector<double> out;
  out.reserve(2 * length);
  for (double t : grid) {
    const auto p = glyph_point(latents, std::clamp(warp_eval(warp, t), 0.0, 1.0));
    out.insert(out.end(), p.begin(), p.end());
  }
  return Trajectory(length, 2, std::move(out), {"x", "y"});
}

SynthDataset synth_dataset(Rng& rng, const SynthOptions& options) {
  if (options.latent_dims < 1 || options.latent_dims > 3) {
    throw std::invalid_argument("synth_dataset: latent dims must be 1, 2 or 3");
  }
  if (options.count < 1) throw std::invalid_argument("synth_dataset: count must be >= 1");
  if (!(options.timing_spread >= 0.0 && options.timing_spread < 1.0)) {
    throw std::invalid_argument("synth_dataset: timing spread must lie in [0,1)");
  }
  if (options.warp_segments < 1) throw std::invalid_argument("synth_dataset: warp segments must be >= 1");
  if (!(options.test_fraction >= 0.0 && options.test_fraction <= 1.0)) {
    throw std::invalid_argument("synth_dataset: test fraction must lie in [0,1]");
  }

  SynthDataset out;
  const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(options.count)));
  const std::size_t k = options.warp_segments;
  for (std::size_t item = 0; item < options.count; ++item) {
    std::vector<double> z(options.latent_dims);
    for (double& v : z) v = rng.uniform(-1.0, 1.0);

    // Centred offsets rescaled into [-1,1] keep the mean slope at exactly 1.
    std::vector<double> d(k);
    for (double& v : d) v = rng.uniform(-1.0, 1.0);
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(k);
    double peak = 0.0;
    for (double& v : d) peak = std::max(peak, std::abs(v -= mean));
    std::vector<double> slopes(k);
    for (std::size_t j = 0; j < k; ++j) {
      slopes[j] = 1.0 + options.timing_spread * (peak > 1.0 ? d[j] / peak : d[j]);
    }
    WarpCoefficients warp(std::move(slopes));

    out.data.trajectories.push_back(render_glyph(z, warp, options.length));
    out.data.splits.push_back(item + n_test >= options.count ? Split::test : Split::train);
    out.latents.push_back(std::move(z));
    out.warps.push_back(std::move(warp));
  }
  return out;
}

}  // namespace twvae
