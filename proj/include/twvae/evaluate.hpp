#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "twvae/models.hpp"
#include "twvae/trajectory.hpp"

namespace twvae {

struct EvalReport {
  std::optional<double> rate_bits;  // absent for models without a latent posterior (PCA)
  double train_aligned_rmse = 0.0;
  double test_aligned_rmse = 0.0;
  std::vector<double> train_errors;
  std::vector<double> test_errors;
  std::size_t epoch = 0;
};

/// Mean unweighted KL (nats) over `codes`, converted to bits.
double rate_bits(const std::vector<LatentCode>& codes);

/// Rate over the training split; aligned RMSE of noise-free reconstructions
/// per trajectory, averaged per split. Trajectories are resampled to the
/// model length first. An empty split reports 0.
EvalReport evaluate(const ModelBundle& bundle, const std::vector<Trajectory>& train_set,
                    const std::vector<Trajectory>& test_set);

/// Mean of aligned_rmse over paired originals and reconstructions.
std::vector<double> aligned_errors(const std::vector<Trajectory>& originals, const std::vector<Trajectory>& reconstructions);

/// PCA on flattened [T*n] vectors fitted on the training split; reconstructions
/// are projections onto the top `components` directions.
EvalReport pca_baseline(const std::vector<Trajectory>& train_set, const std::vector<Trajectory>& test_set,
                        std::size_t components, std::size_t length);

/// Decodes (1-alpha) e(x_a) + alpha e(x_b) on the canonical grid, without the
/// temporal encoder or time-warper.
Trajectory interpolate_latent(const ModelBundle& bundle, const Trajectory& a, const Trajectory& b, double alpha);

}  // namespace twvae
