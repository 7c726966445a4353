#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "twvae/adam.hpp"
#include "twvae/losses.hpp"
#include "twvae/models.hpp"
#include "twvae/rng.hpp"
#include "twvae/trajectory.hpp"

namespace twvae {

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;     // sample-weighted mean over the epoch's batches
  double wallclock_ms = 0.0;
};

struct TrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  bool augment = true;
  double augment_eta = 0.1;
  std::size_t augment_knots = 10;
  /// Called after every epoch.
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Called every `checkpoint_every` epochs (0 disables).
  std::size_t checkpoint_every = 0;
  std::function<void(std::size_t epoch, const ModelBundle&)> on_checkpoint;
};

/// Minibatch Adam on the variant's objective. Each epoch shuffles the
/// training set and, with augmentation on, draws a fresh timing-noise map
/// per trajectory. Throws std::runtime_error naming the epoch and batch when
/// the loss becomes non-finite.
std::vector<EpochMetrics> train(ModelBundle& bundle, const std::vector<Trajectory>& train_set,
                                const TrainOptions& options, Rng& rng);

/// Loss of one batch evaluated without augmentation or sampling noise.
LossBreakdown evaluate_loss(const ModelBundle& bundle, const std::vector<Trajectory>& batch);

}  // namespace twvae
