#include "twvae/training.hpp"

#include <chrono>
#include <malloc.h>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "twvae/augment.hpp"

namespace twvae {

namespace {

// Activations are a few MB each and freed every step; glibc's default
// thresholds hand them back to the kernel and every step page-faults them
// in again.
void keep_freed_memory() {
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)done;
}

}  // namespace

std::vector<EpochMetrics> train(ModelBundle& bundle, const std::vector<Trajectory>& train_set,
                                const TrainOptions& options, Rng& rng) {
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  if (options.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(options.learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be >= 0");
  keep_freed_memory();
  const ModelConfig& c = bundle.config();
  for (const auto& t : train_set) {
    if (t.dims() != c.channels) throw std::invalid_argument("train: trajectory channel count does not match config");
  }

  const auto grid = uniform_grid(c.length);
  std::vector<Trajectory> base;
  base.reserve(train_set.size());
  for (const auto& t : train_set) base.push_back(t.length() == c.length ? t : resample(t, c.length));

  std::vector<Tensor> params = bundle.parameter_list();
  AdamState adam;
  adam.hyper.learning_rate = options.learning_rate;

  std::vector<std::size_t> order(train_set.size());
  std::vector<EpochMetrics> history;
  history.reserve(options.epochs);
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochMetrics m;
    m.epoch = epoch;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      std::vector<Trajectory> augmented;
      std::vector<const Trajectory*> batch;
      if (options.augment) {
        augmented.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
          const TimingNoiseFn noise = make_timing_noise(rng, options.augment_eta, options.augment_knots);
          augmented.push_back(augment(train_set[order[k]], noise, c.length));
        }
        for (const auto& t : augmented) batch.push_back(&t);
      } else {
        for (std::size_t k = begin; k < end; ++k) batch.push_back(&base[order[k]]);
      }

      const Tensor x = batch_tensor(batch);
      const ForwardResult fr = forward(bundle, x, grid, &rng, true);
      const LossTerms loss = compute_loss(bundle, fr, x);
      if (!std::isfinite(loss.breakdown.total)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      }
      bundle.zero_grad();
      backward(loss.total);
      adam_step(params, adam);

      const double w = static_cast<double>(end - begin);
      m.loss.reconstruction += w * loss.breakdown.reconstruction;
      m.loss.kl += w * loss.breakdown.kl;
      m.loss.warp_reg += w * loss.breakdown.warp_reg;
    }
    const double n = static_cast<double>(order.size());
    m.loss.reconstruction /= n;
    m.loss.kl /= n;
    m.loss.warp_reg /= n;
    m.loss.total = m.loss.reconstruction + m.loss.kl + m.loss.warp_reg;
    m.wallclock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    history.push_back(m);
    if (options.on_epoch) options.on_epoch(m);
    if (options.checkpoint_every > 0 && epoch % options.checkpoint_every == 0 && options.on_checkpoint) {
      options.on_checkpoint(epoch, bundle);
    }
  }
  return history;
}

LossBreakdown evaluate_loss(const ModelBundle& bundle, const std::vector<Trajectory>& batch) {
  const ModelConfig& c = bundle.config();
  std::vector<Trajectory> xs;
  for (const auto& t : batch) xs.push_back(t.length() == c.length ? t : resample(t, c.length));
  const Tensor x = batch_tensor(xs);
  const auto grid = uniform_grid(c.length);
  const ForwardResult fr = forward(bundle, x, grid, nullptr, false);
  return compute_loss(bundle, fr, x).breakdown;
}

}  // namespace twvae
