#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "twvae/tensor.hpp"

namespace twvae {

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// One bias-corrected Adam update of a single parameter array. `step` is the
/// 1-based index of this update.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> first,
                 std::span<double> second, std::uint64_t step, const AdamHyper& hyper);

/// Updates every tensor in `params` in place from its accumulated gradient
/// and advances the state. Moment buffers are created on the first call.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace twvae
