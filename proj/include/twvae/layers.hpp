#pragma once

#include <cstddef>

#include "twvae/rng.hpp"
#include "twvae/tensor.hpp"

namespace twvae {

/// Weight and bias of one affine layer, weight stored [out x in].
struct LinearParams {
  Tensor weight;
  Tensor bias;
};

/// Kernels [C_out x C_in x k] and bias [C_out].
struct ConvParams {
  Tensor kernels;
  Tensor bias;
};

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng, bool requires_grad = false);
Tensor gaussian_tensor(Shape shape, Rng& rng, bool requires_grad = false);

/// Default initialization: weights and biases uniform in +-1/sqrt(fan_in).
LinearParams init_linear(std::size_t in, std::size_t out, Rng& rng);
ConvParams init_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, Rng& rng);
LinearParams zero_linear(std::size_t in, std::size_t out);

/// First layer of the canonical-time network g(s). Every weight is +slope or
/// -slope with equal probability, and each bias places the unit's activation
/// root -b/W uniformly in [-margin, 1 + margin], so that the kinks cover the
/// unit interval symmetrically around s = 0.5. Weight shape [width x 1].
LinearParams init_time_layer(std::size_t width, double slope, double margin, Rng& rng);

}  // namespace twvae
