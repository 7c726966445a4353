#include "twvae/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace twvae {

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng, bool requires_grad) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor gaussian_tensor(Shape shape, Rng& rng, bool requires_grad) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

LinearParams init_linear(std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0) throw std::invalid_argument("init_linear: zero width");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  LinearParams p;
  p.weight = uniform_tensor({out, in}, -bound, bound, rng, true);
  p.bias = uniform_tensor({out}, -bound, bound, rng, true);
  return p;
}

ConvParams init_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, Rng& rng) {
  if (in_channels == 0 || out_channels == 0 || kernel_size == 0) throw std::invalid_argument("init_conv: zero extent");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel_size));
  ConvParams p;
  p.kernels = uniform_tensor({out_channels, in_channels, kernel_size}, -bound, bound, rng, true);
  p.bias = uniform_tensor({out_channels}, -bound, bound, rng, true);
  return p;
}

LinearParams zero_linear(std::size_t in, std::size_t out) {
  return {Tensor::zeros({out, in}, true), Tensor::zeros({out}, true)};
}

LinearParams init_time_layer(std::size_t width, double slope, double margin, Rng& rng) {
  if (width == 0) throw std::invalid_argument("init_time_layer: width must be >= 1");
  if (!(slope > 0.0)) throw std::invalid_argument("init_time_layer: slope magnitude must be positive");
  if (!(margin >= 0.0)) throw std::invalid_argument("init_time_layer: margin must be nonnegative");
  std::vector<double> w(width), b(width);
  for (std::size_t j = 0; j < width; ++j) {
    w[j] = rng.coin() ? slope : -slope;
    const double root = rng.uniform(-margin, 1.0 + margin);
    b[j] = -w[j] * root;
  }
  return {Tensor({width, 1}, std::move(w), true), Tensor({width}, std::move(b), true)};
}

}  // namespace twvae
