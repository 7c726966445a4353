#pragma once

#include <span>
#include <vector>

#include "twvae/alignment.hpp"
#include "twvae/models.hpp"
#include "twvae/tensor.hpp"
#include "twvae/timewarp.hpp"

namespace twvae {

struct LossBreakdown {
  double reconstruction = 0.0;
  double kl = 0.0;
  double warp_reg = 0.0;
  double total = 0.0;
};

/// (1/sigma_r2) * mean over items and timesteps of the squared row distance.
/// x, reconstruction: [B x T x n] (or [T x n]).
Tensor loss_reconstruction(const Tensor& x, const Tensor& reconstruction, double sigma_r2);
/// Same loss when the reconstruction is matched to x through DTW paths
/// (one per item, pairs (i in x, j in reconstruction)); each input timestep
/// averages over its pairs. Paths are held fixed; gradients flow through
/// the paired reconstruction rows.
Tensor loss_reconstruction_aligned(const Tensor& x, const Tensor& reconstruction,
                                   std::span<const AlignmentPath> paths, double sigma_r2);

/// Diagonal-Gaussian KL to N(0, I), summed over latent dims: [B x l] -> [B].
Tensor kl_divergence(const Tensor& mean, const Tensor& log_var);
/// beta * batch mean of kl_divergence.
Tensor loss_kl(const Tensor& mean, const Tensor& log_var, double beta);
/// beta * 0.5 * sum_d (z_d^2 + sigma_d^2 - log sigma_d^2 - 1).
double loss_kl(const LatentCode& code, double beta);

/// lambda * batch mean of the per-trajectory warp regularizer; theta [B x K].
Tensor loss_warp_reg(const Tensor& theta, double lambda);
double loss_warp_reg(std::span<const WarpCoefficients> warps, double lambda);

struct LossTerms {
  Tensor total;  // scalar, differentiable
  LossBreakdown breakdown;
};

/// Objective of the bundle's variant for one batch. Variants without a
/// time-warper contribute warp_reg = 0.
LossTerms compute_loss(const ModelBundle& bundle, const ForwardResult& result, const Tensor& x);

}  // namespace twvae
