#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "twvae/alignment.hpp"
#include "twvae/model_config.hpp"
#include "twvae/rng.hpp"
#include "twvae/tensor.hpp"
#include "twvae/timewarp.hpp"
#include "twvae/trajectory.hpp"

namespace twvae {

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 20.0;

/// Posterior mean and log-variance of one trajectory.
struct LatentCode {
  std::vector<double> mean;
  std::vector<double> log_var;
};

/// Learnable parameters of one variant keyed by canonical names
/// ("spatial.conv0.kernels", "decoder.time.fc0.weight", ...).
class ModelBundle {
 public:
  /// Freshly initialized parameters. The temporal encoder's output layer
  /// starts at zero so an untrained model warps by the identity.
  ModelBundle(ModelConfig config, Rng& rng);
  /// Parameters supplied by the caller (e.g. from a checkpoint); names and
  /// shapes must match what `config` implies.
  ModelBundle(ModelConfig config, std::map<std::string, Tensor> params);

  const ModelConfig& config() const { return config_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  const Tensor& param(const std::string& name) const;
  Tensor& param(const std::string& name);
  /// Parameter tensors in name order.
  std::vector<Tensor> parameter_list() const;
  std::size_t parameter_count() const;
  void zero_grad();
  /// Deep copy of the values (new leaves, no shared storage).
  ModelBundle clone() const;

 private:
  ModelConfig config_;
  std::map<std::string, Tensor> params_;
};

/// Parameter names and shapes implied by a configuration.
std::map<std::string, Shape> expected_parameter_shapes(const ModelConfig& config);

/// Stacks equal-length trajectories into [B x T x n].
Tensor batch_tensor(std::span<const Trajectory> trajectories);
Tensor batch_tensor(const std::vector<const Trajectory*>& trajectories);

struct EncodedBatch {
  Tensor mean;     // [B x l]
  Tensor log_var;  // [B x l], clamped to [kLogVarMin, kLogVarMax]
};

EncodedBatch encode_spatial(const ModelBundle& bundle, const Tensor& x);
/// Temporal encoder output before the softmax, [B x K].
Tensor encode_temporal_logits(const ModelBundle& bundle, const Tensor& x);
/// Warp slopes [B x K], positive with mean 1 per row.
Tensor encode_temporal(const ModelBundle& bundle, const Tensor& x);

/// g(s): canonical times [G x T] -> features [G x T x m].
Tensor time_features(const ModelBundle& bundle, const Tensor& canonical_times);
/// T(z): latents [B x l] -> matrices [B x n x m].
Tensor latent_matrices(const ModelBundle& bundle, const Tensor& z);
/// f(s, z) = T(z) g(s): canonical times [G x T] (G = 1 or B), z [B x l] -> [B x T x n].
Tensor decode_factorized(const ModelBundle& bundle, const Tensor& canonical_times, const Tensor& z);
/// Convolutional beta-VAE decoder: z [B x l] -> [B x T x n].
Tensor decode_convolutional(const ModelBundle& bundle, const Tensor& z);

/// z + exp(log_var / 2) * noise with noise drawn from `rng`.
Tensor reparameterize(const Tensor& mean, const Tensor& log_var, Rng& rng);

struct ForwardResult {
  Tensor reconstruction;  // [B x T x n] at the requested times (canonical grid for the DTW variant)
  Tensor mean;
  Tensor log_var;
  Tensor z;      // sampled (train) or the mean (eval)
  Tensor theta;  // [B x K]; undefined for variants without a temporal encoder
  std::vector<AlignmentPath> paths;  // DTW variant: reconstruction-to-input pairing per item
};

/// Full pass of a batch x [B x T x n] sampled at `times`. With train off the
/// latent is the posterior mean and `rng` may be null.
ForwardResult forward(const ModelBundle& bundle, const Tensor& x, std::span<const double> times, Rng* rng, bool train);

// Single-trajectory conveniences.

LatentCode encode_spatial(const ModelBundle& bundle, const Trajectory& x);
WarpCoefficients encode_temporal(const ModelBundle& bundle, const Trajectory& x);
/// Position at canonical time s for latent z (factorized decoders).
std::vector<double> decode(const ModelBundle& bundle, double s, std::span<const double> z);
/// Batched evaluation over several canonical times, row-major [times x n].
std::vector<double> decode(const ModelBundle& bundle, std::span<const double> s, std::span<const double> z);
/// Decoder output on the uniform grid of the model's length.
Trajectory decode_canonical(const ModelBundle& bundle, std::span<const double> z);
/// Deterministic reconstruction (latent mean, learned warp where present) on the model grid.
Trajectory reconstruct(const ModelBundle& bundle, const Trajectory& x);
std::vector<Trajectory> reconstruct(const ModelBundle& bundle, const std::vector<Trajectory>& xs);

}  // namespace twvae
