#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace twvae {

enum class Variant { timewarp_vae, beta_vae, no_timewarp, no_nonlinearity, timewarp_vae_dtw };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

bool has_temporal_encoder(Variant v);
bool has_factorized_decoder(Variant v);
/// Variants whose warp is learned (K and lambda are meaningful).
bool uses_warp_parameters(Variant v);

/// Architecture and loss weights of one model. Layer lists follow the
/// order input -> output; every convolution uses the same kernel size.
struct ModelConfig {
  Variant variant = Variant::timewarp_vae;
  std::size_t channels = 2;        // n
  std::size_t length = 200;        // T
  std::size_t latent_dim = 3;      // l
  std::size_t warp_segments = 50;  // K
  std::size_t decoder_width = 64;  // m
  std::size_t kernel_size = 3;
  std::vector<std::size_t> spatial_channels{16, 32, 64, 32};
  std::vector<std::size_t> spatial_strides{1, 2, 2, 2};
  std::vector<std::size_t> temporal_channels{16, 32, 32, 64, 64, 64};
  std::vector<std::size_t> temporal_strides{1, 2, 1, 2, 1, 2};
  std::vector<std::size_t> time_hidden{500, 500};  // g(s)
  std::vector<std::size_t> latent_hidden{200};     // T(z); ignored by no_nonlinearity
  std::size_t beta_fc_channels = 32;               // 800 = 32 x 25 at T = 200
  std::vector<std::size_t> beta_conv_channels{20, 20};
  double sigma_r2 = 0.01;
  double beta = 0.01;
  double lambda = 0.05;
  double init_slope = 10.0;   // G
  double init_margin = 0.1;   // eta of the time-layer initialization

  /// Every violated constraint, one message each; empty when valid.
  std::vector<std::string> validate() const;
  /// Throws std::invalid_argument listing every violation.
  void require_valid() const;
};

std::size_t conv_output_length(std::size_t length, std::size_t kernel_size, std::size_t stride);
/// Length after a stack of "same"-padded strided convolutions.
std::size_t trunk_output_length(std::size_t length, std::size_t kernel_size, const std::vector<std::size_t>& strides);
/// Length the beta-VAE decoder starts from before its duplication upsamplings.
std::size_t beta_base_length(const ModelConfig& cfg);

}  // namespace twvae
