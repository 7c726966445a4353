#include "twvae/model_config.hpp"

#include <stdexcept>

namespace twvae {

Variant parse_variant(const std::string& name) {
  if (name == "timewarp_vae") return Variant::timewarp_vae;
  if (name == "beta_vae") return Variant::beta_vae;
  if (name == "no_timewarp") return Variant::no_timewarp;
  if (name == "no_nonlinearity") return Variant::no_nonlinearity;
  if (name == "timewarp_vae_dtw") return Variant::timewarp_vae_dtw;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::timewarp_vae: return "timewarp_vae";
    case Variant::beta_vae: return "beta_vae";
    case Variant::no_timewarp: return "no_timewarp";
    case Variant::no_nonlinearity: return "no_nonlinearity";
    case Variant::timewarp_vae_dtw: return "timewarp_vae_dtw";
  }
  return "?";
}

bool has_temporal_encoder(Variant v) { return v == Variant::timewarp_vae || v == Variant::no_nonlinearity; }
bool has_factorized_decoder(Variant v) { return v != Variant::beta_vae; }
bool uses_warp_parameters(Variant v) { return has_temporal_encoder(v); }

std::size_t conv_output_length(std::size_t length, std::size_t kernel_size, std::size_t stride) {
  const std::size_t pad = (kernel_size - 1) / 2;
  return (length + 2 * pad - kernel_size) / stride + 1;
}

std::size_t trunk_output_length(std::size_t length, std::size_t kernel_size, const std::vector<std::size_t>& strides) {
  for (std::size_t s : strides) length = conv_output_length(length, kernel_size, s);
  return length;
}

std::size_t beta_base_length(const ModelConfig& cfg) {
  const std::size_t factor = std::size_t{1} << (cfg.beta_conv_channels.size() + 1);
  return cfg.length / factor;
}

std::vector<std::string> ModelConfig::validate() const {
  std::vector<std::string> errors;
  auto positive_list = [&](const std::vector<std::size_t>& v, const char* name, bool allow_empty) {
    if (!allow_empty && v.empty()) errors.push_back(std::string(name) + ": must not be empty");
    for (std::size_t x : v) {
      if (x == 0) {
        errors.push_back(std::string(name) + ": entries must be >= 1");
        break;
      }
    }
  };
  if (channels < 1) errors.push_back("channels: must be >= 1");
  if (length < 2) errors.push_back("length: must be >= 2");
  if (latent_dim < 1) errors.push_back("latent_dim: must be >= 1");
  if (warp_segments < 1) errors.push_back("warp_segments: must be >= 1");
  if (decoder_width < 1) errors.push_back("decoder_width: must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) errors.push_back("kernel_size: must be odd and >= 1");
  if (kernel_size > length) errors.push_back("kernel_size: must not exceed length");
  positive_list(spatial_channels, "spatial_channels", false);
  positive_list(spatial_strides, "spatial_strides", false);
  if (spatial_channels.size() != spatial_strides.size()) {
    errors.push_back("spatial_strides: needs one stride per spatial channel entry");
  }
  if (has_temporal_encoder(variant)) {
    positive_list(temporal_channels, "temporal_channels", false);
    positive_list(temporal_strides, "temporal_strides", false);
    if (temporal_channels.size() != temporal_strides.size()) {
      errors.push_back("temporal_strides: needs one stride per temporal channel entry");
    }
  }
  if (has_factorized_decoder(variant)) {
    positive_list(time_hidden, "time_hidden", true);
    positive_list(latent_hidden, "latent_hidden", true);
  } else {
    if (beta_fc_channels < 1) errors.push_back("beta_fc_channels: must be >= 1");
    positive_list(beta_conv_channels, "beta_conv_channels", true);
    const std::size_t factor = std::size_t{1} << (beta_conv_channels.size() + 1);
    if (length % factor != 0) {
      errors.push_back("length: beta_vae needs a multiple of " + std::to_string(factor) + " (one doubling per decoder convolution)");
    }
  }
  if (!(sigma_r2 > 0.0)) errors.push_back("sigma_r2: must be > 0");
  if (!(beta >= 0.0)) errors.push_back("beta: must be >= 0");
  if (!(lambda >= 0.0)) errors.push_back("lambda: must be >= 0");
  if (!(init_slope > 0.0)) errors.push_back("init_slope: must be > 0");
  if (!(init_margin >= 0.0)) errors.push_back("init_margin: must be >= 0");
  return errors;
}

void ModelConfig::require_valid() const {
  const auto errors = validate();
  if (errors.empty()) return;
  std::string msg = "invalid model config:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

}  // namespace twvae
