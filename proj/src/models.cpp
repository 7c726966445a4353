#include "twvae/models.hpp"

#include <algorithm>
#include <stdexcept>

#include "twvae/layers.hpp"

namespace twvae {

namespace {

std::string conv_name(const std::string& prefix, std::size_t i) { return prefix + ".conv" + std::to_string(i); }
std::string fc_name(const std::string& prefix, std::size_t i) { return prefix + ".fc" + std::to_string(i); }

void put(std::map<std::string, Tensor>& params, const std::string& name, LinearParams p) {
  params[name + ".weight"] = std::move(p.weight);
  params[name + ".bias"] = std::move(p.bias);
}

void put(std::map<std::string, Tensor>& params, const std::string& name, ConvParams p) {
  params[name + ".kernels"] = std::move(p.kernels);
  params[name + ".bias"] = std::move(p.bias);
}

std::size_t trunk_features(const ModelConfig& c, const std::vector<std::size_t>& channels,
                           const std::vector<std::size_t>& strides) {
  return channels.back() * trunk_output_length(c.length, c.kernel_size, strides);
}

const std::vector<std::size_t>& effective_latent_hidden(const ModelConfig& c) {
  static const std::vector<std::size_t> none;
  return c.variant == Variant::no_nonlinearity ? none : c.latent_hidden;
}

Tensor conv_trunk(const ModelBundle& b, const std::string& prefix, const Tensor& x,
                  const std::vector<std::size_t>& strides) {
  if (x.rank() != 3) throw std::invalid_argument("encoder input must be [B x T x n]");
  const ModelConfig& c = b.config();
  if (x.dim(1) != c.length || x.dim(2) != c.channels) {
    throw std::invalid_argument("encoder input " + shape_string(x.shape()) + " does not match config [B x " +
                                std::to_string(c.length) + " x " + std::to_string(c.channels) + "]");
  }
  Tensor h = swap_last2(x);  // [B x n x T]
  for (std::size_t i = 0; i < strides.size(); ++i) {
    const std::string name = conv_name(prefix, i);
    h = relu(conv1d(h, b.param(name + ".kernels"), strides[i], b.param(name + ".bias")));
  }
  return reshape(h, {h.dim(0), h.dim(1) * h.dim(2)});
}

Tensor linear(const ModelBundle& b, const std::string& name, const Tensor& x) {
  return fully_connected(x, b.param(name + ".weight"), b.param(name + ".bias"));
}

}  // namespace

std::map<std::string, Shape> expected_parameter_shapes(const ModelConfig& c) {
  std::map<std::string, Shape> shapes;
  auto conv_stack = [&](const std::string& prefix, const std::vector<std::size_t>& channels) {
    std::size_t in = c.channels;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      shapes[conv_name(prefix, i) + ".kernels"] = {channels[i], in, c.kernel_size};
      shapes[conv_name(prefix, i) + ".bias"] = {channels[i]};
      in = channels[i];
    }
  };
  auto linear_shape = [&](const std::string& name, std::size_t in, std::size_t out) {
    shapes[name + ".weight"] = {out, in};
    shapes[name + ".bias"] = {out};
  };
  auto mlp = [&](const std::string& prefix, std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      linear_shape(fc_name(prefix, i), in, hidden[i]);
      in = hidden[i];
    }
    linear_shape(prefix + ".out", in, out);
  };

  conv_stack("spatial", c.spatial_channels);
  const std::size_t spatial_features = trunk_features(c, c.spatial_channels, c.spatial_strides);
  linear_shape("spatial.mean", spatial_features, c.latent_dim);
  linear_shape("spatial.logvar", spatial_features, c.latent_dim);

  if (has_temporal_encoder(c.variant)) {
    conv_stack("temporal", c.temporal_channels);
    linear_shape("temporal.out", trunk_features(c, c.temporal_channels, c.temporal_strides), c.warp_segments);
  }

  if (has_factorized_decoder(c.variant)) {
    mlp("decoder.time", 1, c.time_hidden, c.decoder_width);
    mlp("decoder.latent", c.latent_dim, effective_latent_hidden(c), c.channels * c.decoder_width);
  } else {
    linear_shape("decoder.conv.fc", c.latent_dim, c.beta_fc_channels * beta_base_length(c));
    std::size_t in = c.beta_fc_channels;
    const std::size_t layers = c.beta_conv_channels.size() + 1;
    for (std::size_t i = 0; i < layers; ++i) {
      const std::size_t out = i + 1 < layers ? c.beta_conv_channels[i] : c.channels;
      shapes[conv_name("decoder.conv", i) + ".kernels"] = {out, in, c.kernel_size};
      shapes[conv_name("decoder.conv", i) + ".bias"] = {out};
      in = out;
    }
  }
  return shapes;
}

ModelBundle::ModelBundle(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.require_valid();
  const ModelConfig& c = config_;
  auto conv_stack = [&](const std::string& prefix, const std::vector<std::size_t>& channels) {
    std::size_t in = c.channels;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      put(params_, conv_name(prefix, i), init_conv(in, channels[i], c.kernel_size, rng));
      in = channels[i];
    }
  };

  conv_stack("spatial", c.spatial_channels);
  const std::size_t spatial_features = trunk_features(c, c.spatial_channels, c.spatial_strides);
  put(params_, "spatial.mean", init_linear(spatial_features, c.latent_dim, rng));
  put(params_, "spatial.logvar", init_linear(spatial_features, c.latent_dim, rng));

  if (has_temporal_encoder(c.variant)) {
    conv_stack("temporal", c.temporal_channels);
    put(params_, "temporal.out",
        zero_linear(trunk_features(c, c.temporal_channels, c.temporal_strides), c.warp_segments));
  }

  if (has_factorized_decoder(c.variant)) {
    std::size_t in = 1;
    for (std::size_t i = 0; i < c.time_hidden.size(); ++i) {
      put(params_, fc_name("decoder.time", i),
          i == 0 ? init_time_layer(c.time_hidden[0], c.init_slope, c.init_margin, rng)
                 : init_linear(in, c.time_hidden[i], rng));
      in = c.time_hidden[i];
    }
    put(params_, "decoder.time.out",
        c.time_hidden.empty() ? init_time_layer(c.decoder_width, c.init_slope, c.init_margin, rng)
                              : init_linear(in, c.decoder_width, rng));

    in = c.latent_dim;
    const auto& hidden = effective_latent_hidden(c);
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      put(params_, fc_name("decoder.latent", i), init_linear(in, hidden[i], rng));
      in = hidden[i];
    }
    put(params_, "decoder.latent.out", init_linear(in, c.channels * c.decoder_width, rng));
  } else {
    put(params_, "decoder.conv.fc", init_linear(c.latent_dim, c.beta_fc_channels * beta_base_length(c), rng));
    std::size_t in = c.beta_fc_channels;
    const std::size_t layers = c.beta_conv_channels.size() + 1;
    for (std::size_t i = 0; i < layers; ++i) {
      const std::size_t out = i + 1 < layers ? c.beta_conv_channels[i] : c.channels;
      put(params_, conv_name("decoder.conv", i), init_conv(in, out, c.kernel_size, rng));
      in = out;
    }
  }
}

ModelBundle::ModelBundle(ModelConfig config, std::map<std::string, Tensor> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.require_valid();
  const auto expected = expected_parameter_shapes(config_);
  for (const auto& [name, shape] : expected) {
    const auto it = params_.find(name);
    if (it == params_.end()) throw std::invalid_argument("ModelBundle: missing parameter " + name);
    if (it->second.shape() != shape) {
      throw std::invalid_argument("ModelBundle: parameter " + name + " has shape " + shape_string(it->second.shape()) +
                                  ", expected " + shape_string(shape));
    }
  }
  for (const auto& [name, tensor] : params_) {
    if (!expected.contains(name)) throw std::invalid_argument("ModelBundle: unexpected parameter " + name);
    check_finite(tensor, "ModelBundle parameter " + name);
  }
}

const Tensor& ModelBundle::param(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ModelBundle: no parameter " + name);
  return it->second;
}

Tensor& ModelBundle::param(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ModelBundle: no parameter " + name);
  return it->second;
}

std::vector<Tensor> ModelBundle::parameter_list() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

std::size_t ModelBundle::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ModelBundle::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

ModelBundle ModelBundle::clone() const {
  std::map<std::string, Tensor> copy;
  for (const auto& [name, t] : params_) {
    copy[name] = Tensor(t.shape(), std::vector<double>(t.values().begin(), t.values().end()), true);
  }
  return ModelBundle(config_, std::move(copy));
}

Tensor batch_tensor(const std::vector<const Trajectory*>& trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("batch_tensor: empty batch");
  const std::size_t len = trajectories.front()->length(), dims = trajectories.front()->dims();
  std::vector<double> v;
  v.reserve(trajectories.size() * len * dims);
  for (const Trajectory* t : trajectories) {
    if (t->length() != len || t->dims() != dims) throw std::invalid_argument("batch_tensor: ragged batch");
    v.insert(v.end(), t->samples().begin(), t->samples().end());
  }
  return Tensor({trajectories.size(), len, dims}, std::move(v));
}

Tensor batch_tensor(std::span<const Trajectory> trajectories) {
  std::vector<const Trajectory*> ptrs;
  for (const auto& t : trajectories) ptrs.push_back(&t);
  return batch_tensor(ptrs);
}

EncodedBatch encode_spatial(const ModelBundle& bundle, const Tensor& x) {
  const Tensor features = conv_trunk(bundle, "spatial", x, bundle.config().spatial_strides);
  return {linear(bundle, "spatial.mean", features),
          clamp(linear(bundle, "spatial.logvar", features), kLogVarMin, kLogVarMax)};
}

Tensor encode_temporal_logits(const ModelBundle& bundle, const Tensor& x) {
  if (!has_temporal_encoder(bundle.config().variant)) {
    throw std::invalid_argument("encode_temporal: variant " + to_string(bundle.config().variant) +
                                " has no temporal encoder");
  }
  const Tensor features = conv_trunk(bundle, "temporal", x, bundle.config().temporal_strides);
  return linear(bundle, "temporal.out", features);
}

Tensor encode_temporal(const ModelBundle& bundle, const Tensor& x) {
  return coefficients_from_logits(encode_temporal_logits(bundle, x));
}

Tensor time_features(const ModelBundle& bundle, const Tensor& canonical_times) {
  const ModelConfig& c = bundle.config();
  if (!has_factorized_decoder(c.variant)) throw std::invalid_argument("time_features: variant has no factorized decoder");
  if (canonical_times.rank() != 2) throw std::invalid_argument("time_features: times must be [G x T]");
  for (double s : canonical_times.values()) {
    // Warped times may overshoot by rounding; anything further is a bug upstream.
    if (!(s >= -1e-9 && s <= 1.0 + 1e-9)) throw std::domain_error("decode: canonical time outside [0,1]");
  }
  const std::size_t groups = canonical_times.dim(0), steps = canonical_times.dim(1);
  Tensor h = reshape(canonical_times, {groups * steps, 1});
  for (std::size_t i = 0; i < c.time_hidden.size(); ++i) h = elu(linear(bundle, fc_name("decoder.time", i), h));
  h = linear(bundle, "decoder.time.out", h);
  return reshape(h, {groups, steps, c.decoder_width});
}

Tensor latent_matrices(const ModelBundle& bundle, const Tensor& z) {
  const ModelConfig& c = bundle.config();
  if (z.rank() != 2 || z.dim(1) != c.latent_dim) throw std::invalid_argument("decode: z must be [B x latent_dim]");
  Tensor h = z;
  const auto& hidden = effective_latent_hidden(c);
  for (std::size_t i = 0; i < hidden.size(); ++i) h = elu(linear(bundle, fc_name("decoder.latent", i), h));
  h = linear(bundle, "decoder.latent.out", h);
  return reshape(h, {z.dim(0), c.channels, c.decoder_width});
}

Tensor decode_factorized(const ModelBundle& bundle, const Tensor& canonical_times, const Tensor& z) {
  return factorized_product(time_features(bundle, canonical_times), latent_matrices(bundle, z));
}

Tensor decode_convolutional(const ModelBundle& bundle, const Tensor& z) {
  const ModelConfig& c = bundle.config();
  if (c.variant != Variant::beta_vae) throw std::invalid_argument("decode_convolutional: only for beta_vae");
  if (z.rank() != 2 || z.dim(1) != c.latent_dim) throw std::invalid_argument("decode: z must be [B x latent_dim]");
  const std::size_t nb = z.dim(0);
  Tensor h = elu(linear(bundle, "decoder.conv.fc", z));
  h = reshape(h, {nb, c.beta_fc_channels, beta_base_length(c)});
  const std::size_t layers = c.beta_conv_channels.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string name = conv_name("decoder.conv", i);
    h = conv1d(upsample_repeat(h, 2), bundle.param(name + ".kernels"), 1, bundle.param(name + ".bias"));
    if (i + 1 < layers) h = elu(h);
  }
  return swap_last2(h);  // [B x T x n]
}

Tensor reparameterize(const Tensor& mean, const Tensor& log_var, Rng& rng) {
  const Tensor noise = gaussian_tensor(mean.shape(), rng);
  return add(mean, mul(exp(scale(log_var, 0.5)), noise));
}

ForwardResult forward(const ModelBundle& bundle, const Tensor& x, std::span<const double> times, Rng* rng, bool train) {
  const ModelConfig& c = bundle.config();
  if (x.rank() != 3 || x.dim(1) != c.length || x.dim(2) != c.channels) {
    throw std::invalid_argument("forward: input " + shape_string(x.shape()) + " does not match config");
  }
  if (times.size() != c.length) throw std::invalid_argument("forward: need one time per sample");
  if (train && rng == nullptr) throw std::invalid_argument("forward: training pass needs an rng");

  ForwardResult r;
  const EncodedBatch code = encode_spatial(bundle, x);
  r.mean = code.mean;
  r.log_var = code.log_var;
  r.z = train ? reparameterize(code.mean, code.log_var, *rng) : code.mean;

  const std::size_t nb = x.dim(0);
  switch (c.variant) {
    case Variant::timewarp_vae:
    case Variant::no_nonlinearity: {
      r.theta = encode_temporal(bundle, x);
      r.reconstruction = decode_factorized(bundle, warp_times(r.theta, times), r.z);
      break;
    }
    case Variant::no_timewarp: {
      const Tensor grid({1, times.size()}, std::vector<double>(times.begin(), times.end()));
      r.reconstruction = decode_factorized(bundle, grid, r.z);
      break;
    }
    case Variant::timewarp_vae_dtw: {
      const auto canonical = uniform_grid(c.length);
      const Tensor grid({1, canonical.size()}, canonical);
      r.reconstruction = decode_factorized(bundle, grid, r.z);
      const auto xv = x.values();
      const auto rv = r.reconstruction.values();
      const std::size_t block = c.length * c.channels;
      for (std::size_t b = 0; b < nb; ++b) {
        const SeriesView target{xv.subspan(b * block, block), c.length, c.channels};
        const SeriesView recon{rv.subspan(b * block, block), c.length, c.channels};
        r.paths.push_back(dtw_align(target, recon).path);
      }
      break;
    }
    case Variant::beta_vae: {
      r.reconstruction = decode_convolutional(bundle, r.z);
      break;
    }
  }
  return r;
}

LatentCode encode_spatial(const ModelBundle& bundle, const Trajectory& x) {
  const Trajectory xs = x.length() == bundle.config().length ? x : resample(x, bundle.config().length);
  const EncodedBatch e = encode_spatial(bundle, batch_tensor(std::span(&xs, 1)));
  return {std::vector<double>(e.mean.values().begin(), e.mean.values().end()),
          std::vector<double>(e.log_var.values().begin(), e.log_var.values().end())};
}

WarpCoefficients encode_temporal(const ModelBundle& bundle, const Trajectory& x) {
  const Trajectory xs = x.length() == bundle.config().length ? x : resample(x, bundle.config().length);
  const Tensor logits = encode_temporal_logits(bundle, batch_tensor(std::span(&xs, 1)));
  return coefficients_from_logits(logits.values());
}

std::vector<double> decode(const ModelBundle& bundle, double s, std::span<const double> z) {
  return decode(bundle, std::span(&s, 1), z);
}

std::vector<double> decode(const ModelBundle& bundle, std::span<const double> s, std::span<const double> z) {
  const ModelConfig& c = bundle.config();
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("decode: s outside [0,1]");
  }
  if (z.size() != c.latent_dim) throw std::invalid_argument("decode: latent size mismatch");
  const Tensor times({1, s.size()}, std::vector<double>(s.begin(), s.end()));
  const Tensor zt({1, z.size()}, std::vector<double>(z.begin(), z.end()));
  const Tensor out = decode_factorized(bundle, times, zt);
  return std::vector<double>(out.values().begin(), out.values().end());
}

Trajectory decode_canonical(const ModelBundle& bundle, std::span<const double> z) {
  const ModelConfig& c = bundle.config();
  if (z.size() != c.latent_dim) throw std::invalid_argument("decode: latent size mismatch");
  const Tensor zt({1, z.size()}, std::vector<double>(z.begin(), z.end()));
  Tensor out;
  if (has_factorized_decoder(c.variant)) {
    const auto grid = uniform_grid(c.length);
    out = decode_factorized(bundle, Tensor({1, grid.size()}, grid), zt);
  } else {
    out = decode_convolutional(bundle, zt);
  }
  return Trajectory(c.length, c.channels, std::vector<double>(out.values().begin(), out.values().end()));
}

std::vector<Trajectory> reconstruct(const ModelBundle& bundle, const std::vector<Trajectory>& xs) {
  const ModelConfig& c = bundle.config();
  const auto grid = uniform_grid(c.length);
  std::vector<Trajectory> out;
  out.reserve(xs.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    std::vector<Trajectory> chunk;
    for (std::size_t i = start; i < std::min(xs.size(), start + kChunk); ++i) {
      chunk.push_back(xs[i].length() == c.length ? xs[i] : resample(xs[i], c.length));
    }
    const ForwardResult r = forward(bundle, batch_tensor(chunk), grid, nullptr, false);
    const auto v = r.reconstruction.values();
    const std::size_t block = c.length * c.channels;
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      out.emplace_back(c.length, c.channels, std::vector<double>(v.begin() + b * block, v.begin() + (b + 1) * block),
                       chunk[b].channels());
    }
  }
  return out;
}

Trajectory reconstruct(const ModelBundle& bundle, const Trajectory& x) {
  return reconstruct(bundle, std::vector<Trajectory>{x}).front();
}

}  // namespace twvae
