#include "twvae/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace twvae {

Tensor loss_reconstruction(const Tensor& x, const Tensor& reconstruction, double sigma_r2) {
  if (!(sigma_r2 > 0.0)) throw std::invalid_argument("loss_reconstruction: sigma_r2 must be > 0");
  if (x.shape() != reconstruction.shape()) {
    throw std::invalid_argument("loss_reconstruction: shape mismatch " + shape_string(x.shape()) + " vs " +
                                shape_string(reconstruction.shape()));
  }
  const std::size_t rows = x.numel() / x.shape().back();
  return scale(sum(square(sub(reconstruction, x))), 1.0 / (static_cast<double>(rows) * sigma_r2));
}

Tensor loss_reconstruction_aligned(const Tensor& x, const Tensor& reconstruction,
                                   std::span<const AlignmentPath> paths, double sigma_r2) {
  if (!(sigma_r2 > 0.0)) throw std::invalid_argument("loss_reconstruction_aligned: sigma_r2 must be > 0");
  if (x.rank() != 3 || reconstruction.rank() != 3 || x.dim(0) != reconstruction.dim(0) ||
      x.dim(2) != reconstruction.dim(2)) {
    throw std::invalid_argument("loss_reconstruction_aligned: expected matching [B x T x n] tensors");
  }
  const std::size_t nb = x.dim(0), tx = x.dim(1), tr = reconstruction.dim(1), n = x.dim(2);
  if (paths.size() != nb) throw std::invalid_argument("loss_reconstruction_aligned: one path per item required");

  std::vector<std::size_t> recon_rows;
  std::vector<double> targets;
  std::vector<double> weights;
  const auto xv = x.values();
  for (std::size_t b = 0; b < nb; ++b) {
    validate_path(paths[b], tx, tr);
    std::vector<std::size_t> count(tx, 0);
    for (const auto& [i, j] : paths[b].pairs) ++count[i];
    for (const auto& [i, j] : paths[b].pairs) {
      recon_rows.push_back(b * tr + j);
      targets.insert(targets.end(), xv.begin() + static_cast<std::ptrdiff_t>((b * tx + i) * n),
                     xv.begin() + static_cast<std::ptrdiff_t>((b * tx + i + 1) * n));
      weights.push_back(1.0 / (static_cast<double>(count[i]) * static_cast<double>(tx * nb) * sigma_r2));
    }
  }
  const std::size_t pairs = recon_rows.size();
  const Tensor flat = reshape(reconstruction, {nb * tr, n});
  const Tensor paired = gather_rows(flat, recon_rows);
  const Tensor diff = sub(paired, Tensor({pairs, n}, std::move(targets)));
  return sum(mul(sum_last(square(diff)), Tensor({pairs}, std::move(weights))));
}

Tensor kl_divergence(const Tensor& mean, const Tensor& log_var) {
  if (mean.shape() != log_var.shape()) throw std::invalid_argument("kl_divergence: shape mismatch");
  const Tensor per_dim = sub(add(square(mean), exp(log_var)), add_scalar(log_var, 1.0));
  return scale(sum_last(per_dim), 0.5);
}

Tensor loss_kl(const Tensor& mean, const Tensor& log_var, double beta) {
  return scale(twvae::mean(kl_divergence(mean, log_var)), beta);
}

double loss_kl(const LatentCode& code, double beta) {
  if (code.mean.size() != code.log_var.size()) throw std::invalid_argument("loss_kl: size mismatch");
  double kl = 0.0;
  for (std::size_t d = 0; d < code.mean.size(); ++d) {
    const double lv = code.log_var[d];
    kl += code.mean[d] * code.mean[d] + std::exp(lv) - lv - 1.0;
  }
  return beta * 0.5 * kl;
}

Tensor loss_warp_reg(const Tensor& theta, double lambda) {
  return scale(twvae::mean(warp_regularizer(theta)), lambda);
}

double loss_warp_reg(std::span<const WarpCoefficients> warps, double lambda) {
  if (warps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& w : warps) total += warp_regularizer(w);
  return lambda * total / static_cast<double>(warps.size());
}

LossTerms compute_loss(const ModelBundle& bundle, const ForwardResult& result, const Tensor& x) {
  const ModelConfig& c = bundle.config();
  const Tensor recon = c.variant == Variant::timewarp_vae_dtw
                           ? loss_reconstruction_aligned(x, result.reconstruction, result.paths, c.sigma_r2)
                           : loss_reconstruction(x, result.reconstruction, c.sigma_r2);
  const Tensor kl = loss_kl(result.mean, result.log_var, c.beta);
  LossTerms out;
  out.total = add(recon, kl);
  out.breakdown.reconstruction = recon.item();
  out.breakdown.kl = kl.item();
  if (result.theta.defined()) {
    const Tensor warp = loss_warp_reg(result.theta, c.lambda);
    out.total = add(out.total, warp);
    out.breakdown.warp_reg = warp.item();
  }
  out.breakdown.total = out.total.item();
  return out;
}

}  // namespace twvae
