#include "twvae/evaluate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "twvae/alignment.hpp"
#include "twvae/losses.hpp"

namespace twvae {

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<Trajectory> at_length(const std::vector<Trajectory>& xs, std::size_t length) {
  std::vector<Trajectory> out;
  out.reserve(xs.size());
  for (const auto& t : xs) out.push_back(t.length() == length ? t : resample(t, length));
  return out;
}

}  // namespace

double rate_bits(const std::vector<LatentCode>& codes) {
  if (codes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : codes) total += loss_kl(c, 1.0);
  return total / static_cast<double>(codes.size()) / std::numbers::ln2;
}

std::vector<double> aligned_errors(const std::vector<Trajectory>& originals, const std::vector<Trajectory>& reconstructions) {
  if (originals.size() != reconstructions.size()) throw std::invalid_argument("aligned_errors: count mismatch");
  std::vector<double> out;
  out.reserve(originals.size());
  for (std::size_t i = 0; i < originals.size(); ++i) out.push_back(aligned_rmse(originals[i], reconstructions[i]));
  return out;
}

EvalReport evaluate(const ModelBundle& bundle, const std::vector<Trajectory>& train_set,
                    const std::vector<Trajectory>& test_set) {
  const std::size_t len = bundle.config().length;
  EvalReport r;
  const auto train_x = at_length(train_set, len);
  const auto test_x = at_length(test_set, len);

  std::vector<LatentCode> codes;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < train_x.size(); start += kChunk) {
    const std::size_t end = std::min(train_x.size(), start + kChunk);
    const EncodedBatch e = encode_spatial(bundle, batch_tensor(std::span(train_x).subspan(start, end - start)));
    const std::size_t l = bundle.config().latent_dim;
    for (std::size_t b = 0; b < end - start; ++b) {
      LatentCode c;
      c.mean.assign(e.mean.values().begin() + static_cast<std::ptrdiff_t>(b * l),
                    e.mean.values().begin() + static_cast<std::ptrdiff_t>((b + 1) * l));
      c.log_var.assign(e.log_var.values().begin() + static_cast<std::ptrdiff_t>(b * l),
                       e.log_var.values().begin() + static_cast<std::ptrdiff_t>((b + 1) * l));
      codes.push_back(std::move(c));
    }
  }
  r.rate_bits = rate_bits(codes);

  r.train_errors = aligned_errors(train_x, reconstruct(bundle, train_x));
  r.test_errors = aligned_errors(test_x, reconstruct(bundle, test_x));
  r.train_aligned_rmse = mean_of(r.train_errors);
  r.test_aligned_rmse = mean_of(r.test_errors);
  return r;
}

Trajectory interpolate_latent(const ModelBundle& bundle, const Trajectory& a, const Trajectory& b, double alpha) {
  const LatentCode ca = encode_spatial(bundle, a);
  const LatentCode cb = encode_spatial(bundle, b);
  std::vector<double> z(ca.mean.size());
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = (1.0 - alpha) * ca.mean[d] + alpha * cb.mean[d];
  return decode_canonical(bundle, z);
}

}  // namespace twvae
