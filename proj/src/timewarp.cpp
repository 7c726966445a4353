#include "twvae/timewarp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace twvae {

namespace {

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error(std::string(what) + " outside [0,1]: " + std::to_string(v));
}

}  // namespace

WarpCoefficients::WarpCoefficients(std::vector<double> slopes) : slopes_(std::move(slopes)) {
  if (slopes_.empty()) throw std::invalid_argument("WarpCoefficients: need at least one segment");
  double total = 0.0;
  for (double s : slopes_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("WarpCoefficients: slopes must be positive and finite");
    total += s;
  }
  const double m = total / static_cast<double>(slopes_.size());
  if (std::abs(m - 1.0) > 1e-9) {
    throw std::invalid_argument("WarpCoefficients: slopes must average to 1, got mean " + std::to_string(m));
  }
}

WarpCoefficients WarpCoefficients::identity(std::size_t segments) {
  return WarpCoefficients(std::vector<double>(segments, 1.0));
}

double KnotWarp::operator()(double t) const {
  if (x.size() < 2 || x.size() != y.size()) throw std::logic_error("KnotWarp: malformed knots");
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  const double frac = (t - x[i]) / (x[i + 1] - x[i]);
  return y[i] + frac * (y[i + 1] - y[i]);
}

double psi(std::size_t j, double t, std::size_t segments) {
  if (segments == 0 || j < 1 || j > segments) throw std::invalid_argument("psi: segment index out of range");
  require_unit(t, "psi: t");
  const double k = static_cast<double>(segments);
  return std::min(std::max(t - static_cast<double>(j - 1) / k, 0.0), 1.0 / k);
}

double warp_eval(const WarpCoefficients& w, double t) {
  require_unit(t, "warp_eval: t");
  const auto slopes = w.slopes();
  double s = 0.0;
  if (t == 1.0) return 1.0;
  for (std::size_t j = 0; j < slopes.size(); ++j) s += slopes[j] * psi(j + 1, t, slopes.size());
  return std::min(s, 1.0);
}

double warp_inverse(const WarpCoefficients& w, double s) {
  require_unit(s, "warp_inverse: s");
  const auto slopes = w.slopes();
  const std::size_t k = slopes.size();
  const double width = 1.0 / static_cast<double>(k);
  double lo = 0.0;  // phi at the left knot of segment j
  for (std::size_t j = 0; j < k; ++j) {
    const double hi = lo + slopes[j] * width;
    if (s <= hi || j + 1 == k) {
      const double t = static_cast<double>(j) * width + (s - lo) / slopes[j];
      return std::clamp(t, 0.0, 1.0);
    }
    lo = hi;
  }
  return 1.0;
}

KnotWarp invert_coefficients(const WarpCoefficients& w) {
  const auto slopes = w.slopes();
  const std::size_t k = slopes.size();
  KnotWarp inv;
  inv.x.reserve(k + 1);
  inv.y.reserve(k + 1);
  inv.x.push_back(0.0);
  inv.y.push_back(0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    acc += slopes[j] / static_cast<double>(k);
    inv.x.push_back(j + 1 == k ? 1.0 : acc);
    inv.y.push_back(static_cast<double>(j + 1) / static_cast<double>(k));
  }
  return inv;
}

double warp_regularizer(const WarpCoefficients& w) {
  double total = 0.0;
  for (double th : w.slopes()) total += (th - 1.0) * std::log(th);
  return total / static_cast<double>(w.segments());
}

double warp_regularizer(const KnotWarp& w) {
  if (w.x.size() < 2 || w.x.size() != w.y.size()) throw std::invalid_argument("warp_regularizer: malformed knots");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < w.x.size(); ++i) {
    const double dx = w.x[i + 1] - w.x[i];
    const double dy = w.y[i + 1] - w.y[i];
    if (!(dx > 0.0) || !(dy > 0.0)) throw std::invalid_argument("warp_regularizer: nonpositive slope");
    const double slope = dy / dx;
    total += dx * (slope - 1.0) * std::log(slope);
  }
  return total;
}

WarpCoefficients coefficients_from_logits(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("coefficients_from_logits: empty logits");
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::domain_error("coefficients_from_logits: non-finite logit");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) z += (e[i] = std::exp(logits[i] - mx));
  const double k = static_cast<double>(e.size());
  // Underflowed slopes would make the warp non-invertible.
  for (double& v : e) v = std::max(k * v / z, std::numeric_limits<double>::min());
  return WarpCoefficients(std::move(e));
}

Tensor coefficients_from_logits(const Tensor& logits) {
  check_finite(logits, "coefficients_from_logits");
  const double k = static_cast<double>(logits.shape().back());
  return scale(softmax(logits), k);
}

Tensor warp_basis(std::span<const double> times, std::size_t segments) {
  if (times.empty()) throw std::invalid_argument("warp_basis: no times");
  std::vector<double> v(times.size() * segments);
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = 0; j < segments; ++j) v[i * segments + j] = psi(j + 1, times[i], segments);
  }
  return Tensor({times.size(), segments}, std::move(v));
}

Tensor warp_times(const Tensor& theta, std::span<const double> times) {
  if (theta.rank() != 2) throw std::invalid_argument("warp_times: theta must be [B x K]");
  const Tensor basis = warp_basis(times, theta.dim(1));
  // [B x K] * [K x T]
  std::vector<double> bt(basis.numel());
  const std::size_t t = times.size(), k = theta.dim(1);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < k; ++j) bt[j * t + i] = basis[i * k + j];
  }
  return matmul(theta, Tensor({k, t}, std::move(bt)));
}

Tensor warp_regularizer(const Tensor& theta) {
  if (theta.rank() != 2) throw std::invalid_argument("warp_regularizer: theta must be [B x K]");
  for (double v : theta.values()) {
    if (!(v > 0.0)) throw std::domain_error("warp_regularizer: nonpositive slope");
  }
  const double k = static_cast<double>(theta.dim(1));
  return scale(sum_last(mul(add_scalar(theta, -1.0), log(theta))), 1.0 / k);
}

}  // namespace twvae
