#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "twvae/tensor.hpp"

namespace twvae {

/// Slopes of a piecewise-linear bijection of [0,1] with K equal-width
/// segments. Slopes are positive and average to one.
class WarpCoefficients {
 public:
  explicit WarpCoefficients(std::vector<double> slopes);
  static WarpCoefficients identity(std::size_t segments);

  std::size_t segments() const { return slopes_.size(); }
  std::span<const double> slopes() const { return slopes_; }

 private:
  std::vector<double> slopes_;
};

/// Monotone piecewise-linear map given by knots; used for warps whose knots
/// are not equally spaced (e.g. the inverse of a WarpCoefficients warp).
struct KnotWarp {
  std::vector<double> x;
  std::vector<double> y;

  double operator()(double t) const;
};

/// Basis function psi_j(t) = min(max(t - (j-1)/K, 0), 1/K), j in 1..K.
double psi(std::size_t j, double t, std::size_t segments);

double warp_eval(const WarpCoefficients& w, double t);
double warp_inverse(const WarpCoefficients& w, double s);

/// Knot representation of the inverse warp: segment widths Theta_j/K with
/// slopes 1/Theta_j.
KnotWarp invert_coefficients(const WarpCoefficients& w);

/// (1/K) * sum_j (Theta_j - 1) log Theta_j, the discrete form of
/// integral (phi'(t) - 1) log phi'(t) dt.
double warp_regularizer(const WarpCoefficients& w);
/// Same integral for an arbitrary knot warp: sum of width * (slope - 1) log slope.
double warp_regularizer(const KnotWarp& w);

/// Theta = K * softmax(logits).
WarpCoefficients coefficients_from_logits(std::span<const double> logits);

// Differentiable counterparts used inside the models.

/// logits [B x K] -> Theta [B x K].
Tensor coefficients_from_logits(const Tensor& logits);
/// Constant [T x K] matrix of psi_j(t_i); phi(t) = Psi * Theta.
Tensor warp_basis(std::span<const double> times, std::size_t segments);
/// Theta [B x K] evaluated at `times` -> canonical times [B x T].
Tensor warp_times(const Tensor& theta, std::span<const double> times);
/// Theta [B x K] -> per-trajectory regularizer [B].
Tensor warp_regularizer(const Tensor& theta);

}  // namespace twvae
