#include "twvae/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace twvae {

double TimingNoiseFn::operator()(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("TimingNoiseFn: t outside [0,1]");
  if (t <= input.front()) return output.front();
  if (t >= input.back()) return output.back();
  const auto it = std::upper_bound(input.begin(), input.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - input.begin()) - 1;
  const double frac = (t - input[i]) / (input[i + 1] - input[i]);
  return output[i] + frac * (output[i + 1] - output[i]);
}

TimingNoiseFn make_timing_noise(Rng& rng, double eta, std::size_t knots) {
  if (!(eta >= 0.0)) throw std::invalid_argument("make_timing_noise: eta must be >= 0");
  if (knots < 2) throw std::invalid_argument("make_timing_noise: need at least 2 knots");
  auto perturbed = [&] {
    std::vector<double> v(knots);
    double acc = 0.0;
    for (std::size_t k = 0; k < knots; ++k) {
      const double u = rng.uniform_open_low();
      acc += eta * u * u;
      v[k] = static_cast<double>(k) / static_cast<double>(knots - 1) + acc;
    }
    const double last = v.back();
    for (double& x : v) x /= last;
    v.back() = 1.0;
    return v;
  };
  TimingNoiseFn fn;
  fn.input = perturbed();
  fn.output = perturbed();
  if (fn.input.front() > 0.0 || fn.output.front() > 0.0) {
    fn.input.insert(fn.input.begin(), 0.0);
    fn.output.insert(fn.output.begin(), 0.0);
  }
  return fn;
}

Trajectory augment(const Trajectory& traj, const TimingNoiseFn& noise, std::size_t length) {
  if (length < 2) throw std::invalid_argument("augment: output length must be >= 2");
  const auto grid = uniform_grid(length);
  std::vector<double> out;
  out.reserve(length * traj.dims());
  for (double t : grid) {
    const auto p = traj.sample_at(std::clamp(noise(t), 0.0, 1.0));
    out.insert(out.end(), p.begin(), p.end());
  }
  return Trajectory(length, traj.dims(), std::move(out), traj.channels());
}

}  // namespace twvae
