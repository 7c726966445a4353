#include "twvae/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace twvae {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> first,
                 std::span<double> second, std::uint64_t step, const AdamHyper& hyper) {
  if (grad.size() != param.size() || first.size() != param.size() || second.size() != param.size()) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  if (step == 0) throw std::invalid_argument("adam_update: step is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    first[i] = hyper.beta1 * first[i] + (1.0 - hyper.beta1) * g;
    second[i] = hyper.beta2 * second[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = first[i] / c1;
    const double v_hat = second[i] / c2;
    param[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const Tensor& p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam_step: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].numel()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for parameter " + std::to_string(i));
    }
    const std::vector<double> g = params[i].grad();
    for (double v : g) {
      if (!std::isfinite(v)) throw std::domain_error("adam_step: non-finite gradient in parameter " + std::to_string(i));
    }
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<double> g = params[i].grad();
    adam_update(params[i].mutable_values(), g, state.first_moment[i], state.second_moment[i], state.step, state.hyper);
  }
}

}  // namespace twvae
