#include "ecgvae/nn/adam.hpp"

#include <cmath>
#include <string>

#include "ecgvae/errors.hpp"

namespace ecgvae::nn {

template <typename Real>
AdamState<Real> make_adam_state(std::span<Parameter<Real>* const> params, AdamConfig config) {
  if (!(config.beta1 > 0 && config.beta1 < 1 && config.beta2 > 0 && config.beta2 < 1)) {
    throw ParameterError("Adam betas must lie in (0, 1)");
  }
  if (!(config.lr > 0) || !(config.eps > 0)) {
    throw ParameterError("Adam lr and eps must be positive");
  }
  AdamState<Real> state;
  state.config = config;
  for (const auto* p : params) {
    state.first_moment.emplace_back(p->value.size(), Real(0));
    state.second_moment.emplace_back(p->value.size(), Real(0));
  }
  return state;
}

template <typename Real>
void adam_step(std::span<Parameter<Real>* const> params, AdamState<Real>& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("Adam state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    if (p.grad.size() != p.value.size() || state.first_moment[i].size() != p.value.size()) {
      throw DimensionError("Adam moment/gradient shape mismatch for " + p.name);
    }
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient in parameter " + p.name);
  }

  const auto& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i]->value.data();
    auto grad = params[i]->grad.data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      m[k] = static_cast<Real>(mk);
      v[k] = static_cast<Real>(vk);
      const double update = c.lr * (mk / correction1) / (std::sqrt(vk / correction2) + c.eps);
      value[k] = static_cast<Real>(value[k] - update);
    }
  }
}

template AdamState<float> make_adam_state<float>(std::span<Parameter<float>* const>, AdamConfig);
template AdamState<double> make_adam_state<double>(std::span<Parameter<double>* const>, AdamConfig);
template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&);

}  // namespace ecgvae::nn
