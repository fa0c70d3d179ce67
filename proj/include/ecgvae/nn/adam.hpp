#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecgvae/nn/tape.hpp"

namespace ecgvae::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;
};

/// Zero moments shaped like `params`.
template <typename Real>
AdamState<Real> make_adam_state(std::span<Parameter<Real>* const> params, AdamConfig config = {});

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// Every gradient is checked before any parameter moves; a non-finite one
/// raises NumericError naming the parameter.
template <typename Real>
void adam_step(std::span<Parameter<Real>* const> params, AdamState<Real>& state);

}  // namespace ecgvae::nn
