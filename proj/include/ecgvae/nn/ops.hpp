#pragma once

#include <cstddef>
#include <span>

#include "ecgvae/nn/tape.hpp"
#include "ecgvae/nn/tensor.hpp"

namespace ecgvae::nn {

enum class Mode { train, eval };

template <typename Real>
struct BatchNormStats {
  Tensor<Real> running_mean;
  Tensor<Real> running_var;

  BatchNormStats() = default;
  explicit BatchNormStats(std::size_t features)
      : running_mean(Shape{features}, Real(0)), running_var(Shape{features}, Real(1)) {}
};

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

// ---- taped ops -------------------------------------------------------------
//
// Convolution is cross-correlation with zero "same" padding of (K-1)/2 on
// each side; K must be odd. Inputs are [C, L] or [B, C, L].

template <typename Real>
Var conv1d(Tape<Real>& tape, Var input, Var weight, Var bias, std::size_t stride = 1);

/// input [n] or [B, n]; weight [m, n]; bias [m].
template <typename Real>
Var dense(Tape<Real>& tape, Var input, Var weight, Var bias);

/// Per feature for [B, F], per channel (pooled over B and L) for [B, C, L].
/// Train mode uses batch statistics and folds them into `stats` with the
/// configured momentum (unbiased variance); eval mode uses `stats`.
template <typename Real>
Var batchnorm1d_train(Tape<Real>& tape, Var input, Var gamma, Var beta, BatchNormStats<Real>& stats,
                      const BatchNormOptions& opts = {});
template <typename Real>
Var batchnorm1d_eval(Tape<Real>& tape, Var input, Var gamma, Var beta,
                     const BatchNormStats<Real>& stats, const BatchNormOptions& opts = {});

template <typename Real>
Var relu(Tape<Real>& tape, Var input);

/// Pools along the last axis; trailing L mod width samples are dropped and
/// ties go to the first index.
template <typename Real>
Var maxpool1d(Tape<Real>& tape, Var input, std::size_t width = 2);

template <typename Real>
Var upsample_nearest1d(Tape<Real>& tape, Var input, std::size_t factor = 2);

/// Joins [B, F_i] (or [F_i]) tensors along the feature axis.
template <typename Real>
Var concat(Tape<Real>& tape, std::span<const Var> parts);

template <typename Real>
Var reshape(Tape<Real>& tape, Var input, Shape shape);

template <typename Real>
Var add(Tape<Real>& tape, Var a, Var b);

template <typename Real>
Var scale(Tape<Real>& tape, Var a, double factor);

template <typename Real>
Var sum(Tape<Real>& tape, Var input);

/// sum(input * weights); used to build scalar probes for gradient checks.
template <typename Real>
Var weighted_sum(Tape<Real>& tape, Var input, const Tensor<Real>& weights);

/// Mean squared error over every element (batch and samples).
template <typename Real>
Var mse_loss(Tape<Real>& tape, Var prediction, Var target);

/// Closed-form KL(N(mu, exp(logvar)) || N(0, I)) summed over latent
/// dimensions and averaged over the batch. Inputs are [D] or [B, D].
template <typename Real>
Var kl_divergence(Tape<Real>& tape, Var mu, Var logvar);

/// z = mu + exp(logvar / 2) * noise.
template <typename Real>
Var reparameterize(Tape<Real>& tape, Var mu, Var logvar, Var noise);

// ---- eager forward helpers -------------------------------------------------

template <typename Real>
Tensor<Real> conv1d_forward(const Tensor<Real>& input, const Tensor<Real>& weight,
                            const Tensor<Real>& bias, std::size_t stride = 1);
template <typename Real>
Tensor<Real> dense_forward(const Tensor<Real>& input, const Tensor<Real>& weight,
                           const Tensor<Real>& bias);
template <typename Real>
Tensor<Real> batchnorm1d_forward(const Tensor<Real>& input, const Tensor<Real>& gamma,
                                 const Tensor<Real>& beta, BatchNormStats<Real>& stats, Mode mode,
                                 const BatchNormOptions& opts = {});
template <typename Real>
Tensor<Real> relu_forward(const Tensor<Real>& input);
template <typename Real>
Tensor<Real> maxpool1d_forward(const Tensor<Real>& input, std::size_t width = 2);
template <typename Real>
Tensor<Real> upsample_nearest(const Tensor<Real>& input, std::size_t factor = 2);

}  // namespace ecgvae::nn
