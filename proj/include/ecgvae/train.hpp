#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ecgvae/vae.hpp"

namespace ecgvae {

struct EpochLoss {
  std::size_t epoch = 0;
  double train_recon = 0;
  double train_kl = 0;
  double eval_recon = 0;
  double eval_kl = 0;

  double train_total(double beta_kl) const { return train_recon + beta_kl * train_kl; }
  bool operator==(const EpochLoss&) const = default;
};

struct TrainResult {
  Model model;
  std::vector<EpochLoss> history;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

/// Seeded shuffle of [0, n) into held-out and training indices. At least one
/// cycle is held out and at least two are kept for training.
DatasetSplit split_dataset(std::size_t n, double eval_fraction, std::uint64_t seed);

/// Packs cycles into a [B, length] tensor.
nn::Tensor<float> stack_cycles(std::span<const CardiacCycle> cycles,
                               std::span<const std::size_t> indices);
nn::Tensor<float> stack_cycles(std::span<const CardiacCycle> cycles);

struct EvalLoss {
  double recon = 0;  // mean MSE of decode(mu) against the input
  double kl = 0;     // mean closed-form KL per cycle
};

/// Eval-mode reconstruction through the posterior mean.
EvalLoss evaluate(const Model& model, const nn::Tensor<float>& cycles);

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Minibatch Adam on recon + beta_kl * KL. Each epoch reshuffles the training
/// split; a trailing batch of one cycle is skipped since batch
/// normalization needs two. Deterministic for a given config.
TrainResult train(std::span<const CardiacCycle> dataset, const TrainConfig& config,
                  const ArchConfig& arch = {}, const EpochCallback& on_epoch = {});

}  // namespace ecgvae
