#include "ecgvae/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "ecgvae/nn/adam.hpp"

namespace ecgvae {

using nn::Shape;
using nn::Tensor;

namespace {

// Independent streams derived from the one user seed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

}  // namespace

DatasetSplit split_dataset(std::size_t n, double eval_fraction, std::uint64_t seed) {
  if (n < 3) throw ParameterError("need at least 3 cycles to hold out an eval split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = stream(seed, kSplitStream);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_eval = static_cast<std::size_t>(std::llround(eval_fraction * double(n)));
  n_eval = std::clamp<std::size_t>(n_eval, 1, n - 2);
  DatasetSplit split;
  split.eval.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
  return split;
}

Tensor<float> stack_cycles(std::span<const CardiacCycle> cycles,
                           std::span<const std::size_t> indices) {
  const std::size_t len = cycles.empty() ? kCycleLength : cycles.front().samples.size();
  Tensor<float> out(Shape{indices.size(), len});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& s = cycles[indices[r]].samples;
    validate_cycle(s, len);
    std::copy(s.begin(), s.end(), out.data().begin() + r * len);
  }
  return out;
}

Tensor<float> stack_cycles(std::span<const CardiacCycle> cycles) {
  std::vector<std::size_t> all(cycles.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return stack_cycles(cycles, all);
}

EvalLoss evaluate(const Model& model, const Tensor<float>& cycles) {
  const std::size_t n = cycles.dim(0), len = cycles.dim(1);
  constexpr std::size_t chunk = 256;
  double se = 0.0, kl = 0.0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t rows = std::min(chunk, n - start);
    Tensor<float> x(Shape{rows, len},
                    std::vector<float>(cycles.data().begin() + start * len,
                                       cycles.data().begin() + (start + rows) * len));
    auto [mu, logvar] = model.encode_batch(x);
    Tensor<float> xhat = model.decode_batch(mu);
    se += recon_loss<float>(x.data(), xhat.data()) * double(rows * len);
    const std::size_t d = model.latent_dim();
    for (std::size_t r = 0; r < rows; ++r) {
      kl += kl_loss<float>(mu.data().subspan(r * d, d), logvar.data().subspan(r * d, d));
    }
  }
  return {se / double(n * len), kl / double(n)};
}

TrainResult train(std::span<const CardiacCycle> dataset, const TrainConfig& config,
                  const ArchConfig& arch, const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw ParameterError("training dataset is empty");
  for (const auto& c : dataset) validate_cycle(c.samples, arch.input_len);

  const DatasetSplit split = split_dataset(dataset.size(), config.eval_fraction, config.seed);
  const Tensor<float> all = stack_cycles(dataset);
  const Tensor<float> eval_set = stack_cycles(dataset, split.eval);
  const std::size_t len = arch.input_len, latent = arch.latent_dim;

  TrainResult result{Model::initialized(arch, config.seed), {}};
  Model& model = result.model;
  model.training_config = config;
  auto params = model.parameters();
  auto adam = nn::make_adam_state<float>(params, nn::AdamConfig{.lr = config.lr});

  auto rng = stream(config.seed, kTrainStream);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<std::size_t> order = split.train;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double recon_sum = 0.0, kl_sum = 0.0;
    std::size_t seen = 0, batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t rows = std::min(config.batch_size, order.size() - start);
      if (rows < 2) continue;
      Tensor<float> x(Shape{rows, len});
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = all.data().subspan(order[start + r] * len, len);
        std::copy(src.begin(), src.end(), x.data().begin() + r * len);
      }
      Tensor<float> noise(Shape{rows, latent});
      for (float& e : noise.data()) e = gauss(rng);

      try {
        nn::Tape<float> tape;
        model.zero_grad();
        auto loss = vae_loss(tape, model, x, noise, config.beta_kl, nn::Mode::train);
        tape.backward(loss.total);
        nn::adam_step<float>(params, adam);
        recon_sum += tape.value(loss.recon)[0] * double(rows);
        kl_sum += tape.value(loss.kl)[0] * double(rows);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + " batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      seen += rows;
    }

    EpochLoss entry;
    entry.epoch = epoch + 1;
    entry.train_recon = recon_sum / double(seen);
    entry.train_kl = kl_sum / double(seen);
    const EvalLoss held_out = evaluate(model, eval_set);
    entry.eval_recon = held_out.recon;
    entry.eval_kl = held_out.kl;
    if (!std::isfinite(entry.train_recon) || !std::isfinite(entry.eval_recon)) {
      throw NumericError("epoch " + std::to_string(entry.epoch) + ": non-finite loss");
    }
    result.history.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  model.zero_grad();
  return result;
}

}  // namespace ecgvae
