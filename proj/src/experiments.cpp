#include "ecgvae/experiments.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ecgvae/errors.hpp"
#include "ecgvae/persistence.hpp"

namespace ecgvae {

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kSampleSalt = 0x67656e;   // "gen"
constexpr std::uint64_t kBaseSalt = 0x62617365;   // "base"
constexpr std::uint64_t kNoiseSalt = 0x6e6f6973;  // "nois"

constexpr std::size_t kDecodeChunk = 256;

}  // namespace

std::vector<float> draw_latents(std::size_t n, std::size_t latent_dim, std::uint64_t seed) {
  auto rng = seeded(seed, kSampleSalt);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> z(n * latent_dim);
  for (float& v : z) v = static_cast<float>(normal(rng));
  return z;
}

SampleSet sample_synthetic(const Model& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample_synthetic: n must be at least 1");
  const std::size_t dim = model.latent_dim();
  const std::vector<float> z = draw_latents(n, dim, seed);
  SampleSet out;
  out.label = "generated";
  out.cycles.reserve(n);
  for (std::size_t start = 0; start < n; start += kDecodeChunk) {
    const std::size_t rows = std::min(kDecodeChunk, n - start);
    nn::Tensor<float> chunk({rows, dim});
    std::copy_n(z.begin() + static_cast<std::ptrdiff_t>(start * dim), rows * dim,
                chunk.data().begin());
    const auto decoded = model.decode_batch(chunk);
    const std::size_t len = decoded.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = decoded.data().subspan(r * len, len);
      out.cycles.emplace_back(row.begin(), row.end());
    }
  }
  return out;
}

std::vector<CardiacCycle> latent_traversal(const Model& model, std::span<const float> base_z,
                                           std::size_t feature_index,
                                           std::span<const float> values) {
  const std::size_t dim = model.latent_dim();
  if (feature_index >= dim) {
    throw ParameterError("feature index " + std::to_string(feature_index) + " out of range 0-" +
                         std::to_string(dim - 1));
  }
  if (values.empty()) throw ParameterError("latent_traversal: no values given");
  if (base_z.size() != dim) {
    throw DimensionError("latent_traversal: base_z has length " + std::to_string(base_z.size()) +
                         ", expected " + std::to_string(dim));
  }
  nn::Tensor<float> z({values.size(), dim});
  auto zd = z.data();
  for (std::size_t r = 0; r < values.size(); ++r) {
    std::copy(base_z.begin(), base_z.end(), zd.begin() + static_cast<std::ptrdiff_t>(r * dim));
    zd[r * dim + feature_index] = values[r];
  }
  const auto decoded = model.decode_batch(z);
  const std::size_t len = decoded.dim(1);
  std::vector<CardiacCycle> out(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    const auto row = decoded.data().subspan(r * len, len);
    out[r].samples.assign(row.begin(), row.end());
  }
  return out;
}

std::vector<float> linspace(float lo, float hi, std::size_t steps) {
  if (steps == 0) throw ParameterError("linspace: steps must be at least 1");
  if (steps == 1) return {lo};
  std::vector<float> out(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = double(i) / double(steps - 1);
    out[i] = static_cast<float>(double(lo) + t * (double(hi) - double(lo)));
  }
  return out;
}

std::vector<float> traversal_base(const Model& model, const TraversalOptions& options) {
  std::vector<float> base(model.latent_dim(), 0.0f);
  if (options.base_seed) {
    auto rng = seeded(*options.base_seed, kBaseSalt);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (float& v : base) v = static_cast<float>(normal(rng));
  }
  return base;
}

std::string traversal_file_name(std::size_t feature_index) {
  std::string idx = std::to_string(feature_index);
  if (idx.size() < 2) idx.insert(0, 2 - idx.size(), '0');
  return "feature_" + idx + ".svg";
}

namespace {

std::filesystem::path plot_feature(const Model& model, const std::filesystem::path& dir,
                                   std::span<const float> base, std::size_t feature_index,
                                   std::span<const float> grid) {
  const auto cycles = latent_traversal(model, base, feature_index, grid);
  std::vector<std::vector<float>> traces;
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    traces.push_back(cycles[k].samples);
    labels.push_back("z" + std::to_string(feature_index) + " = " + format_number(grid[k]));
  }
  const auto path = dir / traversal_file_name(feature_index);
  emit_plot(traces, labels, path, "latent feature " + std::to_string(feature_index));
  return path;
}

}  // namespace

std::filesystem::path traversal_plot(const Model& model, const std::filesystem::path& dir,
                                     std::size_t feature_index, const TraversalOptions& options) {
  std::filesystem::create_directories(dir);
  const auto base = traversal_base(model, options);
  return plot_feature(model, dir, base, feature_index, options.grid);
}

std::vector<std::filesystem::path> traversal_sweep(const Model& model,
                                                   const std::filesystem::path& dir,
                                                   const TraversalOptions& options) {
  std::filesystem::create_directories(dir);
  const auto base = traversal_base(model, options);
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < model.latent_dim(); ++i) {
    out.push_back(plot_feature(model, dir, base, i, options.grid));
  }
  return out;
}

std::vector<float> mean_cycle(const SampleSet& set) {
  set.validate();
  const std::size_t len = set.cycles.front().size();
  std::vector<double> acc(len, 0.0);
  for (const auto& c : set.cycles) {
    for (std::size_t i = 0; i < len; ++i) acc[i] += c[i];
  }
  std::vector<float> out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = static_cast<float>(acc[i] / double(set.size()));
  return out;
}

double constant_predictor_mse(std::span<const float> mean, const SampleSet& target) {
  target.validate();
  double acc = 0.0;
  for (const auto& c : target.cycles) acc += recon_loss<float>(c, mean);
  return acc / double(target.size());
}

SampleSet matched_white_noise(const SampleSet& reference, std::size_t n, std::uint64_t seed) {
  reference.validate();
  if (n == 0) throw ParameterError("matched_white_noise: n must be at least 1");
  const std::size_t len = reference.cycles.front().size();
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& c : reference.cycles) {
    for (float v : c) {
      sum += v;
      sq += double(v) * v;
      ++count;
    }
  }
  const double mean = sum / double(count);
  const double var = std::max(0.0, sq / double(count) - mean * mean);
  auto rng = seeded(seed, kNoiseSalt);
  std::normal_distribution<double> normal(mean, std::sqrt(std::max(var, 1e-30)));
  SampleSet out;
  out.label = "white-noise";
  out.cycles.assign(n, std::vector<float>(len));
  for (auto& c : out.cycles) {
    for (float& v : c) v = static_cast<float>(normal(rng));
  }
  return out;
}

}  // namespace ecgvae
