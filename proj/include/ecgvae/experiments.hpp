#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ecgvae/metrics.hpp"
#include "ecgvae/vae.hpp"

namespace ecgvae {

/// Decodes n draws of z ~ N(0, I). Pure function of (model, n, seed).
SampleSet sample_synthetic(const Model& model, std::size_t n, std::uint64_t seed);

/// Standard-normal latent draws used by sample_synthetic, row-major [n, latent].
std::vector<float> draw_latents(std::size_t n, std::size_t latent_dim, std::uint64_t seed);

/// One decoded cycle per value, with coordinate `feature_index` of base_z
/// replaced by that value. Throws ParameterError for a bad index or an empty
/// value list, DimensionError when base_z has the wrong length.
std::vector<CardiacCycle> latent_traversal(const Model& model, std::span<const float> base_z,
                                           std::size_t feature_index,
                                           std::span<const float> values);

/// `steps` equispaced values from lo to hi inclusive.
std::vector<float> linspace(float lo, float hi, std::size_t steps);

struct TraversalOptions {
  std::vector<float> grid = linspace(-3.0f, 3.0f, 10);
  /// Zero vector when unset, otherwise a seeded standard-normal draw.
  std::optional<std::uint64_t> base_seed;
};

/// Base latent vector a sweep starts from.
std::vector<float> traversal_base(const Model& model, const TraversalOptions& options);

/// File name used for feature i, e.g. "feature_07.svg".
std::string traversal_file_name(std::size_t feature_index);

/// Writes one stacked plot per latent feature into `dir`; returns the paths
/// in feature order.
std::vector<std::filesystem::path> traversal_sweep(const Model& model,
                                                   const std::filesystem::path& dir,
                                                   const TraversalOptions& options = {});

/// Same as traversal_sweep for a single feature.
std::filesystem::path traversal_plot(const Model& model, const std::filesystem::path& dir,
                                     std::size_t feature_index,
                                     const TraversalOptions& options = {});

/// Per-sample mean of a set of cycles.
std::vector<float> mean_cycle(const SampleSet& set);

/// MSE of predicting every cycle of `target` by the constant `mean`.
double constant_predictor_mse(std::span<const float> mean, const SampleSet& target);

/// n vectors of iid Gaussian samples whose mean and variance match the
/// pooled sample mean and variance of `reference`.
SampleSet matched_white_noise(const SampleSet& reference, std::size_t n, std::uint64_t seed);

}  // namespace ecgvae
