#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecgvae/vae.hpp"

namespace ecgvae {

/// Cycles (real or generated) compared by the MMD evaluator.
struct SampleSet {
  std::vector<std::vector<float>> cycles;
  std::string label;

  std::size_t size() const { return cycles.size(); }
  /// Nonempty with a uniform cycle length; throws ParameterError otherwise.
  void validate() const;
};

SampleSet to_sample_set(std::span<const CardiacCycle> cycles, std::string label);

/// exp(-||x - y||^2 / (2 sigma^2)).
double rbf_kernel(std::span<const float> x, std::span<const float> y, double sigma);

/// Median pairwise Euclidean distance over the pooled sets (mean of the two
/// middle values for an even pair count). Pools larger than `exact_limit`
/// points are subsampled without replacement using `seed`. Returns 1.0 when
/// every distance is zero.
double median_heuristic(const SampleSet& a, const SampleSet& b, std::uint64_t seed = 0,
                        std::size_t exact_limit = 2000);

enum class MmdEstimator { biased, unbiased };

/// Squared MMD. Biased: mean k(A,A) + mean k(B,B) - 2 mean k(A,B), diagonal
/// included (never negative). Unbiased: diagonal terms excluded from the
/// within-set means.
double mmd2(const SampleSet& a, const SampleSet& b, double sigma, MmdEstimator estimator);

struct MmdReport {
  std::string label_a, label_b;
  std::size_t n_a = 0, n_b = 0;
  double sigma = 0;
  double mmd2_biased = 0;
  double mmd2_unbiased = 0;
  std::uint64_t seed = 0;
};

/// Both estimators at one bandwidth. sigma <= 0 selects the median heuristic.
/// The unbiased value is NaN when either set has fewer than two cycles.
MmdReport mmd_report(const SampleSet& a, const SampleSet& b, double sigma, std::uint64_t seed);

}  // namespace ecgvae
