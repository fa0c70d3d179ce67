#include "ecgvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ecgvae/nn/parallel.hpp"

namespace ecgvae {

void SampleSet::validate() const {
  if (cycles.empty()) throw ParameterError("sample set '" + label + "' is empty");
  for (const auto& c : cycles) {
    if (c.size() != cycles.front().size()) {
      throw ParameterError("sample set '" + label + "' has cycles of different lengths");
    }
  }
}

SampleSet to_sample_set(std::span<const CardiacCycle> cycles, std::string label) {
  SampleSet s;
  s.label = std::move(label);
  for (const auto& c : cycles) s.cycles.push_back(c.samples);
  return s;
}

namespace {

double squared_distance(std::span<const float> x, std::span<const float> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    acc += d * d;
  }
  return acc;
}

// Sum of k(x, y) over x in a, y in b, optionally skipping i == j. Rows are
// summed independently then added in row order.
double kernel_sum(const SampleSet& a, const SampleSet& b, double sigma, bool skip_diagonal) {
  const double scale = -1.0 / (2.0 * sigma * sigma);
  std::vector<double> rows(a.size(), 0.0);
  nn::parallel_for(a.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (skip_diagonal && i == j) continue;
        acc += std::exp(scale * squared_distance(a.cycles[i], b.cycles[j]));
      }
      rows[i] = acc;
    }
  });
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

}  // namespace

double rbf_kernel(std::span<const float> x, std::span<const float> y, double sigma) {
  if (!(sigma > 0)) throw ParameterError("rbf_kernel: sigma must be > 0");
  if (x.size() != y.size()) throw DimensionError("rbf_kernel: vectors differ in length");
  return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

double median_heuristic(const SampleSet& a, const SampleSet& b, std::uint64_t seed,
                        std::size_t exact_limit) {
  std::vector<const std::vector<float>*> pool;
  for (const auto& c : a.cycles) pool.push_back(&c);
  for (const auto& c : b.cycles) pool.push_back(&c);
  if (pool.size() < 2) throw ParameterError("median_heuristic needs at least two points");
  for (const auto* c : pool) {
    if (c->size() != pool.front()->size()) throw DimensionError("median_heuristic: ragged input");
  }
  if (pool.size() > exact_limit) {
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(exact_limit);
  }
  const std::size_t n = pool.size();
  std::vector<double> dist(n * (n - 1) / 2);
  nn::parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      // Pairs (i, j>i) start at offset i*n - i*(i+1)/2.
      std::size_t k = i * n - i * (i + 1) / 2;
      for (std::size_t j = i + 1; j < n; ++j) {
        dist[k++] = std::sqrt(squared_distance(*pool[i], *pool[j]));
      }
    }
  });
  const std::size_t m = dist.size();
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (m % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), mid);
    median = 0.5 * (lower + median);
  }
  return median > 0 ? median : 1.0;
}

double mmd2(const SampleSet& a, const SampleSet& b, double sigma, MmdEstimator estimator) {
  a.validate();
  b.validate();
  if (a.cycles.front().size() != b.cycles.front().size()) {
    throw DimensionError("mmd2: sets have different cycle lengths");
  }
  if (!(sigma > 0)) throw ParameterError("mmd2: sigma must be > 0");
  const double na = double(a.size()), nb = double(b.size());
  if (estimator == MmdEstimator::biased) {
    return kernel_sum(a, a, sigma, false) / (na * na) + kernel_sum(b, b, sigma, false) / (nb * nb) -
           2.0 * kernel_sum(a, b, sigma, false) / (na * nb);
  }
  if (a.size() < 2 || b.size() < 2) {
    throw ParameterError("unbiased mmd2 needs at least two cycles per set");
  }
  return kernel_sum(a, a, sigma, true) / (na * (na - 1)) +
         kernel_sum(b, b, sigma, true) / (nb * (nb - 1)) -
         2.0 * kernel_sum(a, b, sigma, false) / (na * nb);
}

MmdReport mmd_report(const SampleSet& a, const SampleSet& b, double sigma, std::uint64_t seed) {
  MmdReport r;
  r.label_a = a.label;
  r.label_b = b.label;
  r.n_a = a.size();
  r.n_b = b.size();
  r.seed = seed;
  r.sigma = sigma > 0 ? sigma : median_heuristic(a, b, seed);
  r.mmd2_biased = mmd2(a, b, r.sigma, MmdEstimator::biased);
  r.mmd2_unbiased = (a.size() >= 2 && b.size() >= 2)
                        ? mmd2(a, b, r.sigma, MmdEstimator::unbiased)
                        : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace ecgvae
