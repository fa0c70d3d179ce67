#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecgvae/nn/ops.hpp"
#include "ecgvae/nn/tape.hpp"
#include "ecgvae/nn/tensor.hpp"

namespace ecgvae::nn {

enum class LayerKind : std::uint8_t {
  conv1d = 0,
  dense = 1,
  batchnorm1d = 2,
  relu = 3,
  maxpool1d = 4,
  upsample_nearest1d = 5,
  concat = 6,
};

std::string to_string(LayerKind kind);

/// Hyperparameters of one layer. Field meaning depends on kind:
///   conv1d: in/out channels, kernel (odd), stride
///   dense: in/out features
///   batchnorm1d: in = features (channels for [C, L] inputs)
///   maxpool1d / upsample_nearest1d: factor = window / repeat count
///   concat: out = total width of the joined vector
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t factor = 0;

  static LayerSpec conv(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride = 1);
  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec batchnorm(std::size_t features);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t width = 2);
  static LayerSpec upsample(std::size_t factor = 2);
  static LayerSpec concat(std::size_t total);

  bool operator==(const LayerSpec&) const = default;
};

/// Output shape of one unbatched sample ([C, L] or [F]) through `spec`.
/// Throws DimensionError when the input shape is not accepted.
Shape infer_shape(const LayerSpec& spec, const Shape& input);
Shape infer_concat_shape(std::span<const Shape> parts);

template <typename Real>
struct Layer {
  std::string name;
  LayerSpec spec;
  std::vector<Parameter<Real>> params;
  BatchNormStats<Real> stats;

  template <typename To>
  Layer<To> cast() const {
    Layer<To> out;
    out.name = name;
    out.spec = spec;
    for (const auto& p : params) out.params.emplace_back(p.name, p.value.template cast<To>());
    out.stats.running_mean = stats.running_mean.template cast<To>();
    out.stats.running_var = stats.running_var.template cast<To>();
    return out;
  }
};

enum class InitScale { he, lecun };

/// Allocates parameters for `spec` (zeros, BN gamma = 1, running var = 1).
template <typename Real>
Layer<Real> make_layer(std::string name, const LayerSpec& spec);

/// Uniform fan-in initialization: bound sqrt(6/fan_in) for He, sqrt(3/fan_in)
/// for LeCun. Biases stay zero.
template <typename Real>
void initialize(Layer<Real>& layer, InitScale scale, std::mt19937_64& rng);

/// Applies the layer with its parameters bound as trainable tape leaves.
template <typename Real>
Var forward(Tape<Real>& tape, Layer<Real>& layer, Var input, Mode mode,
            const BatchNormOptions& opts = {});

/// Eval-mode application with frozen parameters; safe on a shared layer.
template <typename Real>
Var forward(Tape<Real>& tape, const Layer<Real>& layer, Var input,
            const BatchNormOptions& opts = {});

}  // namespace ecgvae::nn
