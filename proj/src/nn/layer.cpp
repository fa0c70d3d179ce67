#include "ecgvae/nn/layer.hpp"

#include <cmath>

#include "ecgvae/errors.hpp"

namespace ecgvae::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d: return "Conv1d";
    case LayerKind::dense: return "Dense";
    case LayerKind::batchnorm1d: return "BatchNorm1d";
    case LayerKind::relu: return "ReLU";
    case LayerKind::maxpool1d: return "MaxPool1d";
    case LayerKind::upsample_nearest1d: return "UpsampleNearest1d";
    case LayerKind::concat: return "Concat";
  }
  return "Unknown";
}

LayerSpec LayerSpec::conv(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride) {
  if (kernel % 2 == 0) throw ParameterError("Conv1d kernel width must be odd");
  if (stride < 1) throw ParameterError("Conv1d stride must be >= 1");
  return {LayerKind::conv1d, in, out, kernel, stride, 0};
}
LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  return {LayerKind::dense, in, out, 0, 1, 0};
}
LayerSpec LayerSpec::batchnorm(std::size_t features) {
  return {LayerKind::batchnorm1d, features, features, 0, 1, 0};
}
LayerSpec LayerSpec::relu() { return {LayerKind::relu, 0, 0, 0, 1, 0}; }
LayerSpec LayerSpec::maxpool(std::size_t width) {
  if (width < 1) throw ParameterError("MaxPool1d width must be >= 1");
  return {LayerKind::maxpool1d, 0, 0, 0, 1, width};
}
LayerSpec LayerSpec::upsample(std::size_t factor) {
  if (factor < 1) throw ParameterError("upsample factor must be >= 1");
  return {LayerKind::upsample_nearest1d, 0, 0, 0, 1, factor};
}
LayerSpec LayerSpec::concat(std::size_t total) { return {LayerKind::concat, 0, total, 0, 1, 0}; }

namespace {

[[noreturn]] void reject(const LayerSpec& spec, const Shape& input) {
  throw DimensionError(to_string(spec.kind) + " cannot accept input " + shape_to_string(input));
}

}  // namespace

Shape infer_shape(const LayerSpec& spec, const Shape& in) {
  switch (spec.kind) {
    case LayerKind::conv1d:
      if (in.size() != 2 || in[0] != spec.in) reject(spec, in);
      return {spec.out, (in[1] + spec.stride - 1) / spec.stride};
    case LayerKind::dense:
      if (in.size() != 1 || in[0] != spec.in) reject(spec, in);
      return {spec.out};
    case LayerKind::batchnorm1d:
      if (in.empty() || in.size() > 2 || in[0] != spec.in) reject(spec, in);
      return in;
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool1d: {
      if (in.empty() || spec.factor > in.back()) reject(spec, in);
      Shape out = in;
      out.back() /= spec.factor;
      return out;
    }
    case LayerKind::upsample_nearest1d: {
      if (in.empty()) reject(spec, in);
      Shape out = in;
      out.back() *= spec.factor;
      return out;
    }
    case LayerKind::concat:
      if (in.size() != 1 || in[0] != spec.out) reject(spec, in);
      return in;
  }
  reject(spec, in);
}

Shape infer_concat_shape(std::span<const Shape> parts) {
  std::size_t total = 0;
  for (const Shape& s : parts) {
    if (s.size() != 1) throw DimensionError("concat parts must be flat vectors");
    total += s[0];
  }
  return {total};
}

template <typename Real>
Layer<Real> make_layer(std::string name, const LayerSpec& spec) {
  Layer<Real> layer;
  layer.name = std::move(name);
  layer.spec = spec;
  switch (spec.kind) {
    case LayerKind::conv1d:
      layer.params.emplace_back(layer.name + ".weight",
                                Tensor<Real>(Shape{spec.out, spec.in, spec.kernel}));
      layer.params.emplace_back(layer.name + ".bias", Tensor<Real>(Shape{spec.out}));
      break;
    case LayerKind::dense:
      layer.params.emplace_back(layer.name + ".weight", Tensor<Real>(Shape{spec.out, spec.in}));
      layer.params.emplace_back(layer.name + ".bias", Tensor<Real>(Shape{spec.out}));
      break;
    case LayerKind::batchnorm1d:
      layer.params.emplace_back(layer.name + ".gamma", Tensor<Real>(Shape{spec.in}, Real(1)));
      layer.params.emplace_back(layer.name + ".beta", Tensor<Real>(Shape{spec.in}));
      layer.stats = BatchNormStats<Real>(spec.in);
      break;
    default:
      break;
  }
  return layer;
}

template <typename Real>
void initialize(Layer<Real>& layer, InitScale scale, std::mt19937_64& rng) {
  const auto& s = layer.spec;
  std::size_t fan_in = 0;
  if (s.kind == LayerKind::conv1d) fan_in = s.in * s.kernel;
  if (s.kind == LayerKind::dense) fan_in = s.in;
  if (fan_in == 0) return;
  const double bound = std::sqrt((scale == InitScale::he ? 6.0 : 3.0) / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Real& w : layer.params[0].value.data()) w = static_cast<Real>(dist(rng));
  for (Real& b : layer.params[1].value.data()) b = Real(0);
}

namespace {

template <typename Real>
Var apply(Tape<Real>& tape, const LayerSpec& spec, Var x, std::span<const Var> p,
          BatchNormStats<Real>* train_stats, const BatchNormStats<Real>& stats,
          const BatchNormOptions& opts) {
  switch (spec.kind) {
    case LayerKind::conv1d: return conv1d(tape, x, p[0], p[1], spec.stride);
    case LayerKind::dense: return dense(tape, x, p[0], p[1]);
    case LayerKind::batchnorm1d:
      return train_stats ? batchnorm1d_train(tape, x, p[0], p[1], *train_stats, opts)
                         : batchnorm1d_eval(tape, x, p[0], p[1], stats, opts);
    case LayerKind::relu: return relu(tape, x);
    case LayerKind::maxpool1d: return maxpool1d(tape, x, spec.factor);
    case LayerKind::upsample_nearest1d: return upsample_nearest1d(tape, x, spec.factor);
    case LayerKind::concat: break;
  }
  throw StateError("layer kind " + to_string(spec.kind) + " is not a single-input layer");
}

}  // namespace

template <typename Real>
Var forward(Tape<Real>& tape, Layer<Real>& layer, Var input, Mode mode,
            const BatchNormOptions& opts) {
  std::vector<Var> p;
  for (auto& param : layer.params) p.push_back(tape.parameter(param));
  return apply(tape, layer.spec, input, p, mode == Mode::train ? &layer.stats : nullptr,
               layer.stats, opts);
}

template <typename Real>
Var forward(Tape<Real>& tape, const Layer<Real>& layer, Var input, const BatchNormOptions& opts) {
  std::vector<Var> p;
  for (const auto& param : layer.params) p.push_back(tape.constant_ref(param.value));
  return apply<Real>(tape, layer.spec, input, p, nullptr, layer.stats, opts);
}

#define ECGVAE_INSTANTIATE(R)                                                                  \
  template Layer<R> make_layer<R>(std::string, const LayerSpec&);                              \
  template void initialize<R>(Layer<R>&, InitScale, std::mt19937_64&);                         \
  template Var forward<R>(Tape<R>&, Layer<R>&, Var, Mode, const BatchNormOptions&);            \
  template Var forward<R>(Tape<R>&, const Layer<R>&, Var, const BatchNormOptions&);

ECGVAE_INSTANTIATE(float)
ECGVAE_INSTANTIATE(double)

#undef ECGVAE_INSTANTIATE

}  // namespace ecgvae::nn
