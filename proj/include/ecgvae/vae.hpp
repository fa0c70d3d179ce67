#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgvae/errors.hpp"
#include "ecgvae/nn/layer.hpp"
#include "ecgvae/nn/ops.hpp"
#include "ecgvae/nn/tape.hpp"

namespace ecgvae {

inline constexpr std::size_t kCycleLength = 400;
inline constexpr std::size_t kLatentDim = 25;

/// One R-centred single-lead heartbeat, millivolts.
struct CardiacCycle {
  std::vector<float> samples;
  std::optional<int> lead_id;
  std::optional<std::string> source_record;

  bool operator==(const CardiacCycle&) const = default;
};

/// Throws DimensionError for a wrong length and NumericError for NaN/Inf.
void validate_cycle(std::span<const float> samples, std::size_t length = kCycleLength);

template <typename Real>
struct LatentCode {
  std::vector<Real> mu;
  std::vector<Real> logvar;
  std::optional<std::vector<Real>> z;
  std::optional<std::uint64_t> noise_seed;
};

/// Layer widths of the encoder/decoder. The conv branches halve (encoder) or
/// double (decoder) the length once per block, so
/// input_len == latent_dim * pool^blocks must hold for both.
struct ArchConfig {
  std::size_t input_len = kCycleLength;
  std::size_t latent_dim = kLatentDim;
  std::size_t kernel = 5;
  std::size_t pool = 2;
  std::vector<std::size_t> encoder_conv_channels{16, 32, 64, 128};
  std::vector<std::size_t> encoder_dense_hidden{256, 64};
  std::vector<std::size_t> decoder_dense_hidden{64, 128, 256};
  std::vector<std::size_t> decoder_conv_channels{64, 32, 16, 1};

  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double beta_kl = 1e-4;
  std::uint64_t seed = 0;
  double eval_fraction = 0.1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct ManifestEntry {
  std::string name;
  nn::LayerSpec spec;

  bool operator==(const ManifestEntry&) const = default;
};

/// Per-sample (unbatched) shapes at the architecture's junctions.
struct ShapeReport {
  nn::Shape input;
  nn::Shape encoder_conv;
  nn::Shape encoder_dense;
  nn::Shape encoder_concat;
  nn::Shape mu;
  nn::Shape logvar;
  nn::Shape decoder_conv;
  nn::Shape decoder_dense;
  nn::Shape decoder_concat;
  nn::Shape output;

  bool operator==(const ShapeReport&) const = default;
};

/// Shapes implied by the layer specs alone.
ShapeReport infer_shapes(const ArchConfig& arch);

/// Encoder: a conv branch (Conv-BN-ReLU-MaxPool blocks, then a width-1 conv
/// collapsing to one channel) and a dense branch (Dense-BN-ReLU blocks) run
/// in parallel on the input; their outputs are concatenated and fed to two
/// dense heads producing mu and logvar.
///
/// Decoder: a dense branch (Dense-BN-ReLU blocks up to input_len) and a conv
/// branch (Conv-BN-ReLU-Upsample blocks starting from z as [1, latent]) run
/// in parallel; their concatenation goes through a final dense layer.
template <typename Real>
class VaeModel {
 public:
  struct Encoded {
    nn::Var mu;
    nn::Var logvar;
  };

  explicit VaeModel(ArchConfig arch = {});

  /// Fresh model with seeded uniform fan-in initialization.
  static VaeModel initialized(ArchConfig arch, std::uint64_t seed);

  const ArchConfig& arch() const { return arch_; }
  std::size_t input_len() const { return arch_.input_len; }
  std::size_t latent_dim() const { return arch_.latent_dim; }

  std::vector<ManifestEntry> manifest() const;
  std::vector<nn::Parameter<Real>*> parameters();
  std::vector<const nn::Parameter<Real>*> parameters() const;
  /// Non-trainable persistent state (batch-norm running statistics).
  std::vector<std::pair<std::string, nn::Tensor<Real>*>> buffers();
  std::vector<std::pair<std::string, const nn::Tensor<Real>*>> buffers() const;
  void zero_grad();

  // Taped passes. The non-const overloads bind parameters as trainable
  // leaves; the const overloads run in eval mode with frozen parameters.
  Encoded encode(nn::Tape<Real>& tape, nn::Var x, nn::Mode mode);
  Encoded encode(nn::Tape<Real>& tape, nn::Var x) const;
  nn::Var decode(nn::Tape<Real>& tape, nn::Var z, nn::Mode mode);
  nn::Var decode(nn::Tape<Real>& tape, nn::Var z) const;

  /// Eval-mode encode of one cycle of input_len samples.
  LatentCode<Real> encode(std::span<const Real> cycle) const;
  /// Eval-mode decode of one latent vector.
  std::vector<Real> decode(std::span<const Real> z) const;
  /// Row-wise eval-mode encode/decode of [B, input_len] / [B, latent_dim].
  std::pair<nn::Tensor<Real>, nn::Tensor<Real>> encode_batch(const nn::Tensor<Real>& x) const;
  nn::Tensor<Real> decode_batch(const nn::Tensor<Real>& z) const;

  /// Shapes observed by running a probe batch through the model.
  ShapeReport probe_shapes() const;

  template <typename To>
  VaeModel<To> cast() const;

  TrainConfig training_config;
  std::uint64_t init_seed = 0;

 private:
  template <typename>
  friend class VaeModel;

  void build();

  ArchConfig arch_;
  std::vector<nn::Layer<Real>> encoder_conv_;
  std::vector<nn::Layer<Real>> encoder_dense_;
  nn::Layer<Real> mu_head_;
  nn::Layer<Real> logvar_head_;
  std::vector<nn::Layer<Real>> decoder_dense_;
  std::vector<nn::Layer<Real>> decoder_conv_;
  nn::Layer<Real> decoder_head_;
};

template <typename Real>
template <typename To>
VaeModel<To> VaeModel<Real>::cast() const {
  VaeModel<To> out(arch_);
  auto conv = [](const std::vector<nn::Layer<Real>>& src) {
    std::vector<nn::Layer<To>> dst;
    for (const auto& l : src) dst.push_back(l.template cast<To>());
    return dst;
  };
  out.encoder_conv_ = conv(encoder_conv_);
  out.encoder_dense_ = conv(encoder_dense_);
  out.mu_head_ = mu_head_.template cast<To>();
  out.logvar_head_ = logvar_head_.template cast<To>();
  out.decoder_dense_ = conv(decoder_dense_);
  out.decoder_conv_ = conv(decoder_conv_);
  out.decoder_head_ = decoder_head_.template cast<To>();
  out.training_config = training_config;
  out.init_seed = init_seed;
  return out;
}

extern template class VaeModel<float>;
extern template class VaeModel<double>;

using Model = VaeModel<float>;

/// Loss terms of one minibatch, recorded on the tape.
struct LossVars {
  nn::Var total;
  nn::Var recon;
  nn::Var kl;
};

/// recon_mse(decode(reparameterize(encode(x), noise)), x) + beta * KL, with
/// x [B, input_len] and noise [B, latent_dim].
template <typename Real>
LossVars vae_loss(nn::Tape<Real>& tape, VaeModel<Real>& model, const nn::Tensor<Real>& x,
                  const nn::Tensor<Real>& noise, double beta_kl, nn::Mode mode);

/// 0.5 * sum(mu^2 + exp(logvar) - logvar - 1); KL of N(mu, diag exp(logvar))
/// from the standard normal.
template <typename Real>
double kl_loss(std::span<const Real> mu, std::span<const Real> logvar) {
  if (mu.size() != logvar.size()) throw DimensionError("kl_loss: mu/logvar lengths differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu[i], l = logvar[i];
    acc += m * m + std::exp(l) - l - 1.0;
  }
  return 0.5 * acc;
}

/// Mean of squared differences.
template <typename Real>
double recon_loss(std::span<const Real> x, std::span<const Real> xhat) {
  if (x.size() != xhat.size()) {
    throw DimensionError("recon_loss: lengths differ (" + std::to_string(x.size()) + " vs " +
                         std::to_string(xhat.size()) + ")");
  }
  if (x.empty()) throw DimensionError("recon_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = static_cast<double>(xhat[i]) - x[i];
    acc += e * e;
  }
  return acc / static_cast<double>(x.size());
}

/// z = mu + exp(logvar / 2) * noise.
template <typename Real>
std::vector<Real> reparameterize(const LatentCode<Real>& code, std::span<const Real> noise) {
  if (code.mu.size() != noise.size() || code.logvar.size() != noise.size()) {
    throw DimensionError("reparameterize: noise length does not match the latent code");
  }
  std::vector<Real> z(noise.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = static_cast<Real>(code.mu[i] + std::exp(0.5 * code.logvar[i]) * noise[i]);
  }
  return z;
}

LatentCode<float> encode(const Model& model, const CardiacCycle& cycle);
CardiacCycle decode(const Model& model, std::span<const float> z);

}  // namespace ecgvae
