#include "ecgvae/vae.hpp"

#include <random>

namespace ecgvae {

using nn::LayerKind;
using nn::LayerSpec;
using nn::Mode;
using nn::Shape;
using nn::Tape;
using nn::Tensor;
using nn::Var;

void validate_cycle(std::span<const float> samples, std::size_t length) {
  if (samples.size() != length) {
    throw DimensionError("cardiac cycle must have " + std::to_string(length) + " samples, got " +
                         std::to_string(samples.size()));
  }
  for (float v : samples) {
    if (!std::isfinite(v)) throw NumericError("cardiac cycle contains a non-finite sample");
  }
}

void ArchConfig::validate() const {
  if (latent_dim == 0 || input_len == 0) throw ParameterError("latent_dim and input_len must be > 0");
  if (kernel % 2 == 0) throw ParameterError("conv kernel width must be odd");
  if (pool < 1) throw ParameterError("pool factor must be >= 1");
  auto span_of = [&](std::size_t blocks) {
    std::size_t len = latent_dim;
    for (std::size_t i = 0; i < blocks; ++i) len *= pool;
    return len;
  };
  if (encoder_conv_channels.empty() || span_of(encoder_conv_channels.size()) != input_len) {
    throw ParameterError("encoder conv blocks must reduce input_len to latent_dim");
  }
  if (decoder_conv_channels.empty() || span_of(decoder_conv_channels.size()) != input_len) {
    throw ParameterError("decoder conv blocks must expand latent_dim to input_len");
  }
  if (decoder_conv_channels.back() != 1) {
    throw ParameterError("decoder conv branch must end with a single channel");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (batch_size < 2) throw ParameterError("batch_size must be >= 2 (batch normalization)");
  if (!(lr > 0)) throw ParameterError("lr must be > 0");
  if (!(beta_kl >= 0)) throw ParameterError("beta_kl must be >= 0");
  if (!(eval_fraction > 0 && eval_fraction < 1)) {
    throw ParameterError("eval_fraction must lie in (0, 1)");
  }
}

namespace {

template <typename Real>
void add_block(std::vector<nn::Layer<Real>>& branch, const std::string& prefix,
               const LayerSpec& spec) {
  branch.push_back(nn::make_layer<Real>(prefix + "." + std::to_string(branch.size()), spec));
}

// Conv layers need [B, C, L]; dense layers need [B, F]. Inserts the
// reshapes between them and flattens the branch output.
template <typename Real, typename Layers, typename Apply>
Var run_branch(Tape<Real>& tape, Layers& layers, Var x, Apply&& apply) {
  for (auto& layer : layers) {
    const Shape& s = tape.value(x).shape();
    if (layer.spec.kind == LayerKind::conv1d && s.size() == 2) {
      x = nn::reshape(tape, x, Shape{s[0], 1, s[1]});
    } else if (layer.spec.kind == LayerKind::dense && s.size() == 3) {
      x = nn::reshape(tape, x, Shape{s[0], s[1] * s[2]});
    }
    x = apply(layer, x);
  }
  const Shape& s = tape.value(x).shape();
  if (s.size() == 3) x = nn::reshape(tape, x, Shape{s[0], s[1] * s[2]});
  return x;
}

}  // namespace

template <typename Real>
VaeModel<Real>::VaeModel(ArchConfig arch) : arch_(std::move(arch)) {
  arch_.validate();
  build();
}

template <typename Real>
void VaeModel<Real>::build() {
  const auto& a = arch_;
  std::size_t ch = 1;
  for (std::size_t c : a.encoder_conv_channels) {
    add_block(encoder_conv_, "encoder.conv", LayerSpec::conv(ch, c, a.kernel));
    add_block(encoder_conv_, "encoder.conv", LayerSpec::batchnorm(c));
    add_block(encoder_conv_, "encoder.conv", LayerSpec::relu());
    add_block(encoder_conv_, "encoder.conv", LayerSpec::maxpool(a.pool));
    ch = c;
  }
  add_block(encoder_conv_, "encoder.conv", LayerSpec::conv(ch, 1, 1));

  std::size_t width = a.input_len;
  std::vector<std::size_t> enc_widths = a.encoder_dense_hidden;
  enc_widths.push_back(a.latent_dim);
  for (std::size_t w : enc_widths) {
    add_block(encoder_dense_, "encoder.dense", LayerSpec::dense(width, w));
    add_block(encoder_dense_, "encoder.dense", LayerSpec::batchnorm(w));
    add_block(encoder_dense_, "encoder.dense", LayerSpec::relu());
    width = w;
  }
  mu_head_ = nn::make_layer<Real>("encoder.mu", LayerSpec::dense(2 * a.latent_dim, a.latent_dim));
  logvar_head_ =
      nn::make_layer<Real>("encoder.logvar", LayerSpec::dense(2 * a.latent_dim, a.latent_dim));

  width = a.latent_dim;
  std::vector<std::size_t> dec_widths = a.decoder_dense_hidden;
  dec_widths.push_back(a.input_len);
  for (std::size_t w : dec_widths) {
    add_block(decoder_dense_, "decoder.dense", LayerSpec::dense(width, w));
    add_block(decoder_dense_, "decoder.dense", LayerSpec::batchnorm(w));
    add_block(decoder_dense_, "decoder.dense", LayerSpec::relu());
    width = w;
  }
  ch = 1;
  for (std::size_t c : a.decoder_conv_channels) {
    add_block(decoder_conv_, "decoder.conv", LayerSpec::conv(ch, c, a.kernel));
    add_block(decoder_conv_, "decoder.conv", LayerSpec::batchnorm(c));
    add_block(decoder_conv_, "decoder.conv", LayerSpec::relu());
    add_block(decoder_conv_, "decoder.conv", LayerSpec::upsample(a.pool));
    ch = c;
  }
  decoder_head_ =
      nn::make_layer<Real>("decoder.head", LayerSpec::dense(2 * a.input_len, a.input_len));
}

template <typename Real>
VaeModel<Real> VaeModel<Real>::initialized(ArchConfig arch, std::uint64_t seed) {
  VaeModel model(std::move(arch));
  model.init_seed = seed;
  std::mt19937_64 rng(seed);
  auto init_branch = [&](std::vector<nn::Layer<Real>>& branch) {
    for (std::size_t i = 0; i < branch.size(); ++i) {
      const bool feeds_norm =
          i + 1 < branch.size() && branch[i + 1].spec.kind == LayerKind::batchnorm1d;
      nn::initialize(branch[i], feeds_norm ? nn::InitScale::he : nn::InitScale::lecun, rng);
    }
  };
  init_branch(model.encoder_conv_);
  init_branch(model.encoder_dense_);
  nn::initialize(model.mu_head_, nn::InitScale::lecun, rng);
  nn::initialize(model.logvar_head_, nn::InitScale::lecun, rng);
  init_branch(model.decoder_dense_);
  init_branch(model.decoder_conv_);
  nn::initialize(model.decoder_head_, nn::InitScale::lecun, rng);
  return model;
}

template <typename Real>
std::vector<ManifestEntry> VaeModel<Real>::manifest() const {
  std::vector<ManifestEntry> out;
  auto push = [&](const std::vector<nn::Layer<Real>>& branch) {
    for (const auto& l : branch) out.push_back({l.name, l.spec});
  };
  push(encoder_conv_);
  push(encoder_dense_);
  out.push_back({"encoder.concat", LayerSpec::concat(2 * arch_.latent_dim)});
  out.push_back({mu_head_.name, mu_head_.spec});
  out.push_back({logvar_head_.name, logvar_head_.spec});
  push(decoder_dense_);
  push(decoder_conv_);
  out.push_back({"decoder.concat", LayerSpec::concat(2 * arch_.input_len)});
  out.push_back({decoder_head_.name, decoder_head_.spec});
  return out;
}

template <typename Real>
std::vector<nn::Parameter<Real>*> VaeModel<Real>::parameters() {
  std::vector<nn::Parameter<Real>*> out;
  auto visit = [&](nn::Layer<Real>& l) {
    for (auto& p : l.params) out.push_back(&p);
  };
  for (auto& l : encoder_conv_) visit(l);
  for (auto& l : encoder_dense_) visit(l);
  visit(mu_head_);
  visit(logvar_head_);
  for (auto& l : decoder_dense_) visit(l);
  for (auto& l : decoder_conv_) visit(l);
  visit(decoder_head_);
  return out;
}

template <typename Real>
std::vector<const nn::Parameter<Real>*> VaeModel<Real>::parameters() const {
  auto mutable_ptrs = const_cast<VaeModel*>(this)->parameters();
  return {mutable_ptrs.begin(), mutable_ptrs.end()};
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>*>> VaeModel<Real>::buffers() {
  std::vector<std::pair<std::string, Tensor<Real>*>> out;
  auto visit = [&](nn::Layer<Real>& l) {
    if (l.spec.kind != LayerKind::batchnorm1d) return;
    out.emplace_back(l.name + ".running_mean", &l.stats.running_mean);
    out.emplace_back(l.name + ".running_var", &l.stats.running_var);
  };
  for (auto& l : encoder_conv_) visit(l);
  for (auto& l : encoder_dense_) visit(l);
  for (auto& l : decoder_dense_) visit(l);
  for (auto& l : decoder_conv_) visit(l);
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real>*>> VaeModel<Real>::buffers() const {
  std::vector<std::pair<std::string, const Tensor<Real>*>> out;
  for (auto& [name, ptr] : const_cast<VaeModel*>(this)->buffers()) out.emplace_back(name, ptr);
  return out;
}

template <typename Real>
void VaeModel<Real>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename Real>
typename VaeModel<Real>::Encoded VaeModel<Real>::encode(Tape<Real>& tape, Var x, Mode mode) {
  auto apply = [&](nn::Layer<Real>& l, Var v) { return nn::forward(tape, l, v, mode); };
  Var conv = run_branch(tape, encoder_conv_, x, apply);
  Var dense = run_branch(tape, encoder_dense_, x, apply);
  const Var parts[] = {conv, dense};
  Var joined = nn::concat<Real>(tape, parts);
  return {apply(mu_head_, joined), apply(logvar_head_, joined)};
}

template <typename Real>
typename VaeModel<Real>::Encoded VaeModel<Real>::encode(Tape<Real>& tape, Var x) const {
  auto apply = [&](const nn::Layer<Real>& l, Var v) { return nn::forward(tape, l, v); };
  Var conv = run_branch(tape, encoder_conv_, x, apply);
  Var dense = run_branch(tape, encoder_dense_, x, apply);
  const Var parts[] = {conv, dense};
  Var joined = nn::concat<Real>(tape, parts);
  return {apply(mu_head_, joined), apply(logvar_head_, joined)};
}

template <typename Real>
Var VaeModel<Real>::decode(Tape<Real>& tape, Var z, Mode mode) {
  auto apply = [&](nn::Layer<Real>& l, Var v) { return nn::forward(tape, l, v, mode); };
  Var dense = run_branch(tape, decoder_dense_, z, apply);
  Var conv = run_branch(tape, decoder_conv_, z, apply);
  const Var parts[] = {conv, dense};
  return apply(decoder_head_, nn::concat<Real>(tape, parts));
}

template <typename Real>
Var VaeModel<Real>::decode(Tape<Real>& tape, Var z) const {
  auto apply = [&](const nn::Layer<Real>& l, Var v) { return nn::forward(tape, l, v); };
  Var dense = run_branch(tape, decoder_dense_, z, apply);
  Var conv = run_branch(tape, decoder_conv_, z, apply);
  const Var parts[] = {conv, dense};
  return apply(decoder_head_, nn::concat<Real>(tape, parts));
}

template <typename Real>
std::pair<Tensor<Real>, Tensor<Real>> VaeModel<Real>::encode_batch(const Tensor<Real>& x) const {
  if (x.rank() != 2 || x.dim(1) != arch_.input_len) {
    throw DimensionError("encode expects [B, " + std::to_string(arch_.input_len) + "], got " +
                         nn::shape_to_string(x.shape()));
  }
  Tape<Real> tape;
  auto enc = encode(tape, tape.constant_ref(x));
  return {tape.value(enc.mu), tape.value(enc.logvar)};
}

template <typename Real>
Tensor<Real> VaeModel<Real>::decode_batch(const Tensor<Real>& z) const {
  if (z.rank() != 2 || z.dim(1) != arch_.latent_dim) {
    throw DimensionError("decode expects [B, " + std::to_string(arch_.latent_dim) + "], got " +
                         nn::shape_to_string(z.shape()));
  }
  if (!z.all_finite()) throw NumericError("decode input contains non-finite values");
  Tape<Real> tape;
  return tape.value(decode(tape, tape.constant_ref(z)));
}

template <typename Real>
LatentCode<Real> VaeModel<Real>::encode(std::span<const Real> cycle) const {
  if (cycle.size() != arch_.input_len) {
    throw DimensionError("encode expects " + std::to_string(arch_.input_len) +
                         " samples, got " + std::to_string(cycle.size()));
  }
  auto [mu, logvar] =
      encode_batch(Tensor<Real>(Shape{1, cycle.size()}, {cycle.begin(), cycle.end()}));
  return {mu.vec(), logvar.vec(), std::nullopt, std::nullopt};
}

template <typename Real>
std::vector<Real> VaeModel<Real>::decode(std::span<const Real> z) const {
  if (z.size() != arch_.latent_dim) {
    throw DimensionError("decode expects a latent vector of length " +
                         std::to_string(arch_.latent_dim) + ", got " + std::to_string(z.size()));
  }
  return decode_batch(Tensor<Real>(Shape{1, z.size()}, {z.begin(), z.end()})).vec();
}

namespace {

Shape unbatched(const Shape& s) { return Shape(s.begin() + 1, s.end()); }

}  // namespace

template <typename Real>
ShapeReport VaeModel<Real>::probe_shapes() const {
  // Two rows so the probe also works for any batch-size-dependent check.
  Tensor<Real> x(Shape{2, arch_.input_len});
  Tape<Real> tape;
  Var in = tape.constant_ref(x);
  auto apply = [&](const nn::Layer<Real>& l, Var v) { return nn::forward(tape, l, v); };
  ShapeReport r;
  r.input = unbatched(tape.value(in).shape());
  Var ec = run_branch(tape, encoder_conv_, in, apply);
  Var ed = run_branch(tape, encoder_dense_, in, apply);
  r.encoder_conv = unbatched(tape.value(ec).shape());
  r.encoder_dense = unbatched(tape.value(ed).shape());
  const Var enc_parts[] = {ec, ed};
  Var joined = nn::concat<Real>(tape, enc_parts);
  r.encoder_concat = unbatched(tape.value(joined).shape());
  Var mu = apply(mu_head_, joined);
  r.mu = unbatched(tape.value(mu).shape());
  r.logvar = unbatched(tape.value(apply(logvar_head_, joined)).shape());
  Var dd = run_branch(tape, decoder_dense_, mu, apply);
  Var dc = run_branch(tape, decoder_conv_, mu, apply);
  r.decoder_dense = unbatched(tape.value(dd).shape());
  r.decoder_conv = unbatched(tape.value(dc).shape());
  const Var dec_parts[] = {dc, dd};
  Var djoined = nn::concat<Real>(tape, dec_parts);
  r.decoder_concat = unbatched(tape.value(djoined).shape());
  r.output = unbatched(tape.value(apply(decoder_head_, djoined)).shape());
  return r;
}

namespace {

Shape flatten(const Shape& s) { return {nn::shape_size(s)}; }

// Mirrors run_branch on unbatched shapes.
Shape infer_branch(const std::vector<ManifestEntry>& manifest, const std::string& prefix, Shape s) {
  for (const auto& e : manifest) {
    if (e.name.rfind(prefix, 0) != 0) continue;
    if (e.spec.kind == LayerKind::conv1d && s.size() == 1) s = Shape{1, s[0]};
    if (e.spec.kind == LayerKind::dense && s.size() == 2) s = flatten(s);
    s = nn::infer_shape(e.spec, s);
  }
  return s.size() == 2 ? flatten(s) : s;
}

}  // namespace

ShapeReport infer_shapes(const ArchConfig& arch) {
  // The manifest is a pure function of the architecture; parameters are not needed.
  const auto manifest = VaeModel<float>(arch).manifest();
  auto find = [&](const std::string& name) -> const LayerSpec& {
    for (const auto& e : manifest) {
      if (e.name == name) return e.spec;
    }
    throw StateError("manifest has no entry " + name);
  };
  ShapeReport r;
  r.input = {arch.input_len};
  r.encoder_conv = infer_branch(manifest, "encoder.conv.", r.input);
  r.encoder_dense = infer_branch(manifest, "encoder.dense.", r.input);
  const Shape enc_parts[] = {r.encoder_conv, r.encoder_dense};
  r.encoder_concat = nn::infer_shape(find("encoder.concat"), nn::infer_concat_shape(enc_parts));
  r.mu = nn::infer_shape(find("encoder.mu"), r.encoder_concat);
  r.logvar = nn::infer_shape(find("encoder.logvar"), r.encoder_concat);
  r.decoder_conv = infer_branch(manifest, "decoder.conv.", r.mu);
  r.decoder_dense = infer_branch(manifest, "decoder.dense.", r.mu);
  const Shape dec_parts[] = {r.decoder_conv, r.decoder_dense};
  r.decoder_concat = nn::infer_shape(find("decoder.concat"), nn::infer_concat_shape(dec_parts));
  r.output = nn::infer_shape(find("decoder.head"), r.decoder_concat);
  return r;
}

template <typename Real>
LossVars vae_loss(Tape<Real>& tape, VaeModel<Real>& model, const Tensor<Real>& x,
                  const Tensor<Real>& noise, double beta_kl, Mode mode) {
  Var input = tape.constant_ref(x);
  auto enc = model.encode(tape, input, mode);
  Var z = nn::reparameterize(tape, enc.mu, enc.logvar, tape.constant_ref(noise));
  Var xhat = model.decode(tape, z, mode);
  Var recon = nn::mse_loss(tape, xhat, input);
  Var kl = nn::kl_divergence(tape, enc.mu, enc.logvar);
  Var total = nn::add(tape, recon, nn::scale(tape, kl, beta_kl));
  return {total, recon, kl};
}

LatentCode<float> encode(const Model& model, const CardiacCycle& cycle) {
  validate_cycle(cycle.samples, model.input_len());
  return model.encode(std::span<const float>(cycle.samples));
}

CardiacCycle decode(const Model& model, std::span<const float> z) {
  CardiacCycle out;
  out.samples = model.decode(z);
  return out;
}

template class VaeModel<float>;
template class VaeModel<double>;
template LossVars vae_loss<float>(Tape<float>&, VaeModel<float>&, const Tensor<float>&,
                                  const Tensor<float>&, double, Mode);
template LossVars vae_loss<double>(Tape<double>&, VaeModel<double>&, const Tensor<double>&,
                                   const Tensor<double>&, double, Mode);

}  // namespace ecgvae
