#include "ecgvae/nn/ops.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "ecgvae/errors.hpp"
#include "ecgvae/nn/kernels.hpp"

namespace ecgvae::nn {

namespace {

template <typename Real>
std::span<Real> maybe_grad(Tape<Real>& tape, Var v) {
  return tape.node_requires_grad(v.id) ? tape.grad_buffer(v.id) : std::span<Real>{};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

template <typename Real>
Var conv1d(Tape<Real>& tape, Var input, Var weight, Var bias, std::size_t stride) {
  const auto& x = tape.value(input);
  const auto& w = tape.value(weight);
  const auto& b = tape.value(bias);
  require(x.rank() == 2 || x.rank() == 3,
          "conv1d input must be [C, L] or [B, C, L], got " + shape_to_string(x.shape()));
  require(w.rank() == 3, "conv1d weight must be [C_out, C_in, K]");
  if (stride < 1) throw ParameterError("conv1d stride must be >= 1");
  if (w.dim(2) % 2 == 0) throw ParameterError("conv1d kernel width must be odd");

  kernels::ConvDims d;
  d.batch = x.rank() == 3 ? x.dim(0) : 1;
  d.in_channels = x.dim(x.rank() - 2);
  d.length = x.dim(x.rank() - 1);
  d.out_channels = w.dim(0);
  d.kernel = w.dim(2);
  d.stride = stride;
  require(w.dim(1) == d.in_channels, "conv1d weight expects " + std::to_string(w.dim(1)) +
                                         " input channels, input has " +
                                         std::to_string(d.in_channels));
  require(b.size() == d.out_channels, "conv1d bias length must equal output channels");

  Shape out_shape = x.rank() == 3 ? Shape{d.batch, d.out_channels, d.out_length()}
                                  : Shape{d.out_channels, d.out_length()};
  Tensor<Real> out(out_shape);
  kernels::conv1d_forward<Real>(d, x.data(), w.data(), b.data(), out.data());

  return tape.record("conv1d", std::move(out), {input, weight, bias},
                     [=](Tape<Real>& t, std::size_t self) {
                       kernels::conv1d_backward<Real>(
                           d, t.node_value(input.id).data(), t.node_value(weight.id).data(),
                           t.node_grad(self), maybe_grad(t, input), maybe_grad(t, weight),
                           maybe_grad(t, bias));
                     });
}

template <typename Real>
Var dense(Tape<Real>& tape, Var input, Var weight, Var bias) {
  const auto& x = tape.value(input);
  const auto& w = tape.value(weight);
  const auto& b = tape.value(bias);
  require(x.rank() == 1 || x.rank() == 2,
          "dense input must be [n] or [B, n], got " + shape_to_string(x.shape()));
  require(w.rank() == 2, "dense weight must be [m, n]");
  kernels::DenseDims d;
  d.batch = x.rank() == 2 ? x.dim(0) : 1;
  d.in_features = x.dim(x.rank() - 1);
  d.out_features = w.dim(0);
  require(w.dim(1) == d.in_features, "dense weight expects " + std::to_string(w.dim(1)) +
                                         " inputs, got " + std::to_string(d.in_features));
  require(b.size() == d.out_features, "dense bias length must equal output features");

  Shape out_shape = x.rank() == 2 ? Shape{d.batch, d.out_features} : Shape{d.out_features};
  Tensor<Real> out(out_shape);
  kernels::dense_forward<Real>(d, x.data(), w.data(), b.data(), out.data());

  return tape.record("dense", std::move(out), {input, weight, bias},
                     [=](Tape<Real>& t, std::size_t self) {
                       kernels::dense_backward<Real>(
                           d, t.node_value(input.id).data(), t.node_value(weight.id).data(),
                           t.node_grad(self), maybe_grad(t, input), maybe_grad(t, weight),
                           maybe_grad(t, bias));
                     });
}

namespace {

kernels::NormDims norm_dims(const Shape& s) {
  require(s.size() == 2 || s.size() == 3,
          "batchnorm1d input must be [B, F] or [B, C, L], got " + shape_to_string(s));
  return {s[0], s[1], s.size() == 3 ? s[2] : 1};
}

}  // namespace

template <typename Real>
Var batchnorm1d_train(Tape<Real>& tape, Var input, Var gamma, Var beta, BatchNormStats<Real>& stats,
                      const BatchNormOptions& opts) {
  const auto& x = tape.value(input);
  const kernels::NormDims d = norm_dims(x.shape());
  if (d.batch < 2) throw ParameterError("batchnorm1d train mode needs batch size >= 2");
  const auto& g = tape.value(gamma);
  const auto& bt = tape.value(beta);
  require(g.size() == d.features && bt.size() == d.features,
          "batchnorm1d gamma/beta length must equal feature count");
  require(stats.running_mean.size() == d.features && stats.running_var.size() == d.features,
          "batchnorm1d running statistics have the wrong length");

  std::vector<double> mean, var;
  kernels::feature_moments<Real>(d, x.data(), mean, var);

  auto inv_std = std::make_shared<std::vector<double>>(d.features);
  auto xhat = std::make_shared<std::vector<Real>>(x.size());
  Tensor<Real> out(x.shape());
  for (std::size_t f = 0; f < d.features; ++f) {
    const double is = 1.0 / std::sqrt(var[f] + opts.eps);
    (*inv_std)[f] = is;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const std::size_t off = (b * d.features + f) * d.length;
      for (std::size_t l = 0; l < d.length; ++l) {
        const Real h = static_cast<Real>((x[off + l] - mean[f]) * is);
        (*xhat)[off + l] = h;
        out[off + l] = g[f] * h + bt[f];
      }
    }
  }

  const double n = static_cast<double>(d.batch * d.length);
  const double m = opts.momentum;
  for (std::size_t f = 0; f < d.features; ++f) {
    const double unbiased = var[f] * n / (n - 1.0);
    stats.running_mean[f] = static_cast<Real>((1.0 - m) * stats.running_mean[f] + m * mean[f]);
    stats.running_var[f] = static_cast<Real>((1.0 - m) * stats.running_var[f] + m * unbiased);
  }

  return tape.record(
      "batchnorm1d", std::move(out), {input, gamma, beta},
      [=](Tape<Real>& t, std::size_t self) {
        auto dy = t.node_grad(self);
        const auto& gv = t.node_value(gamma.id);
        auto dx = maybe_grad(t, input);
        auto dg = maybe_grad(t, gamma);
        auto db = maybe_grad(t, beta);
        for (std::size_t f = 0; f < d.features; ++f) {
          double sum_dy = 0.0, sum_dy_h = 0.0;
          for (std::size_t b = 0; b < d.batch; ++b) {
            const std::size_t off = (b * d.features + f) * d.length;
            for (std::size_t l = 0; l < d.length; ++l) {
              sum_dy += dy[off + l];
              sum_dy_h += static_cast<double>(dy[off + l]) * (*xhat)[off + l];
            }
          }
          if (!dg.empty()) dg[f] += static_cast<Real>(sum_dy_h);
          if (!db.empty()) db[f] += static_cast<Real>(sum_dy);
          if (dx.empty()) continue;
          const double k = gv[f] * (*inv_std)[f] / n;
          for (std::size_t b = 0; b < d.batch; ++b) {
            const std::size_t off = (b * d.features + f) * d.length;
            for (std::size_t l = 0; l < d.length; ++l) {
              dx[off + l] += static_cast<Real>(
                  k * (n * dy[off + l] - sum_dy - (*xhat)[off + l] * sum_dy_h));
            }
          }
        }
      });
}

template <typename Real>
Var batchnorm1d_eval(Tape<Real>& tape, Var input, Var gamma, Var beta,
                     const BatchNormStats<Real>& stats, const BatchNormOptions& opts) {
  const auto& x = tape.value(input);
  const kernels::NormDims d = norm_dims(x.shape());
  const auto& g = tape.value(gamma);
  const auto& bt = tape.value(beta);
  require(g.size() == d.features && bt.size() == d.features,
          "batchnorm1d gamma/beta length must equal feature count");
  require(stats.running_mean.size() == d.features && stats.running_var.size() == d.features,
          "batchnorm1d running statistics have the wrong length");

  std::vector<double> mean(d.features), inv_std(d.features);
  for (std::size_t f = 0; f < d.features; ++f) {
    mean[f] = stats.running_mean[f];
    inv_std[f] = 1.0 / std::sqrt(static_cast<double>(stats.running_var[f]) + opts.eps);
  }
  Tensor<Real> out(x.shape());
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t f = 0; f < d.features; ++f) {
      const std::size_t off = (b * d.features + f) * d.length;
      for (std::size_t l = 0; l < d.length; ++l) {
        out[off + l] = static_cast<Real>(g[f] * ((x[off + l] - mean[f]) * inv_std[f]) + bt[f]);
      }
    }
  }

  return tape.record(
      "batchnorm1d", std::move(out), {input, gamma, beta},
      [=](Tape<Real>& t, std::size_t self) {
        auto dy = t.node_grad(self);
        const auto& xv = t.node_value(input.id);
        const auto& gv = t.node_value(gamma.id);
        auto dx = maybe_grad(t, input);
        auto dg = maybe_grad(t, gamma);
        auto db = maybe_grad(t, beta);
        for (std::size_t f = 0; f < d.features; ++f) {
          double sum_dy = 0.0, sum_dy_h = 0.0;
          for (std::size_t b = 0; b < d.batch; ++b) {
            const std::size_t off = (b * d.features + f) * d.length;
            for (std::size_t l = 0; l < d.length; ++l) {
              sum_dy += dy[off + l];
              sum_dy_h += dy[off + l] * ((xv[off + l] - mean[f]) * inv_std[f]);
              if (!dx.empty()) dx[off + l] += static_cast<Real>(gv[f] * inv_std[f] * dy[off + l]);
            }
          }
          if (!dg.empty()) dg[f] += static_cast<Real>(sum_dy_h);
          if (!db.empty()) db[f] += static_cast<Real>(sum_dy);
        }
      });
}

template <typename Real>
Var relu(Tape<Real>& tape, Var input) {
  const auto& x = tape.value(input);
  Tensor<Real> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > Real(0) ? x[i] : Real(0);
  return tape.record("relu", std::move(out), {input}, [=](Tape<Real>& t, std::size_t self) {
    auto dy = t.node_grad(self);
    const auto& xv = t.node_value(input.id);
    auto dx = t.grad_buffer(input.id);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] > Real(0)) dx[i] += dy[i];
    }
  });
}

template <typename Real>
Var maxpool1d(Tape<Real>& tape, Var input, std::size_t width) {
  const auto& x = tape.value(input);
  if (width < 1) throw ParameterError("maxpool1d width must be >= 1");
  const std::size_t length = x.shape().back();
  if (width > length) {
    throw DimensionError("maxpool1d width " + std::to_string(width) + " exceeds length " +
                         std::to_string(length));
  }
  const std::size_t rows = x.size() / length;
  Shape out_shape = x.shape();
  out_shape.back() = length / width;
  Tensor<Real> out(out_shape);
  std::vector<std::size_t> argmax(out.size());
  kernels::maxpool1d_forward<Real>(rows, length, width, x.data(), out.data(), argmax);
  return tape.record("maxpool1d", std::move(out), {input},
                     [=, argmax = std::move(argmax)](Tape<Real>& t, std::size_t self) {
                       auto dy = t.node_grad(self);
                       auto dx = t.grad_buffer(input.id);
                       for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
                     });
}

template <typename Real>
Var upsample_nearest1d(Tape<Real>& tape, Var input, std::size_t factor) {
  const auto& x = tape.value(input);
  if (factor < 1) throw ParameterError("upsample factor must be >= 1");
  const std::size_t length = x.shape().back();
  const std::size_t rows = x.size() / length;
  Shape out_shape = x.shape();
  out_shape.back() = length * factor;
  Tensor<Real> out(out_shape);
  kernels::upsample1d_forward<Real>(rows, length, factor, x.data(), out.data());
  return tape.record("upsample_nearest1d", std::move(out), {input},
                     [=](Tape<Real>& t, std::size_t self) {
                       kernels::upsample1d_backward<Real>(rows, length, factor, t.node_grad(self),
                                                          t.grad_buffer(input.id));
                     });
}

template <typename Real>
Var concat(Tape<Real>& tape, std::span<const Var> parts) {
  require(!parts.empty(), "concat needs at least one input");
  const auto& first = tape.value(parts[0]);
  require(first.rank() == 1 || first.rank() == 2, "concat inputs must be [F] or [B, F]");
  const std::size_t rank = first.rank();
  const std::size_t batch = rank == 2 ? first.dim(0) : 1;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const auto& v = tape.value(p);
    require(v.rank() == rank && (rank == 1 || v.dim(0) == batch),
            "concat inputs disagree in batch size or rank");
    widths.push_back(v.shape().back());
    total += widths.back();
  }
  Tensor<Real> out(rank == 2 ? Shape{batch, total} : Shape{total});
  std::size_t col = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = tape.value(parts[p]);
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(v.data().begin() + b * widths[p], widths[p],
                  out.data().begin() + b * total + col);
    }
    col += widths[p];
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return tape.record("concat", std::move(out), parts, [=](Tape<Real>& t, std::size_t self) {
    auto dy = t.node_grad(self);
    std::size_t c = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (t.node_requires_grad(ids[p].id)) {
        auto dx = t.grad_buffer(ids[p].id);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < widths[p]; ++j) dx[b * widths[p] + j] += dy[b * total + c + j];
        }
      }
      c += widths[p];
    }
  });
}

template <typename Real>
Var reshape(Tape<Real>& tape, Var input, Shape shape) {
  Tensor<Real> out = tape.value(input).reshaped(std::move(shape));
  return tape.record("reshape", std::move(out), {input}, [=](Tape<Real>& t, std::size_t self) {
    auto dy = t.node_grad(self);
    auto dx = t.grad_buffer(input.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  });
}

template <typename Real>
Var add(Tape<Real>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  require(av.shape() == bv.shape(), "add operands differ in shape");
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return tape.record("add", std::move(out), {a, b}, [=](Tape<Real>& t, std::size_t self) {
    auto dy = t.node_grad(self);
    for (Var v : {a, b}) {
      if (!t.node_requires_grad(v.id)) continue;
      auto dx = t.grad_buffer(v.id);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    }
  });
}

template <typename Real>
Var scale(Tape<Real>& tape, Var a, double factor) {
  const auto& av = tape.value(a);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Real>(av[i] * factor);
  return tape.record("scale", std::move(out), {a}, [=](Tape<Real>& t, std::size_t self) {
    auto dy = t.node_grad(self);
    auto dx = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += static_cast<Real>(dy[i] * factor);
  });
}

template <typename Real>
Var sum(Tape<Real>& tape, Var input) {
  double acc = 0.0;
  for (Real v : tape.value(input).data()) acc += v;
  return tape.record("sum", Tensor<Real>(Shape{1}, static_cast<Real>(acc)), {input},
                     [=](Tape<Real>& t, std::size_t self) {
                       const Real g = t.node_grad(self)[0];
                       for (Real& d : t.grad_buffer(input.id)) d += g;
                     });
}

template <typename Real>
Var weighted_sum(Tape<Real>& tape, Var input, const Tensor<Real>& weights) {
  const auto& x = tape.value(input);
  require(x.size() == weights.size(), "weighted_sum weights must match input size");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]) * weights[i];
  return tape.record("weighted_sum", Tensor<Real>(Shape{1}, static_cast<Real>(acc)), {input},
                     [=](Tape<Real>& t, std::size_t self) {
                       const Real g = t.node_grad(self)[0];
                       auto dx = t.grad_buffer(input.id);
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * weights[i];
                     });
}

template <typename Real>
Var mse_loss(Tape<Real>& tape, Var prediction, Var target) {
  const auto& p = tape.value(prediction);
  const auto& y = tape.value(target);
  require(p.size() == y.size(), "mse_loss operands differ in size (" + std::to_string(p.size()) +
                                    " vs " + std::to_string(y.size()) + ")");
  require(!p.empty(), "mse_loss of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = static_cast<double>(p[i]) - y[i];
    acc += e * e;
  }
  const double n = static_cast<double>(p.size());
  return tape.record("mse_loss", Tensor<Real>(Shape{1}, static_cast<Real>(acc / n)),
                     {prediction, target}, [=](Tape<Real>& t, std::size_t self) {
                       const double g = t.node_grad(self)[0] * 2.0 / n;
                       const auto& pv = t.node_value(prediction.id);
                       const auto& yv = t.node_value(target.id);
                       auto dp = maybe_grad(t, prediction);
                       auto dt = maybe_grad(t, target);
                       for (std::size_t i = 0; i < pv.size(); ++i) {
                         const double e = g * (static_cast<double>(pv[i]) - yv[i]);
                         if (!dp.empty()) dp[i] += static_cast<Real>(e);
                         if (!dt.empty()) dt[i] -= static_cast<Real>(e);
                       }
                     });
}

template <typename Real>
Var kl_divergence(Tape<Real>& tape, Var mu, Var logvar) {
  const auto& m = tape.value(mu);
  const auto& lv = tape.value(logvar);
  require(m.shape() == lv.shape(), "kl_divergence mu/logvar shapes differ");
  require(m.rank() <= 2, "kl_divergence inputs must be [D] or [B, D]");
  const double batch = m.rank() == 2 ? static_cast<double>(m.dim(0)) : 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = m[i], l = lv[i];
    acc += a * a + std::exp(l) - l - 1.0;
  }
  return tape.record("kl_divergence", Tensor<Real>(Shape{1}, static_cast<Real>(0.5 * acc / batch)),
                     {mu, logvar}, [=](Tape<Real>& t, std::size_t self) {
                       const double g = t.node_grad(self)[0] / batch;
                       const auto& mv = t.node_value(mu.id);
                       const auto& lvv = t.node_value(logvar.id);
                       auto dm = maybe_grad(t, mu);
                       auto dl = maybe_grad(t, logvar);
                       for (std::size_t i = 0; i < mv.size(); ++i) {
                         if (!dm.empty()) dm[i] += static_cast<Real>(g * mv[i]);
                         if (!dl.empty()) {
                           dl[i] += static_cast<Real>(g * 0.5 * (std::exp(double(lvv[i])) - 1.0));
                         }
                       }
                     });
}

template <typename Real>
Var reparameterize(Tape<Real>& tape, Var mu, Var logvar, Var noise) {
  const auto& m = tape.value(mu);
  const auto& lv = tape.value(logvar);
  const auto& e = tape.value(noise);
  require(m.shape() == lv.shape() && m.size() == e.size(),
          "reparameterize mu/logvar/noise shapes differ");
  Tensor<Real> z(m.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = static_cast<Real>(m[i] + std::exp(0.5 * lv[i]) * e[i]);
  }
  return tape.record("reparameterize", std::move(z), {mu, logvar, noise},
                     [=](Tape<Real>& t, std::size_t self) {
                       auto dz = t.node_grad(self);
                       const auto& lvv = t.node_value(logvar.id);
                       const auto& ev = t.node_value(noise.id);
                       auto dm = maybe_grad(t, mu);
                       auto dl = maybe_grad(t, logvar);
                       auto de = maybe_grad(t, noise);
                       for (std::size_t i = 0; i < dz.size(); ++i) {
                         const double sd = std::exp(0.5 * lvv[i]);
                         if (!dm.empty()) dm[i] += dz[i];
                         if (!dl.empty()) dl[i] += static_cast<Real>(dz[i] * ev[i] * 0.5 * sd);
                         if (!de.empty()) de[i] += static_cast<Real>(dz[i] * sd);
                       }
                     });
}

// ---- eager wrappers ---------------------------------------------------------

template <typename Real>
Tensor<Real> conv1d_forward(const Tensor<Real>& input, const Tensor<Real>& weight,
                            const Tensor<Real>& bias, std::size_t stride) {
  Tape<Real> t;
  return t.value(conv1d(t, t.constant_ref(input), t.constant_ref(weight), t.constant_ref(bias),
                        stride));
}

template <typename Real>
Tensor<Real> dense_forward(const Tensor<Real>& input, const Tensor<Real>& weight,
                           const Tensor<Real>& bias) {
  Tape<Real> t;
  return t.value(dense(t, t.constant_ref(input), t.constant_ref(weight), t.constant_ref(bias)));
}

template <typename Real>
Tensor<Real> batchnorm1d_forward(const Tensor<Real>& input, const Tensor<Real>& gamma,
                                 const Tensor<Real>& beta, BatchNormStats<Real>& stats, Mode mode,
                                 const BatchNormOptions& opts) {
  Tape<Real> t;
  Var x = t.constant_ref(input), g = t.constant_ref(gamma), b = t.constant_ref(beta);
  Var y = mode == Mode::train ? batchnorm1d_train(t, x, g, b, stats, opts)
                              : batchnorm1d_eval(t, x, g, b, stats, opts);
  return t.value(y);
}

template <typename Real>
Tensor<Real> relu_forward(const Tensor<Real>& input) {
  Tape<Real> t;
  return t.value(relu(t, t.constant_ref(input)));
}

template <typename Real>
Tensor<Real> maxpool1d_forward(const Tensor<Real>& input, std::size_t width) {
  Tape<Real> t;
  return t.value(maxpool1d(t, t.constant_ref(input), width));
}

template <typename Real>
Tensor<Real> upsample_nearest(const Tensor<Real>& input, std::size_t factor) {
  Tape<Real> t;
  return t.value(upsample_nearest1d(t, t.constant_ref(input), factor));
}

#define ECGVAE_INSTANTIATE(R)                                                                      \
  template Var conv1d<R>(Tape<R>&, Var, Var, Var, std::size_t);                                    \
  template Var dense<R>(Tape<R>&, Var, Var, Var);                                                  \
  template Var batchnorm1d_train<R>(Tape<R>&, Var, Var, Var, BatchNormStats<R>&,                   \
                                    const BatchNormOptions&);                                      \
  template Var batchnorm1d_eval<R>(Tape<R>&, Var, Var, Var, const BatchNormStats<R>&,              \
                                   const BatchNormOptions&);                                       \
  template Var relu<R>(Tape<R>&, Var);                                                             \
  template Var maxpool1d<R>(Tape<R>&, Var, std::size_t);                                           \
  template Var upsample_nearest1d<R>(Tape<R>&, Var, std::size_t);                                  \
  template Var concat<R>(Tape<R>&, std::span<const Var>);                                          \
  template Var reshape<R>(Tape<R>&, Var, Shape);                                                   \
  template Var add<R>(Tape<R>&, Var, Var);                                                         \
  template Var scale<R>(Tape<R>&, Var, double);                                                    \
  template Var sum<R>(Tape<R>&, Var);                                                              \
  template Var weighted_sum<R>(Tape<R>&, Var, const Tensor<R>&);                                   \
  template Var mse_loss<R>(Tape<R>&, Var, Var);                                                    \
  template Var kl_divergence<R>(Tape<R>&, Var, Var);                                               \
  template Var reparameterize<R>(Tape<R>&, Var, Var, Var);                                         \
  template Tensor<R> conv1d_forward<R>(const Tensor<R>&, const Tensor<R>&, const Tensor<R>&,       \
                                       std::size_t);                                               \
  template Tensor<R> dense_forward<R>(const Tensor<R>&, const Tensor<R>&, const Tensor<R>&);       \
  template Tensor<R> batchnorm1d_forward<R>(const Tensor<R>&, const Tensor<R>&, const Tensor<R>&,  \
                                            BatchNormStats<R>&, Mode, const BatchNormOptions&);    \
  template Tensor<R> relu_forward<R>(const Tensor<R>&);                                            \
  template Tensor<R> maxpool1d_forward<R>(const Tensor<R>&, std::size_t);                          \
  template Tensor<R> upsample_nearest<R>(const Tensor<R>&, std::size_t);

ECGVAE_INSTANTIATE(float)
ECGVAE_INSTANTIATE(double)

#undef ECGVAE_INSTANTIATE

}  // namespace ecgvae::nn
