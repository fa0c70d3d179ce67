#include "ecgvae/nn/kernels.hpp"

#include <algorithm>

#include "ecgvae/nn/parallel.hpp"

namespace ecgvae::nn::kernels {

template <typename Real>
double dot(std::span<const Real> a, std::span<const Real> b) {
  constexpr std::size_t lanes = 8;
  Real acc[lanes] = {};
  const std::size_t n = a.size();
  const std::size_t body = n - n % lanes;
  for (std::size_t i = 0; i < body; i += lanes) {
    for (std::size_t j = 0; j < lanes; ++j) acc[j] += a[i + j] * b[i + j];
  }
  double total = 0.0;
  for (std::size_t j = 0; j < lanes; ++j) total += static_cast<double>(acc[j]);
  for (std::size_t i = body; i < n; ++i) total += static_cast<double>(a[i]) * b[i];
  return total;
}

namespace {

// Valid output range [lo, hi) for a stride-1 tap whose input offset is `shift`.
inline void tap_range(std::ptrdiff_t shift, std::size_t length, std::size_t& lo, std::size_t& hi) {
  const auto len = static_cast<std::ptrdiff_t>(length);
  lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -shift));
  hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(len - shift, 0, len));
}

}  // namespace

template <typename Real>
void conv1d_forward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out) {
  const std::size_t lout = d.out_length();
  const auto pad = static_cast<std::ptrdiff_t>(d.pad());
  parallel_for(d.batch * d.out_channels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t b = row / d.out_channels;
      const std::size_t co = row % d.out_channels;
      Real* o = out.data() + row * lout;
      std::fill(o, o + lout, bias.empty() ? Real(0) : bias[co]);
      for (std::size_t ci = 0; ci < d.in_channels; ++ci) {
        const Real* x = in.data() + (b * d.in_channels + ci) * d.length;
        const Real* w = weight.data() + (co * d.in_channels + ci) * d.kernel;
        for (std::size_t k = 0; k < d.kernel; ++k) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
          const Real wk = w[k];
          if (d.stride == 1) {
            std::size_t lo, hi;
            tap_range(shift, d.length, lo, hi);
            const Real* xs = x + shift;
            for (std::size_t t = lo; t < hi; ++t) o[t] += wk * xs[t];
          } else {
            for (std::size_t t = 0; t < lout; ++t) {
              const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * d.stride) + shift;
              if (src >= 0 && src < static_cast<std::ptrdiff_t>(d.length)) o[t] += wk * x[src];
            }
          }
        }
      }
    }
  });
}

template <typename Real>
void conv1d_backward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                     std::span<const Real> dout, std::span<Real> din, std::span<Real> dweight,
                     std::span<Real> dbias) {
  const std::size_t lout = d.out_length();
  const auto pad = static_cast<std::ptrdiff_t>(d.pad());
  const auto len = static_cast<std::ptrdiff_t>(d.length);

  if (!din.empty()) {
    parallel_for(d.batch * d.in_channels, [&](std::size_t begin, std::size_t end) {
      for (std::size_t row = begin; row < end; ++row) {
        const std::size_t b = row / d.in_channels;
        const std::size_t ci = row % d.in_channels;
        Real* dx = din.data() + row * d.length;
        for (std::size_t co = 0; co < d.out_channels; ++co) {
          const Real* g = dout.data() + (b * d.out_channels + co) * lout;
          const Real* w = weight.data() + (co * d.in_channels + ci) * d.kernel;
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
            const Real wk = w[k];
            if (d.stride == 1) {
              std::size_t lo, hi;
              tap_range(shift, d.length, lo, hi);
              Real* dxs = dx + shift;
              for (std::size_t t = lo; t < hi; ++t) dxs[t] += wk * g[t];
            } else {
              for (std::size_t t = 0; t < lout; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * d.stride) + shift;
                if (src >= 0 && src < len) dx[src] += wk * g[t];
              }
            }
          }
        }
      }
    });
  }

  if (!dweight.empty() || !dbias.empty()) {
    parallel_for(d.out_channels, [&](std::size_t begin, std::size_t end) {
      for (std::size_t co = begin; co < end; ++co) {
        if (!dbias.empty()) {
          double acc = 0.0;
          for (std::size_t b = 0; b < d.batch; ++b) {
            const Real* g = dout.data() + (b * d.out_channels + co) * lout;
            for (std::size_t t = 0; t < lout; ++t) acc += g[t];
          }
          dbias[co] += static_cast<Real>(acc);
        }
        if (dweight.empty()) continue;
        for (std::size_t ci = 0; ci < d.in_channels; ++ci) {
          Real* dw = dweight.data() + (co * d.in_channels + ci) * d.kernel;
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
            double acc = 0.0;
            for (std::size_t b = 0; b < d.batch; ++b) {
              const Real* g = dout.data() + (b * d.out_channels + co) * lout;
              const Real* x = in.data() + (b * d.in_channels + ci) * d.length;
              if (d.stride == 1) {
                std::size_t lo, hi;
                tap_range(shift, d.length, lo, hi);
                acc += dot<Real>({g + lo, hi - lo}, {x + shift + lo, hi - lo});
              } else {
                for (std::size_t t = 0; t < lout; ++t) {
                  const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * d.stride) + shift;
                  if (src >= 0 && src < len) acc += static_cast<double>(g[t]) * x[src];
                }
              }
            }
            dw[k] += static_cast<Real>(acc);
          }
        }
      }
    });
  }
}

template <typename Real>
void dense_forward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                   std::span<const Real> bias, std::span<Real> out) {
  parallel_for(d.batch * d.out_features, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const std::size_t b = idx / d.out_features;
      const std::size_t m = idx % d.out_features;
      const double acc = dot<Real>(in.subspan(b * d.in_features, d.in_features),
                                   weight.subspan(m * d.in_features, d.in_features));
      out[idx] = static_cast<Real>(acc + (bias.empty() ? 0.0 : static_cast<double>(bias[m])));
    }
  });
}

template <typename Real>
void dense_backward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> dout, std::span<Real> din, std::span<Real> dweight,
                    std::span<Real> dbias) {
  if (!din.empty()) {
    parallel_for(d.batch, [&](std::size_t begin, std::size_t end) {
      for (std::size_t b = begin; b < end; ++b) {
        Real* dx = din.data() + b * d.in_features;
        for (std::size_t m = 0; m < d.out_features; ++m) {
          const Real g = dout[b * d.out_features + m];
          const Real* w = weight.data() + m * d.in_features;
          for (std::size_t n = 0; n < d.in_features; ++n) dx[n] += g * w[n];
        }
      }
    });
  }
  if (!dweight.empty() || !dbias.empty()) {
    parallel_for(d.out_features, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        double bacc = 0.0;
        Real* dw = dweight.empty() ? nullptr : dweight.data() + m * d.in_features;
        for (std::size_t b = 0; b < d.batch; ++b) {
          const Real g = dout[b * d.out_features + m];
          bacc += g;
          if (!dw) continue;
          const Real* x = in.data() + b * d.in_features;
          for (std::size_t n = 0; n < d.in_features; ++n) dw[n] += g * x[n];
        }
        if (!dbias.empty()) dbias[m] += static_cast<Real>(bacc);
      }
    });
  }
}

template <typename Real>
void feature_moments(const NormDims& d, std::span<const Real> in, std::vector<double>& mean,
                     std::vector<double>& var) {
  mean.assign(d.features, 0.0);
  var.assign(d.features, 0.0);
  const double count = static_cast<double>(d.batch * d.length);
  for (std::size_t f = 0; f < d.features; ++f) {
    double s = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const Real* x = in.data() + (b * d.features + f) * d.length;
      for (std::size_t l = 0; l < d.length; ++l) s += x[l];
    }
    const double mu = s / count;
    double ss = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const Real* x = in.data() + (b * d.features + f) * d.length;
      for (std::size_t l = 0; l < d.length; ++l) {
        const double c = x[l] - mu;
        ss += c * c;
      }
    }
    mean[f] = mu;
    var[f] = ss / count;
  }
}

template <typename Real>
void maxpool1d_forward(std::size_t rows, std::size_t length, std::size_t width,
                       std::span<const Real> in, std::span<Real> out,
                       std::span<std::size_t> argmax) {
  const std::size_t lout = length / width;
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* x = in.data() + r * length;
    for (std::size_t t = 0; t < lout; ++t) {
      std::size_t best = t * width;
      for (std::size_t j = best + 1; j < (t + 1) * width; ++j) {
        if (x[j] > x[best]) best = j;
      }
      out[r * lout + t] = x[best];
      argmax[r * lout + t] = r * length + best;
    }
  }
}

template <typename Real>
void upsample1d_forward(std::size_t rows, std::size_t length, std::size_t factor,
                        std::span<const Real> in, std::span<Real> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < length; ++i) {
      Real* o = out.data() + (r * length + i) * factor;
      std::fill(o, o + factor, in[r * length + i]);
    }
  }
}

template <typename Real>
void upsample1d_backward(std::size_t rows, std::size_t length, std::size_t factor,
                         std::span<const Real> dout, std::span<Real> din) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < length; ++i) {
      const Real* g = dout.data() + (r * length + i) * factor;
      Real acc = 0;
      for (std::size_t j = 0; j < factor; ++j) acc += g[j];
      din[r * length + i] += acc;
    }
  }
}

#define ECGVAE_INSTANTIATE(Real)                                                                 \
  template double dot<Real>(std::span<const Real>, std::span<const Real>);                       \
  template void conv1d_forward<Real>(const ConvDims&, std::span<const Real>,                     \
                                     std::span<const Real>, std::span<const Real>,               \
                                     std::span<Real>);                                           \
  template void conv1d_backward<Real>(const ConvDims&, std::span<const Real>,                    \
                                      std::span<const Real>, std::span<const Real>,              \
                                      std::span<Real>, std::span<Real>, std::span<Real>);        \
  template void dense_forward<Real>(const DenseDims&, std::span<const Real>,                     \
                                    std::span<const Real>, std::span<const Real>,                \
                                    std::span<Real>);                                            \
  template void dense_backward<Real>(const DenseDims&, std::span<const Real>,                    \
                                     std::span<const Real>, std::span<const Real>,               \
                                     std::span<Real>, std::span<Real>, std::span<Real>);         \
  template void feature_moments<Real>(const NormDims&, std::span<const Real>,                    \
                                      std::vector<double>&, std::vector<double>&);               \
  template void maxpool1d_forward<Real>(std::size_t, std::size_t, std::size_t,                   \
                                        std::span<const Real>, std::span<Real>,                  \
                                        std::span<std::size_t>);                                 \
  template void upsample1d_forward<Real>(std::size_t, std::size_t, std::size_t,                  \
                                         std::span<const Real>, std::span<Real>);                \
  template void upsample1d_backward<Real>(std::size_t, std::size_t, std::size_t,                 \
                                          std::span<const Real>, std::span<Real>);

ECGVAE_INSTANTIATE(float)
ECGVAE_INSTANTIATE(double)

#undef ECGVAE_INSTANTIATE

}  // namespace ecgvae::nn::kernels
