#pragma once

// Raw compute kernels shared by the eager and taped code paths. Backward
// kernels accumulate (+=) into their output spans; an empty span skips that
// gradient.

#include <cstddef>
#include <span>
#include <vector>

namespace ecgvae::nn::kernels {

struct ConvDims {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t length = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;

  std::size_t pad() const { return (kernel - 1) / 2; }
  std::size_t out_length() const { return (length + stride - 1) / stride; }
};

template <typename Real>
void conv1d_forward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out);

template <typename Real>
void conv1d_backward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                     std::span<const Real> dout, std::span<Real> din, std::span<Real> dweight,
                     std::span<Real> dbias);

struct DenseDims {
  std::size_t batch = 1;
  std::size_t in_features = 1;
  std::size_t out_features = 1;
};

template <typename Real>
void dense_forward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                   std::span<const Real> bias, std::span<Real> out);

template <typename Real>
void dense_backward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> dout, std::span<Real> din, std::span<Real> dweight,
                    std::span<Real> dbias);

/// Batch-norm layout: [batch, features, length]; rank-2 inputs use length 1.
struct NormDims {
  std::size_t batch = 1;
  std::size_t features = 1;
  std::size_t length = 1;
};

/// Per-feature population mean and variance, accumulated in double.
template <typename Real>
void feature_moments(const NormDims& d, std::span<const Real> in, std::vector<double>& mean,
                     std::vector<double>& var);

template <typename Real>
void maxpool1d_forward(std::size_t rows, std::size_t length, std::size_t width,
                       std::span<const Real> in, std::span<Real> out,
                       std::span<std::size_t> argmax);

template <typename Real>
void upsample1d_forward(std::size_t rows, std::size_t length, std::size_t factor,
                        std::span<const Real> in, std::span<Real> out);

template <typename Real>
void upsample1d_backward(std::size_t rows, std::size_t length, std::size_t factor,
                         std::span<const Real> dout, std::span<Real> din);

/// Dot product with fixed-lane partial sums; the result is independent of
/// caller-side partitioning.
template <typename Real>
double dot(std::span<const Real> a, std::span<const Real> b);

}  // namespace ecgvae::nn::kernels
