#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgvae/nn/tensor.hpp"

namespace ecgvae::nn {

/// A trainable tensor and its accumulated gradient. The gradient keeps
/// accumulating across backward passes until zero_grad() is called.
template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<Real> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { std::fill(grad.data().begin(), grad.data().end(), Real(0)); }
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
  std::uint64_t tape = 0;
};

/// Wengert list for reverse-mode differentiation. Nodes are appended in
/// evaluation order, so a reverse sweep visits them in topological order.
template <typename Real>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor<Real> value);
  /// Leaf that refers to caller-owned storage; it must outlive the tape.
  Var constant_ref(const Tensor<Real>& value);
  /// Leaf whose gradient can be read back with grad() after backward().
  Var variable(Tensor<Real> value);
  /// Leaf bound to a parameter; backward() adds into p.grad.
  Var parameter(Parameter<Real>& p);

  /// Appends an op result. `fn` receives the node index and must push the
  /// node's gradient into its parents via grad_buffer().
  Var record(std::string_view op, Tensor<Real> value, std::span<const Var> parents, Backward fn);
  Var record(std::string_view op, Tensor<Real> value, std::initializer_list<Var> parents,
             Backward fn) {
    return record(op, std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(fn));
  }

  const Tensor<Real>& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient of a recorded node after backward(); empty if none was computed.
  std::span<const Real> grad(Var v) const;

  /// Gradient buffer of node `id`, allocated (zeroed) on first use.
  std::span<Real> grad_buffer(std::size_t id);
  std::span<const Real> node_grad(std::size_t id) const;
  const Tensor<Real>& node_value(std::size_t id) const;
  bool node_requires_grad(std::size_t id) const;

  /// Reverse sweep from a scalar loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor<Real> owned;
    const Tensor<Real>* borrowed = nullptr;
    std::vector<Real> grad;
    bool requires_grad = false;
    Parameter<Real>* param = nullptr;
    Backward backward;
    std::string_view op;

    const Tensor<Real>& value() const { return borrowed ? *borrowed : owned; }
  };

  std::size_t check(Var v) const;

  std::vector<Node> nodes_;
  std::uint64_t serial_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ecgvae::nn
