#include "ecgvae/nn/tape.hpp"

#include <algorithm>
#include <atomic>

#include "ecgvae/errors.hpp"

namespace ecgvae::nn {

namespace {

std::uint64_t next_serial() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

template <typename Real>
Tape<Real>::Tape() : serial_(next_serial()) {}

template <typename Real>
void Tape<Real>::clear() {
  nodes_.clear();
  serial_ = next_serial();
}

template <typename Real>
std::size_t Tape<Real>::check(Var v) const {
  if (v.tape != serial_ || v.id >= nodes_.size()) {
    throw StateError("variable does not belong to the current tape recording");
  }
  return v.id;
}

template <typename Real>
Var Tape<Real>::constant(Tensor<Real> value) {
  Node n;
  n.owned = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, serial_};
}

template <typename Real>
Var Tape<Real>::constant_ref(const Tensor<Real>& value) {
  Node n;
  n.borrowed = &value;
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, serial_};
}

template <typename Real>
Var Tape<Real>::variable(Tensor<Real> value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  n.op = "variable";
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, serial_};
}

template <typename Real>
Var Tape<Real>::parameter(Parameter<Real>& p) {
  Node n;
  n.borrowed = &p.value;
  n.param = &p;
  n.requires_grad = true;
  n.op = "parameter";
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, serial_};
}

template <typename Real>
Var Tape<Real>::record(std::string_view op, Tensor<Real> value, std::span<const Var> parents,
                       Backward fn) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node n;
  n.owned = std::move(value);
  n.op = op;
  for (Var p : parents) n.requires_grad = n.requires_grad || nodes_[check(p)].requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, serial_};
}

template <typename Real>
const Tensor<Real>& Tape<Real>::value(Var v) const {
  return nodes_[check(v)].value();
}

template <typename Real>
bool Tape<Real>::requires_grad(Var v) const {
  return nodes_[check(v)].requires_grad;
}

template <typename Real>
std::span<const Real> Tape<Real>::grad(Var v) const {
  return nodes_[check(v)].grad;
}

template <typename Real>
std::span<Real> Tape<Real>::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad.assign(n.value().size(), Real(0));
  return n.grad;
}

template <typename Real>
std::span<const Real> Tape<Real>::node_grad(std::size_t id) const {
  return nodes_.at(id).grad;
}

template <typename Real>
const Tensor<Real>& Tape<Real>::node_value(std::size_t id) const {
  return nodes_.at(id).value();
}

template <typename Real>
bool Tape<Real>::node_requires_grad(std::size_t id) const {
  return nodes_.at(id).requires_grad;
}

template <typename Real>
void Tape<Real>::backward(Var loss) {
  if (nodes_.empty()) throw StateError("backward called before any forward pass was recorded");
  const std::size_t root = check(loss);
  if (nodes_[root].value().size() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " +
                         shape_to_string(nodes_[root].value().shape()));
  }
  if (!nodes_[root].requires_grad) return;

  for (Node& n : nodes_) n.grad.clear();
  grad_buffer(root)[0] = Real(1);

  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.param) {
      auto dst = n.param->grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace ecgvae::nn
