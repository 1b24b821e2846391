#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdagan/errors.hpp"

namespace sdagan {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

template <typename T>
class Tape;

/// Dense row-major tensor. Values are immutable once created; copies share
/// the underlying buffer. A tensor created by an operation on tracked inputs
/// carries the id of the tape node that produced it.
template <typename T>
class Tensor {
 public:
  static constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

  Tensor() : data_(std::make_shared<const std::vector<T>>()) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)) {
    if (shape_numel(shape_) != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_to_string(shape_));
    }
    for (std::size_t d : shape_) {
      if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape_));
    }
    data_ = std::make_shared<const std::vector<T>>(std::move(data));
  }

  static Tensor zeros(Shape shape) { return full(std::move(shape), T(0)); }

  static Tensor full(Shape shape, T value) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value));
  }

  static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_->size(); }
  bool empty() const noexcept { return data_->empty(); }

  std::span<const T> data() const noexcept { return {data_->data(), data_->size()}; }
  const std::vector<T>& vec() const noexcept { return *data_; }
  T operator[](std::size_t i) const { return (*data_)[i]; }

  T item() const {
    if (numel() != 1) throw ArgumentError("item() requires a single-element tensor, got shape " + shape_to_string(shape_));
    return (*data_)[0];
  }

  bool tracked() const noexcept { return tape_ != nullptr; }
  Tape<T>* tape() const noexcept { return tape_; }
  std::size_t node() const noexcept { return node_; }

  /// Same values, not linked to any tape.
  Tensor detach() const {
    Tensor out = *this;
    out.tape_ = nullptr;
    out.node_ = kNoNode;
    return out;
  }

  /// Element-type conversion of the values (never tracked).
  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_->begin(), data_->end()));
  }

 private:
  friend class Tape<T>;

  Shape shape_;
  std::shared_ptr<const std::vector<T>> data_;
  Tape<T>* tape_ = nullptr;
  std::size_t node_ = kNoNode;
};

/// Accumulated gradients after a backward pass, indexed by tape node.
template <typename T>
class Gradients {
 public:
  Gradients(const Tape<T>* tape, std::vector<std::vector<T>> grads) : tape_(tape), grads_(std::move(grads)) {}

  /// Gradient with respect to `t`; zeros when `t` did not influence the loss.
  Tensor<T> of(const Tensor<T>& t) const {
    if (!t.tracked() || t.tape() != tape_) {
      throw ArgumentError("gradient requested for a tensor that is not on this tape");
    }
    const auto& g = grads_[t.node()];
    if (g.empty()) return Tensor<T>::zeros(t.shape());
    return Tensor<T>(t.shape(), g);
  }

  bool has(const Tensor<T>& t) const {
    return t.tracked() && t.tape() == tape_ && !grads_[t.node()].empty();
  }

 private:
  const Tape<T>* tape_;
  std::vector<std::vector<T>> grads_;
};

/// Handed to a node's backward rule; gives lazily zero-initialised gradient
/// buffers for each of the node's inputs.
template <typename T>
class GradSink {
 public:
  GradSink(std::vector<std::vector<T>>& grads, const std::vector<std::size_t>& inputs,
           const std::vector<std::size_t>& sizes)
      : grads_(grads), inputs_(inputs), sizes_(sizes) {}

  bool wants(std::size_t k) const { return inputs_[k] != Tensor<T>::kNoNode; }

  std::span<T> grad(std::size_t k) {
    auto& g = grads_[inputs_[k]];
    if (g.empty()) g.assign(sizes_[k], T(0));
    return {g.data(), g.size()};
  }

 private:
  std::vector<std::vector<T>>& grads_;
  const std::vector<std::size_t>& inputs_;
  const std::vector<std::size_t>& sizes_;
};

/// Append-only record of operations for reverse-mode differentiation.
/// Tracked tensors keep a raw pointer to their tape, so the tape must outlive
/// every tensor recorded on it.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const T> grad_out, GradSink<T>& sink)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a leaf whose gradient is wanted.
  Tensor<T> variable(const Tensor<T>& value) {
    Tensor<T> out = value.detach();
    out.tape_ = this;
    out.node_ = nodes_.size();
    nodes_.push_back(Node{"leaf", {}, {}, out.numel(), nullptr});
    return out;
  }

  /// Records an operation. Returns an untracked tensor when no input is
  /// tracked, so the same code path serves plain evaluation.
  static Tensor<T> record(const char* op, Tensor<T> result, std::initializer_list<const Tensor<T>*> inputs,
                          BackwardFn backward) {
    Tape* tape = nullptr;
    for (const Tensor<T>* in : inputs) {
      if (!in->tracked()) continue;
      if (tape != nullptr && tape != in->tape()) {
        throw ArgumentError(std::string("operation '") + op + "' mixes tensors from different tapes");
      }
      tape = in->tape();
    }
    if (tape == nullptr) return result;
    Node node{op, {}, {}, result.numel(), std::move(backward)};
    for (const Tensor<T>* in : inputs) {
      node.inputs.push_back(in->tracked() ? in->node() : Tensor<T>::kNoNode);
      node.input_sizes.push_back(in->numel());
    }
    result.tape_ = tape;
    result.node_ = tape->nodes_.size();
    tape->nodes_.push_back(std::move(node));
    return result;
  }

  /// Reverse sweep seeded with 1 at `loss`. Visits each node once, in
  /// reverse insertion order; contributions to shared inputs add up.
  Gradients<T> backward(const Tensor<T>& loss) const {
    if (loss.numel() != 1) {
      throw ArgumentError("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
    }
    if (!loss.tracked() || loss.tape() != this) {
      throw ArgumentError("backward: loss was not produced on this tape");
    }
    std::vector<std::vector<T>> grads(nodes_.size());
    grads[loss.node()].assign(1, T(1));
    for (std::size_t id = loss.node() + 1; id-- > 0;) {
      const Node& node = nodes_[id];
      if (grads[id].empty() || !node.backward) continue;
      GradSink<T> sink(grads, node.inputs, node.input_sizes);
      // Inputs always precede their consumer, so gout never aliases a sink buffer.
      const std::vector<T>& gout = grads[id];
      node.backward(std::span<const T>(gout.data(), gout.size()), sink);
    }
    return Gradients<T>(this, std::move(grads));
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const char* op_name(std::size_t id) const { return nodes_.at(id).op; }

 private:
  struct Node {
    const char* op;
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> input_sizes;
    std::size_t size;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

}  // namespace sdagan
