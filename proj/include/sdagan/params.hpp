#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sdagan/tensor.hpp"

namespace sdagan {

/// Ordered collection of named parameter tensors.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    bool trainable = true;
  };

  void add(std::string name, Tensor<T> value, bool trainable = true) {
    if (index_.count(name)) throw ArgumentError("duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value), trainable});
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Tensor<T>& get(const std::string& name) const { return entries_[index_of(name)].value; }

  void set(const std::string& name, Tensor<T> value) {
    Entry& e = entries_[index_of(name)];
    if (value.shape() != e.value.shape()) {
      throw DimensionError("parameter '" + name + "' has shape " + shape_to_string(e.value.shape()) + ", got " +
                           shape_to_string(value.shape()));
    }
    e.value = std::move(value);
  }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
    return it->second;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Total number of scalar parameters.
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  /// Copy whose trainable entries are leaves on `tape`; the rest stay constant.
  ParamStore bind(Tape<T>& tape) const {
    ParamStore out = *this;
    for (auto& e : out.entries_) {
      if (e.trainable) e.value = tape.variable(e.value);
    }
    return out;
  }

  /// Copy with every entry detached (used to treat a network as frozen).
  ParamStore frozen() const {
    ParamStore out = *this;
    for (auto& e : out.entries_) e.value = e.value.detach();
    return out;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>(), e.trainable);
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      const auto& x = a.entries_[i];
      const auto& y = b.entries_[i];
      if (x.name != y.name || x.trainable != y.trainable || x.value.shape() != y.value.shape() ||
          x.value.vec() != y.value.vec()) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sdagan
