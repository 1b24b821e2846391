#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "sdagan/tensor.hpp"

namespace sdagan {

/// History of generated images fed to the discriminator. Until `capacity`
/// images are stored every query is inserted and returned; afterwards a query
/// returns its input with probability 0.5 and otherwise swaps it with a
/// uniformly chosen stored image.
class ImagePool {
 public:
  ImagePool(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {}

  Tensor<float> query(const Tensor<float>& image) {
    Tensor<float> img = image.detach();
    if (capacity_ == 0) return img;
    if (images_.size() < capacity_) {
      images_.push_back(img);
      return img;
    }
    // 53-bit uniform draw so the decision does not depend on the library's
    // distribution implementation.
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < 0.5) return img;
    std::size_t k = static_cast<std::size_t>(rng_() % images_.size());
    Tensor<float> old = images_[k];
    images_[k] = img;
    return old;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return images_.size(); }
  const std::vector<Tensor<float>>& images() const { return images_; }
  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }

  /// Replaces the stored images (checkpoint restore).
  void restore(std::vector<Tensor<float>> images, const std::mt19937_64& rng) {
    if (images.size() > capacity_) throw ArgumentError("pool contents exceed its capacity");
    images_ = std::move(images);
    rng_ = rng;
  }

 private:
  std::size_t capacity_;
  std::mt19937_64 rng_;
  std::vector<Tensor<float>> images_;
};

}  // namespace sdagan
