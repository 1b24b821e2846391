#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdagan/tensor.hpp"

namespace sdagan {

/// 8-bit RGB image, row-major, interleaved.
struct ImageRecord {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height
  std::string source;

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

  friend bool operator==(const ImageRecord& a, const ImageRecord& b) {
    return a.width == b.width && a.height == b.height && a.pixels == b.pixels;
  }
};

/// Binary P6 PPM with maxval 255; '#' comments are accepted in the header.
/// Every malformed input raises ParseError carrying the failing byte offset.
ImageRecord load_ppm(std::span<const std::uint8_t> bytes, std::string source = {});
/// Canonical header "P6\n<w> <h>\n255\n" followed by the pixels.
std::vector<std::uint8_t> save_ppm(const ImageRecord& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

ImageRecord read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageRecord& image);

/// Bilinear resampling to target x target with half-pixel centres
/// (align_corners = false), rounding half up.
ImageRecord resize_bilinear(const ImageRecord& image, std::size_t target);

/// 3 x H x W tensor with v / 127.5 - 1.
Tensor<float> normalize(const ImageRecord& image);
/// Inverse of normalize: clamp to [-1, 1], map back, round half up.
ImageRecord denormalize(const Tensor<float>& tensor);

/// Image files (.ppm) of a directory, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct DatasetSpec {
  std::filesystem::path dir_a;
  std::filesystem::path dir_b;
  std::size_t target_size = 64;
  std::uint64_t seed = 0;
};

/// Deterministic unpaired sampling. An epoch has max(|A|, |B|) pairs; each
/// domain is shuffled independently per epoch and the shorter one cycles.
class UnpairedStream {
 public:
  UnpairedStream(std::size_t size_a, std::size_t size_b, std::uint64_t seed);

  std::size_t epoch_length() const { return std::max(size_a_, size_b_); }
  /// Indices of the k-th pair of the stream (random access).
  std::pair<std::size_t, std::size_t> pair(std::uint64_t k) const;
  std::pair<std::size_t, std::size_t> next() { return pair(position_++); }
  std::uint64_t position() const { return position_; }

  /// Permutation of one domain for one epoch.
  std::vector<std::size_t> permutation(int domain, std::uint64_t epoch) const;

 private:
  std::size_t size_a_;
  std::size_t size_b_;
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
};

struct UnpairedDataset {
  std::vector<Tensor<float>> images_a;
  std::vector<Tensor<float>> images_b;
  std::vector<std::string> names_a;
  std::vector<std::string> names_b;
};

/// Loads, resizes and normalises every image of one directory.
/// An empty directory raises ArgumentError naming it.
std::vector<Tensor<float>> load_domain(const std::filesystem::path& dir, std::size_t target_size,
                                       std::vector<std::string>* names = nullptr);

UnpairedDataset load_dataset(const DatasetSpec& spec);

/// Loaded dataset plus its seeded pair stream.
struct DatasetIterator {
  UnpairedDataset data;
  UnpairedStream stream;

  std::pair<const Tensor<float>*, const Tensor<float>*> next() {
    auto [a, b] = stream.next();
    return {&data.images_a[a], &data.images_b[b]};
  }
};

DatasetIterator dataset_iter(const DatasetSpec& spec);

}  // namespace sdagan
