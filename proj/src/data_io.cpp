#include "sdagan/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

namespace sdagan {
namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments up to the next token.
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint(const char* what) {
    skip_separators();
    std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 24)) throw ParseError(ParseError::Kind::bad_header, start, std::string(what) + " too large");
      ++pos_;
    }
    if (pos_ == start) throw ParseError(ParseError::Kind::bad_header, start, std::string("expected ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t round_byte(double v) {
  v = std::clamp(v, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

}  // namespace

ImageRecord load_ppm(std::span<const std::uint8_t> bytes, std::string source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw ParseError(ParseError::Kind::unsupported_magic, 0, "unsupported magic (expected P6)");
  }
  HeaderReader r(bytes.subspan(0));
  r.advance();
  r.advance();
  if (!r.at_end() && !is_space(r.peek()) && r.peek() != '#') {
    throw ParseError(ParseError::Kind::unsupported_magic, 2, "unsupported magic (expected P6)");
  }
  std::size_t width = r.read_uint("width");
  std::size_t height = r.read_uint("height");
  if (width == 0 || height == 0) throw ParseError(ParseError::Kind::bad_header, r.pos(), "image dimensions must be positive");
  std::size_t maxval_at = (r.skip_separators(), r.pos());
  std::size_t maxval = r.read_uint("maxval");
  if (maxval != 255) {
    throw ParseError(ParseError::Kind::unsupported_maxval, maxval_at,
                     "unsupported maxval " + std::to_string(maxval) + " (expected 255)");
  }
  // Exactly one whitespace byte separates the header from the payload.
  if (r.at_end() || !is_space(r.peek())) {
    throw ParseError(ParseError::Kind::bad_header, r.pos(), "missing whitespace after maxval");
  }
  r.advance();
  std::size_t need = 3 * width * height;
  std::size_t have = bytes.size() - r.pos();
  if (have < need) {
    throw ParseError(ParseError::Kind::short_payload, bytes.size(),
                     "short pixel payload: expected " + std::to_string(need) + " bytes, got " + std::to_string(have));
  }
  ImageRecord img;
  img.width = width;
  img.height = height;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos()),
                    bytes.begin() + static_cast<std::ptrdiff_t>(r.pos() + need));
  img.source = std::move(source);
  return img;
}

std::vector<std::uint8_t> save_ppm(const ImageRecord& image) {
  if (image.pixels.size() != 3 * image.width * image.height) {
    throw DimensionError("image pixel buffer does not match " + std::to_string(image.width) + "x" +
                         std::to_string(image.height));
  }
  std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ImageRecord read_ppm(const std::filesystem::path& path) { return load_ppm(read_file(path), path.string()); }

void write_ppm(const std::filesystem::path& path, const ImageRecord& image) { write_file(path, save_ppm(image)); }

ImageRecord resize_bilinear(const ImageRecord& image, std::size_t target) {
  if (target == 0) throw ArgumentError("resize target must be >= 1");
  if (image.width == target && image.height == target) return image;
  ImageRecord out;
  out.width = target;
  out.height = target;
  out.source = image.source;
  out.pixels.resize(3 * target * target);

  // Source coordinate of an output pixel centre, clamped to the valid range.
  auto axis = [target](std::size_t i, std::size_t src, std::size_t& lo, std::size_t& hi, double& frac) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(target) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    lo = static_cast<std::size_t>(std::floor(s));
    hi = std::min(lo + 1, src - 1);
    frac = s - static_cast<double>(lo);
  };

  for (std::size_t y = 0; y < target; ++y) {
    std::size_t y0, y1;
    double fy;
    axis(y, image.height, y0, y1, fy);
    for (std::size_t x = 0; x < target; ++x) {
      std::size_t x0, x1;
      double fx;
      axis(x, image.width, x0, x1, fx);
      for (std::size_t c = 0; c < 3; ++c) {
        double top = image.at(x0, y0, c) * (1 - fx) + image.at(x1, y0, c) * fx;
        double bottom = image.at(x0, y1, c) * (1 - fx) + image.at(x1, y1, c) * fx;
        out.pixels[(y * target + x) * 3 + c] = round_byte(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

Tensor<float> normalize(const ImageRecord& image) {
  const std::size_t hw = image.width * image.height;
  std::vector<float> v(3 * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      v[c * hw + p] = static_cast<float>(image.pixels[p * 3 + c] / 127.5 - 1.0);
    }
  }
  return Tensor<float>({3, image.height, image.width}, std::move(v));
}

ImageRecord denormalize(const Tensor<float>& tensor) {
  if (tensor.rank() != 3 || tensor.dim(0) != 3) {
    throw DimensionError("denormalize expects a 3xHxW tensor, got " + shape_to_string(tensor.shape()));
  }
  ImageRecord img;
  img.height = tensor.dim(1);
  img.width = tensor.dim(2);
  const std::size_t hw = img.width * img.height;
  img.pixels.resize(3 * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      double v = std::clamp(static_cast<double>(tensor[c * hw + p]), -1.0, 1.0);
      img.pixels[p * 3 + c] = round_byte((v + 1.0) * 127.5);
    }
  }
  return img;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("'" + dir.string() + "' is not a readable directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

UnpairedStream::UnpairedStream(std::size_t size_a, std::size_t size_b, std::uint64_t seed)
    : size_a_(size_a), size_b_(size_b), seed_(seed) {
  if (size_a == 0 || size_b == 0) throw ArgumentError("unpaired stream needs two non-empty domains");
}

std::vector<std::size_t> UnpairedStream::permutation(int domain, std::uint64_t epoch) const {
  std::size_t n = domain == 0 ? size_a_ : size_b_;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32),
                    static_cast<std::uint32_t>(domain)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates written out: std::shuffle's draw pattern is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::pair<std::size_t, std::size_t> UnpairedStream::pair(std::uint64_t k) const {
  const std::uint64_t len = epoch_length();
  const std::uint64_t epoch = k / len;
  const std::uint64_t slot = k % len;
  // The shorter domain wraps within the epoch; each wrap gets a fresh shuffle.
  auto pick = [&](int domain, std::size_t n) {
    std::uint64_t sub = slot / n;
    return permutation(domain, epoch * len + sub)[slot % n];
  };
  return {pick(0, size_a_), pick(1, size_b_)};
}

std::vector<Tensor<float>> load_domain(const std::filesystem::path& dir, std::size_t target_size,
                                       std::vector<std::string>* names) {
  auto files = list_images(dir);
  if (files.empty()) throw ArgumentError("no .ppm images found in '" + dir.string() + "'");
  std::vector<Tensor<float>> out;
  for (const auto& f : files) {
    out.push_back(normalize(resize_bilinear(read_ppm(f), target_size)));
    if (names) names->push_back(f.filename().string());
  }
  return out;
}

UnpairedDataset load_dataset(const DatasetSpec& spec) {
  UnpairedDataset d;
  d.images_a = load_domain(spec.dir_a, spec.target_size, &d.names_a);
  d.images_b = load_domain(spec.dir_b, spec.target_size, &d.names_b);
  return d;
}

DatasetIterator dataset_iter(const DatasetSpec& spec) {
  UnpairedDataset d = load_dataset(spec);
  UnpairedStream s(d.images_a.size(), d.images_b.size(), spec.seed);
  return {std::move(d), s};
}

}  // namespace sdagan
