#include <zlib.h>

#include <algorithm>
#include <bit>
#include <map>
#include <cstring>
#include <sstream>

#include "sdagan/data_io.hpp"
#include "sdagan/trainer.hpp"

namespace sdagan {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'D', 'A', 'G'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(U));
  }

  void tensor(const std::string& name, const Tensor<float>& t) {
    put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    bytes.insert(bytes.end(), name.begin(), name.end());
    put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(d);
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data().data());
    bytes.insert(bytes.end(), p, p + t.numel() * sizeof(float));
  }

  std::vector<std::uint8_t> bytes;
};

// Thrown internally when the parser runs out of input.
struct OutOfBytes {};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, b_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::vector<float> floats(std::size_t n) {
    if (n > remaining() / sizeof(float)) throw OutOfBytes{};
    std::vector<float> v(n);
    std::memcpy(v.data(), b_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return v;
  }

  std::size_t remaining() const { return b_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw OutOfBytes{};
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::span<const std::uint8_t> bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; checkpoints stay far below 4 GiB but feed in chunks anyway.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    c = crc32(c, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

std::vector<std::uint64_t> rng_words(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  std::istringstream is(os.str());
  std::vector<std::uint64_t> words;
  std::uint64_t w;
  while (is >> w) words.push_back(w);
  return words;
}

std::mt19937_64 rng_from_words(const std::vector<std::uint64_t>& words) {
  std::ostringstream os;
  for (std::size_t i = 0; i < words.size(); ++i) os << (i ? " " : "") << words[i];
  std::istringstream is(os.str());
  std::mt19937_64 rng;
  is >> rng;
  if (is.fail()) throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint RNG state is invalid");
  return rng;
}

enum Counter : std::size_t {
  kIteration,
  kImageSize,
  kN,
  kGenWidth,
  kArch,
  kLearnableLambdas,
  kDiscWidth,
  kAdamGenAb,
  kAdamGenBa,
  kAdamDiscA,
  kAdamDiscB,
  kPoolCapacity,
  kCounterCount
};

struct Named {
  std::string name;
  Tensor<float> value;
};

template <typename T>
void append_params(std::vector<Named>& out, const std::string& prefix, const ParamStore<T>& p) {
  for (const auto& e : p.entries()) out.push_back({prefix + "/" + e.name, e.value});
}

void append_adam(std::vector<Named>& out, const std::string& net, const ParamStore<float>& p,
                 const AdamState<float>& st) {
  const auto& entries = p.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!entries[k].trainable) continue;
    out.push_back({"adam." + net + ".m/" + entries[k].name, Tensor<float>(entries[k].value.shape(), st.m[k])});
    out.push_back({"adam." + net + ".v/" + entries[k].name, Tensor<float>(entries[k].value.shape(), st.v[k])});
  }
}

struct RawCheckpoint {
  std::vector<Named> tensors;
  std::vector<std::vector<std::uint64_t>> streams;
  std::uint64_t counters[kCounterCount] = {};
  std::size_t end = 0;
};

[[noreturn]] void corrupt(const std::string& what) { throw CheckpointError(CheckpointError::Kind::corrupt, what); }

// Parses the body; throws OutOfBytes on truncation and CheckpointError(corrupt)
// on structurally invalid content.
RawCheckpoint parse(std::span<const std::uint8_t> body) {
  Reader r(body);
  r.string(4);
  r.get<std::uint32_t>();

  std::vector<Named> tensors;
  const std::uint64_t n_tensors = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    const std::uint32_t len = r.get<std::uint32_t>();
    std::string name = r.string(len);
    const std::uint32_t rank = r.get<std::uint32_t>();
    if (rank > 8) corrupt("tensor '" + name + "' has implausible rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = r.get<std::uint64_t>();
      if (d == 0 || d > (1ull << 32)) corrupt("tensor '" + name + "' has an invalid dimension");
      if (numel > (std::size_t(1) << 40) / d) throw OutOfBytes{};
      numel *= d;
    }
    tensors.push_back({std::move(name), Tensor<float>(std::move(shape), r.floats(numel))});
  }

  RawCheckpoint raw;
  raw.tensors = std::move(tensors);
  const std::uint64_t n_streams = r.get<std::uint64_t>();
  if (n_streams != 2) corrupt("expected 2 RNG streams, found " + std::to_string(n_streams));
  for (std::uint64_t i = 0; i < n_streams; ++i) {
    const std::uint64_t words = r.get<std::uint64_t>();
    if (words > r.remaining() / 8) throw OutOfBytes{};
    std::vector<std::uint64_t> v(words);
    for (auto& x : v) x = r.get<std::uint64_t>();
    raw.streams.push_back(std::move(v));
  }
  const std::uint64_t n_counters = r.get<std::uint64_t>();
  if (n_counters != kCounterCount) corrupt("unexpected counter count " + std::to_string(n_counters));
  for (auto& c : raw.counters) c = r.get<std::uint64_t>();
  raw.end = r.pos();
  return raw;
}

// Copies every named tensor of `prefix` into `p`, which must already hold
// the expected layout.
void fill_params(std::map<std::string, Tensor<float>>& table, const std::string& prefix, ParamStore<float>& p) {
  for (auto& e : p.entries()) {
    auto it = table.find(prefix + "/" + e.name);
    if (it == table.end()) corrupt("checkpoint lacks tensor '" + prefix + "/" + e.name + "'");
    if (it->second.shape() != e.value.shape()) corrupt("tensor '" + it->first + "' has the wrong shape");
    e.value = it->second;
    table.erase(it);
  }
}

void fill_adam(std::map<std::string, Tensor<float>>& table, const std::string& net, const ParamStore<float>& p,
               AdamState<float>& st, std::uint64_t step) {
  st = AdamState<float>::for_params(p);
  st.step = step;
  const auto& entries = p.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!entries[k].trainable) continue;
    for (int which = 0; which < 2; ++which) {
      const std::string key = "adam." + net + (which ? ".v/" : ".m/") + entries[k].name;
      auto it = table.find(key);
      if (it == table.end()) corrupt("checkpoint lacks tensor '" + key + "'");
      if (it->second.shape() != entries[k].value.shape()) corrupt("tensor '" + key + "' has the wrong shape");
      (which ? st.v[k] : st.m[k]) = it->second.vec();
      table.erase(it);
    }
  }
}

std::vector<Tensor<float>> take_pool(std::map<std::string, Tensor<float>>& table, const std::string& prefix,
                                     std::size_t capacity) {
  std::vector<Tensor<float>> images;
  for (std::size_t k = 0;; ++k) {
    auto it = table.find(prefix + "/" + std::to_string(k));
    if (it == table.end()) break;
    images.push_back(it->second);
    table.erase(it);
  }
  if (images.size() > capacity) corrupt(prefix + " holds more images than its capacity");
  return images;
}

TrainState build(RawCheckpoint raw) {
  const auto& c = raw.counters;
  if (c[kArch] > 2 || c[kLearnableLambdas] > 1 || c[kN] < 2 || c[kGenWidth] < 4 || c[kDiscWidth] < 1 ||
      c[kN] > 64 || c[kGenWidth] > 4096 || c[kDiscWidth] > 4096) {
    corrupt("checkpoint counters describe an invalid network");
  }
  GeneratorConfig g;
  g.n = c[kN];
  g.base_width = c[kGenWidth];
  g.arch = static_cast<GeneratorArch>(c[kArch]);
  g.learnable_lambdas = c[kLearnableLambdas] == 1;

  std::map<std::string, Tensor<float>> table;
  for (auto& t : raw.tensors) {
    if (!table.emplace(t.name, t.value).second) corrupt("duplicate tensor '" + t.name + "'");
  }

  TrainState s;
  s.iteration = c[kIteration];
  s.image_size = c[kImageSize];
  // The layout (names, shapes, trainable flags) comes from a fresh init.
  s.gen_ab = init_generator(0, g);
  s.gen_ba = init_generator(0, g);
  s.disc_a = init_discriminator(0, c[kDiscWidth]);
  s.disc_b = init_discriminator(0, c[kDiscWidth]);
  fill_params(table, "gen_ab", s.gen_ab.weights);
  fill_params(table, "gen_ba", s.gen_ba.weights);
  fill_params(table, "disc_a", s.disc_a.weights);
  fill_params(table, "disc_b", s.disc_b.weights);
  fill_adam(table, "gen_ab", s.gen_ab.weights, s.adam_gen_ab, c[kAdamGenAb]);
  fill_adam(table, "gen_ba", s.gen_ba.weights, s.adam_gen_ba, c[kAdamGenBa]);
  fill_adam(table, "disc_a", s.disc_a.weights, s.adam_disc_a, c[kAdamDiscA]);
  fill_adam(table, "disc_b", s.disc_b.weights, s.adam_disc_b, c[kAdamDiscB]);
  s.pool_a = ImagePool(c[kPoolCapacity], 0);
  s.pool_b = ImagePool(c[kPoolCapacity], 0);
  s.pool_a.restore(take_pool(table, "pool_a", c[kPoolCapacity]), rng_from_words(raw.streams[0]));
  s.pool_b.restore(take_pool(table, "pool_b", c[kPoolCapacity]), rng_from_words(raw.streams[1]));
  if (!table.empty()) corrupt("unexpected tensor '" + table.begin()->first + "'");
  return s;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const TrainState& s) {
  std::vector<Named> tensors;
  append_params(tensors, "gen_ab", s.gen_ab.weights);
  append_params(tensors, "gen_ba", s.gen_ba.weights);
  append_params(tensors, "disc_a", s.disc_a.weights);
  append_params(tensors, "disc_b", s.disc_b.weights);
  append_adam(tensors, "gen_ab", s.gen_ab.weights, s.adam_gen_ab);
  append_adam(tensors, "gen_ba", s.gen_ba.weights, s.adam_gen_ba);
  append_adam(tensors, "disc_a", s.disc_a.weights, s.adam_disc_a);
  append_adam(tensors, "disc_b", s.disc_b.weights, s.adam_disc_b);
  for (std::size_t k = 0; k < s.pool_a.size(); ++k) tensors.push_back({"pool_a/" + std::to_string(k), s.pool_a.images()[k]});
  for (std::size_t k = 0; k < s.pool_b.size(); ++k) tensors.push_back({"pool_b/" + std::to_string(k), s.pool_b.images()[k]});

  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(tensors.size());
  for (const auto& t : tensors) w.tensor(t.name, t.value);

  const std::vector<std::uint64_t> streams[2] = {rng_words(s.pool_a.rng()), rng_words(s.pool_b.rng())};
  w.put<std::uint64_t>(2);
  for (const auto& words : streams) {
    w.put<std::uint64_t>(words.size());
    for (auto x : words) w.put<std::uint64_t>(x);
  }

  std::uint64_t counters[kCounterCount] = {};
  counters[kIteration] = s.iteration;
  counters[kImageSize] = s.image_size;
  counters[kN] = s.gen_ab.config.n;
  counters[kGenWidth] = s.gen_ab.config.base_width;
  counters[kArch] = static_cast<std::uint64_t>(s.gen_ab.config.arch);
  counters[kLearnableLambdas] = s.gen_ab.config.learnable_lambdas ? 1 : 0;
  counters[kDiscWidth] = s.disc_a.base_width;
  counters[kAdamGenAb] = s.adam_gen_ab.step;
  counters[kAdamGenBa] = s.adam_gen_ba.step;
  counters[kAdamDiscA] = s.adam_disc_a.step;
  counters[kAdamDiscB] = s.adam_disc_b.step;
  counters[kPoolCapacity] = s.pool_a.capacity();
  w.put<std::uint64_t>(kCounterCount);
  for (auto c : counters) w.put<std::uint64_t>(c);

  w.put<std::uint32_t>(crc(w.bytes));
  return w.bytes;
}

}  // namespace sdagan

namespace sdagan {

TrainState deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  using Kind = CheckpointError::Kind;
  const std::size_t head = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, head) != 0) throw CheckpointError(Kind::bad_magic, "not a checkpoint file (bad magic)");
  if (bytes.size() < 8) throw CheckpointError(Kind::truncated, "checkpoint is truncated");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::version_mismatch, "checkpoint version " + std::to_string(version) +
                                                      " is not supported (expected " +
                                                      std::to_string(kCheckpointVersion) + ")");
  }
  // Walk the structure first so a short file reports truncation rather than
  // a checksum mismatch.
  RawCheckpoint raw;
  try {
    raw = parse(bytes);
  } catch (const OutOfBytes&) {
    throw CheckpointError(Kind::truncated, "checkpoint is truncated");
  }
  if (bytes.size() - raw.end < 4) throw CheckpointError(Kind::truncated, "checkpoint is truncated (missing checksum)");
  if (bytes.size() - raw.end > 4) throw CheckpointError(Kind::corrupt, "checkpoint has trailing bytes");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + raw.end, 4);
  if (stored != crc(bytes.subspan(0, raw.end))) throw CheckpointError(Kind::corrupt, "checkpoint checksum mismatch");
  return build(std::move(raw));
}

void save_checkpoint(const TrainState& s, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(s));
}

TrainState load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace sdagan
