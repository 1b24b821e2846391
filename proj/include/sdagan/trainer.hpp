#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdagan/adam.hpp"
#include "sdagan/image_pool.hpp"
#include "sdagan/losses.hpp"
#include "sdagan/networks.hpp"

namespace sdagan {

struct TrainConfig {
  std::uint64_t seed = 0;
  std::uint64_t iterations = 1000;
  std::size_t image_size = 64;
  GeneratorConfig generator;
  std::size_t disc_base_width = 16;
  LossWeights losses;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  /// Iteration after which the learning rate decays linearly towards 0;
  /// unset means iterations / 2.
  std::optional<std::uint64_t> decay_start;
  std::size_t pool_size = 50;
  /// Write a checkpoint every this many iterations (0: only the final one).
  std::uint64_t checkpoint_interval = 0;

  /// Throws ArgumentError on an invalid configuration.
  void validate() const;
  /// lr multiplier for the 0-based iteration i: 1 up to decay_start, then
  /// 1 - (i - decay_start) / (iterations - decay_start + 1).
  double lr_factor(std::uint64_t i) const;
};

/// Scalar losses of one iteration.
struct LossReport {
  std::uint64_t iteration = 0;
  double adv_g_ab = 0;  // generator adversarial term against D_B
  double adv_g_ba = 0;  // against D_A
  double cycle = 0;
  double identity = 0;
  double total_g = 0;
  double d_a = 0;
  double d_b = 0;

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

/// Everything a checkpoint holds. gen_ab maps A to B (G), gen_ba maps B to A
/// (H); disc_a judges domain A, disc_b domain B.
struct TrainState {
  std::uint64_t iteration = 0;  // completed iterations
  std::size_t image_size = 64;
  GeneratorParams<float> gen_ab;
  GeneratorParams<float> gen_ba;
  DiscriminatorParams<float> disc_a;
  DiscriminatorParams<float> disc_b;
  AdamState<float> adam_gen_ab;
  AdamState<float> adam_gen_ba;
  AdamState<float> adam_disc_a;
  AdamState<float> adam_disc_b;
  ImagePool pool_a{50, 0};
  ImagePool pool_b{50, 0};
};

/// Fresh networks, optimisers and pools. All seeds derive from cfg.seed.
TrainState init_train_state(const TrainConfig& cfg);

/// Shared phases of the four distinct generator inputs of one objective
/// evaluation (x, y, G(x), H(y)).
struct PhasePins {
  std::shared_ptr<const std::vector<double>> x;
  std::shared_ptr<const std::vector<double>> y;
  std::shared_ptr<const std::vector<double>> fake_b;
  std::shared_ptr<const std::vector<double>> fake_a;
};

/// Generator objective terms for one (x, y) pair.
template <typename T>
struct GeneratorLosses {
  PhasePins phases;  // the phases that were used
  Tensor<T> adv_ab;
  Tensor<T> adv_ba;
  Tensor<T> cycle;
  Tensor<T> identity;
  Tensor<T> total;
  Tensor<T> fake_b;  // G(x)
  Tensor<T> fake_a;  // H(y)
};

/// Full cycle: G(x), H(G(x)), H(y), G(H(y)), identity H(x), G(y), both
/// discriminators on the fakes. `disc_upsample` > 1 enlarges the fakes
/// (nearest) before the discriminators; used for images too small for the
/// PatchGAN stack. `pins`, when given, replaces each input's phase (see
/// ForwardOptions::shared_phase).
template <typename T>
GeneratorLosses<T> generator_objective(const GeneratorConfig& g_cfg, const ParamStore<T>& g_ab,
                                       const GeneratorConfig& h_cfg, const ParamStore<T>& g_ba,
                                       const ParamStore<T>& d_a, const ParamStore<T>& d_b, const Tensor<T>& x,
                                       const Tensor<T>& y, const LossWeights& weights, std::size_t disc_upsample = 1,
                                       const PhasePins* pins = nullptr);

/// Substep 1: both generators take one Adam step on the total generator
/// loss; discriminator parameters are not touched. Fills the generator
/// fields of `report` and returns the detached fakes (fake_b, fake_a).
std::pair<Tensor<float>, Tensor<float>> generator_step(TrainState& s, const TrainConfig& cfg, const Tensor<float>& x,
                                                       const Tensor<float>& y, LossReport& report);

/// Substep 2: D_B on (y, pool_b(fake_b)) and D_A on (x, pool_a(fake_a)).
void discriminator_step(TrainState& s, const TrainConfig& cfg, const Tensor<float>& x, const Tensor<float>& y,
                        const Tensor<float>& fake_b, const Tensor<float>& fake_a, LossReport& report);

/// One full iteration at index s.iteration; increments it. Throws
/// DivergenceError on any non-finite loss.
LossReport train_iteration(TrainState& s, const TrainConfig& cfg, const Tensor<float>& x, const Tensor<float>& y);

struct TrainResult {
  TrainState state;
  std::vector<LossReport> history;
};

struct TrainLoopOptions {
  /// Where checkpoints (checkpoint_<iter>.sdag, final.sdag) go; empty: none.
  std::filesystem::path checkpoint_dir;
  /// Continue from this state instead of a fresh initialisation.
  const TrainState* resume = nullptr;
  /// Called after every iteration.
  std::function<void(const LossReport&)> on_iteration;
};

/// Runs iterations s.iteration .. cfg.iterations - 1. Pair k of the seeded
/// unpaired stream is used at iteration k, so a resumed run sees the same data.
TrainResult train_loop(const TrainConfig& cfg, const std::vector<Tensor<float>>& domain_a,
                       const std::vector<Tensor<float>>& domain_b, const TrainLoopOptions& options = {});

inline constexpr const char* kLossCsvHeader = "iteration,adv_g_ab,adv_g_ba,cycle,identity,total_g,d_a,d_b";
std::string loss_csv_row(const LossReport& r);
std::string loss_csv(const std::vector<LossReport>& history);

// Checkpoint file: "SDAG", u32 version, u64 tensor count, per tensor
// (u32 name length, name, u32 rank, u64 dims, f32 data); u64 RNG stream
// count, per stream (u64 word count, words); u64 counter count, counters;
// u32 CRC32 of all preceding bytes. Integers and floats are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const TrainState& s);
TrainState deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const TrainState& s, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace sdagan
