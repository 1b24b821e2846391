#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <vector>

#include "sdagan/data_io.hpp"
#include "sdagan/trainer.hpp"
#include "support/synthetic.hpp"

namespace sdagan {
namespace {

namespace fs = std::filesystem;

TrainConfig small_config(std::uint64_t iterations) {
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.iterations = iterations;
  cfg.image_size = 32;
  cfg.generator.n = 3;
  cfg.generator.base_width = 4;
  cfg.disc_base_width = 4;
  cfg.pool_size = 2;
  cfg.checkpoint_interval = 2;
  return cfg;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("sdagan_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                       "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    domain_a = testing::stripe_set(2, 32, 2);
    domain_b = testing::texture_set(3, 32, 2);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path dir;
  std::vector<Tensor<float>> domain_a, domain_b;
};

CheckpointError::Kind load_error(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected CheckpointError";
  return CheckpointError::Kind::corrupt;
}

TEST_F(CheckpointTest, RoundTripIsBitIdentical) {
  auto result = train_loop(small_config(3), domain_a, domain_b);
  const auto bytes = serialize_checkpoint(result.state);
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "SDAG", 4), 0);
  const TrainState loaded = deserialize_checkpoint(bytes);
  EXPECT_EQ(serialize_checkpoint(loaded), bytes);
  EXPECT_TRUE(loaded.gen_ab.weights == result.state.gen_ab.weights);
  EXPECT_TRUE(loaded.disc_b.weights == result.state.disc_b.weights);
  EXPECT_EQ(loaded.iteration, 3u);
  EXPECT_EQ(loaded.adam_gen_ba.step, result.state.adam_gen_ba.step);
  EXPECT_EQ(loaded.adam_gen_ba.m, result.state.adam_gen_ba.m);
  EXPECT_EQ(loaded.pool_a.size(), result.state.pool_a.size());
  EXPECT_TRUE(loaded.pool_b.rng() == result.state.pool_b.rng());
}

TEST_F(CheckpointTest, SaveAndLoadFile) {
  const TrainState s = init_train_state(small_config(1));
  save_checkpoint(s, dir / "x.sdag");
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(dir / "x.sdag")), serialize_checkpoint(s));
  EXPECT_THROW(load_checkpoint(dir / "missing.sdag"), IoError);
}

TEST_F(CheckpointTest, DistinctErrorKinds) {
  const auto bytes = serialize_checkpoint(init_train_state(small_config(1)));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(load_error(bad_magic), CheckpointError::Kind::bad_magic);

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_EQ(load_error(bad_version), CheckpointError::Kind::version_mismatch);

  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, std::size_t{40}, bytes.size() / 2, bytes.size() - 5}) {
    EXPECT_EQ(load_error(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<long>(cut))),
              CheckpointError::Kind::truncated)
        << "cut at " << cut;
  }

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  EXPECT_EQ(load_error(flipped), CheckpointError::Kind::corrupt);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(load_error(trailing), CheckpointError::Kind::corrupt);
}

TEST_F(CheckpointTest, IdenticalSeedsGiveIdenticalCheckpoints) {
  auto r1 = train_loop(small_config(3), domain_a, domain_b);
  auto r2 = train_loop(small_config(3), domain_a, domain_b);
  EXPECT_EQ(serialize_checkpoint(r1.state), serialize_checkpoint(r2.state));
  EXPECT_EQ(r1.history, r2.history);
  auto other = small_config(3);
  other.seed = 4;
  EXPECT_NE(serialize_checkpoint(train_loop(other, domain_a, domain_b).state), serialize_checkpoint(r1.state));
}

TEST_F(CheckpointTest, ResumeMatchesUninterruptedRun) {
  const TrainConfig cfg = small_config(5);
  TrainLoopOptions opts;
  opts.checkpoint_dir = dir;
  auto full = train_loop(cfg, domain_a, domain_b, opts);
  ASSERT_TRUE(fs::exists(dir / "checkpoint_2.sdag"));
  ASSERT_TRUE(fs::exists(dir / "checkpoint_4.sdag"));
  ASSERT_TRUE(fs::exists(dir / "final.sdag"));

  const TrainState mid = load_checkpoint(dir / "checkpoint_2.sdag");
  EXPECT_EQ(mid.iteration, 2u);
  TrainLoopOptions resume;
  resume.resume = &mid;
  auto rest = train_loop(cfg, domain_a, domain_b, resume);
  ASSERT_EQ(rest.history.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(rest.history[i], full.history[i + 2]);
  EXPECT_EQ(serialize_checkpoint(rest.state), read_file(dir / "final.sdag"));
}

TEST_F(CheckpointTest, ResumeRejectsMismatchedConfig) {
  const TrainState s = init_train_state(small_config(2));
  TrainLoopOptions resume;
  resume.resume = &s;
  auto cfg = small_config(2);
  cfg.generator.n = 4;
  EXPECT_THROW(train_loop(cfg, domain_a, domain_b, resume), ArgumentError);
}

}  // namespace
}  // namespace sdagan
