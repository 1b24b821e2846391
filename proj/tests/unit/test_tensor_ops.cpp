#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sdagan/grad_check.hpp"
#include "sdagan/ops.hpp"
#include "sdagan/tensor.hpp"
#include "support/oracles.hpp"

namespace sdagan {
namespace {

using testing::random_vector;

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  const std::size_t n = shape_numel(shape);
  return Tensor<double>(std::move(shape), random_vector(n, seed, lo, hi));
}

// f(x) = sum(w * op(x)) with fixed random weights, so every output element
// contributes a distinct amount to the scalar.
template <typename Op>
ScalarFunction weighted(Op op, const Shape& out_shape, std::uint64_t seed) {
  const Tensor<double> w = random_tensor(out_shape, seed + 777);
  return [op, w](const Tensor<double>& x) { return ops::sum(ops::mul(op(x), w)); };
}

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor<float>({2, 3}, std::vector<float>(5)), DimensionError);
  EXPECT_THROW(Tensor<float>({0, 3}, {}), DimensionError);
  Tensor<float> t({2, 3}, std::vector<float>(6, 1.0f));
  EXPECT_EQ(t.numel(), shape_numel(t.shape()));
}

TEST(Elementwise, MultiplyExample) {
  Tensor<float> a({3}, {1, 2, 3}), b({3}, {4, 5, 6});
  EXPECT_EQ(ops::mul(a, b).vec(), (std::vector<float>{4, 10, 18}));
}

TEST(Elementwise, AddZerosIsIdentity) {
  Tensor<float> t = random_tensor({2, 3, 4}, 3).cast<float>();
  EXPECT_EQ(ops::add(t, Tensor<float>::zeros(t.shape())).vec(), t.vec());
}

TEST(Elementwise, ScalarAndChannelBroadcast) {
  Tensor<float> a({1, 2, 1, 2}, {1, 2, 3, 4});
  EXPECT_EQ(ops::mul(a, Tensor<float>::scalar(2)).vec(), (std::vector<float>{2, 4, 6, 8}));
  Tensor<float> per_channel({1, 2, 1, 1}, {10, 20});
  EXPECT_EQ(ops::add(a, per_channel).vec(), (std::vector<float>{11, 12, 23, 24}));
  EXPECT_THROW(ops::add(a, Tensor<float>({3}, {1, 2, 3})), DimensionError);
}

TEST(Elementwise, MultiplyGradientMatchesFiniteDifferences) {
  const Tensor<double> b = random_tensor({3, 3}, 11);
  const Tensor<double> x = random_tensor({3, 3}, 12);
  auto f = weighted([b](const Tensor<double>& v) { return ops::mul(v, b); }, {3, 3}, 1);
  EXPECT_LT(grad_check(f, x, 1e-3), 1e-4);
}

TEST(Conv2d, IdentityKernel) {
  Tensor<float> x = random_tensor({1, 1, 4, 5}, 4).cast<float>();
  Tensor<float> k({1, 1, 1, 1}, {1.0f});
  EXPECT_EQ(ops::conv2d(x, k, Tensor<float>::zeros({1}), 1, 0).vec(), x.vec());
}

TEST(Conv2d, AllOnesSum) {
  Tensor<float> x = Tensor<float>::full({1, 1, 3, 3}, 1.0f);
  Tensor<float> k = Tensor<float>::full({1, 1, 3, 3}, 1.0f);
  Tensor<float> y = ops::conv2d(x, k, Tensor<float>::zeros({1}), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_FLOAT_EQ(y.item(), 9.0f);
}

struct ConvCase {
  std::size_t n, c, h, o, k, stride, pad;
};

class ConvOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracle, MatchesQuadrupleLoop) {
  const ConvCase p = GetParam();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto in = random_vector(p.n * p.c * p.h * p.h, 100 + seed);
    auto ker = random_vector(p.o * p.c * p.k * p.k, 200 + seed);
    auto bias = random_vector(p.o, 300 + seed);
    std::size_t oh = 0, ow = 0;
    auto expected = testing::naive_conv(in, p.n, p.c, p.h, p.h, ker, p.o, p.k, bias, p.stride, p.pad, &oh, &ow);
    Tensor<float> y = ops::conv2d(Tensor<double>({p.n, p.c, p.h, p.h}, in).cast<float>(),
                                  Tensor<double>({p.o, p.c, p.k, p.k}, ker).cast<float>(),
                                  Tensor<double>({p.o}, bias).cast<float>(), p.stride, p.pad);
    ASSERT_EQ(y.shape(), (Shape{p.n, p.o, oh, ow}));
    double err = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) err = std::max(err, std::abs(expected[i] - y[i]));
    EXPECT_LT(err, 1e-5);
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvOracle,
                         ::testing::Values(ConvCase{2, 3, 8, 4, 3, 1, 0}, ConvCase{2, 3, 8, 4, 3, 1, 1},
                                           ConvCase{1, 4, 16, 2, 4, 2, 1}, ConvCase{2, 4, 16, 3, 7, 1, 3},
                                           ConvCase{1, 2, 9, 2, 3, 2, 1}));

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  const Tensor<double> x = random_tensor({1, 2, 6, 6}, 21);
  const Tensor<double> k = random_tensor({3, 2, 3, 3}, 22);
  const Tensor<double> b = random_tensor({3}, 23);
  const Shape out{1, 3, 3, 3};
  EXPECT_LT(grad_check(weighted([&](const Tensor<double>& v) { return ops::conv2d(v, k, b, 2, 1); }, out, 1), x), 1e-4);
  EXPECT_LT(grad_check(weighted([&](const Tensor<double>& v) { return ops::conv2d(x, v, b, 2, 1); }, out, 2), k), 1e-4);
  EXPECT_LT(grad_check(weighted([&](const Tensor<double>& v) { return ops::conv2d(x, k, v, 2, 1); }, out, 3), b), 1e-4);
}

TEST(Conv2d, ChannelMismatchThrows) {
  EXPECT_THROW(ops::conv2d(Tensor<float>::zeros({1, 2, 4, 4}), Tensor<float>::zeros({1, 3, 3, 3}),
                           Tensor<float>::zeros({1}), 1, 1),
               DimensionError);
}

TEST(Upsample, Replicates) {
  Tensor<float> x({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor<float> y = ops::upsample_nearest(x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(y.vec(), (std::vector<float>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
}

TEST(Upsample, FactorOneIsIdentity) {
  Tensor<float> x = random_tensor({1, 2, 3, 3}, 5).cast<float>();
  EXPECT_EQ(ops::upsample_nearest(x, 1).vec(), x.vec());
  EXPECT_THROW(ops::upsample_nearest(x, 0), ArgumentError);
}

TEST(Upsample, Gradient) {
  const Tensor<double> x = random_tensor({1, 1, 3, 3}, 6);
  EXPECT_LT(grad_check(weighted([](const Tensor<double>& v) { return ops::upsample_nearest(v, 2); }, {1, 1, 6, 6}, 4), x),
            1e-4);
}

TEST(InstanceNorm, ConstantChannelMapsToZero) {
  Tensor<float> x = Tensor<float>::full({1, 1, 3, 3}, 4.5f);
  Tensor<float> y = ops::instance_norm(x, Tensor<float>::full({1}, 1.0f), Tensor<float>::zeros({1}));
  for (float v : y.vec()) EXPECT_EQ(v, 0.0f);
}

TEST(InstanceNorm, StandardizedChannelUnchanged) {
  Tensor<double> x({1, 1, 1, 2}, {-1.0, 1.0});
  Tensor<double> y = ops::instance_norm(x, Tensor<double>::full({1}, 1.0), Tensor<double>::zeros({1}), 1e-12);
  EXPECT_NEAR(y[0], -1.0, 1e-9);
  EXPECT_NEAR(y[1], 1.0, 1e-9);
}

TEST(InstanceNorm, Gradients) {
  const Tensor<double> x = random_tensor({1, 2, 4, 4}, 7);
  const Tensor<double> g = random_tensor({2}, 8, 0.5, 1.5);
  const Tensor<double> b = random_tensor({2}, 9);
  const Shape out{1, 2, 4, 4};
  EXPECT_LT(grad_check(weighted([&](const Tensor<double>& v) { return ops::instance_norm(v, g, b); }, out, 5), x), 1e-4);
  EXPECT_LT(grad_check(weighted([&](const Tensor<double>& v) { return ops::instance_norm(x, v, b); }, out, 6), g), 1e-4);
  EXPECT_LT(grad_check(weighted([&](const Tensor<double>& v) { return ops::instance_norm(x, g, v); }, out, 7), b), 1e-4);
}

TEST(Activation, ClosedForms) {
  Tensor<float> z = Tensor<float>::scalar(0.0f);
  EXPECT_EQ(ops::activation(ops::Activation::tanh, z).item(), 0.0f);
  EXPECT_EQ(ops::activation(ops::Activation::sigmoid, z).item(), 0.5f);
  EXPECT_FLOAT_EQ(ops::activation(ops::Activation::leaky_relu, Tensor<float>::scalar(-1.0f)).item(), -0.2f);
  EXPECT_EQ(ops::activation(ops::Activation::relu, Tensor<float>::scalar(-3.0f)).item(), 0.0f);
}

TEST(Activation, GradientsAwayFromKinks) {
  // Inputs kept out of the +-1e-3 band around 0 for the piecewise kinds.
  std::vector<double> v = random_vector(25, 10, -2.0, 2.0);
  for (double& x : v) {
    if (std::abs(x) < 1e-3) x = 0.5;
  }
  const Tensor<double> x({5, 5}, v);
  for (auto kind : {ops::Activation::relu, ops::Activation::leaky_relu, ops::Activation::tanh, ops::Activation::sigmoid}) {
    auto f = weighted([kind](const Tensor<double>& t) { return ops::activation(kind, t); }, {5, 5}, 8);
    EXPECT_LT(grad_check(f, x, 1e-4), 1e-4) << "kind " << static_cast<int>(kind);
  }
}

TEST(Softmax, UniformLogits) {
  Tensor<float> y = ops::softmax_channels(Tensor<float>::zeros({1, 4, 1, 1}));
  for (float v : y.vec()) EXPECT_FLOAT_EQ(v, 0.25f);
}

TEST(Softmax, ClosedForm) {
  Tensor<double> y = ops::softmax_channels(Tensor<double>({1, 2, 1, 1}, {0.0, std::log(3.0)}));
  EXPECT_NEAR(y[0], 0.25, 1e-12);
  EXPECT_NEAR(y[1], 0.75, 1e-12);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Tensor<float> y = ops::softmax_channels(Tensor<float>({1, 2, 1, 1}, {1000.0f, 1000.0f}));
  EXPECT_FLOAT_EQ(y[0], 0.5f);
  EXPECT_FLOAT_EQ(y[1], 0.5f);
}

TEST(Softmax, SumsToOneEverywhere) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t c = 2 + seed % 5;
    Tensor<float> y = ops::softmax_channels(random_tensor({2, c, 5, 7}, seed, -30.0, 30.0).cast<float>());
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t p = 0; p < 35; ++p) {
        double s = 0;
        for (std::size_t k = 0; k < c; ++k) s += y[(b * c + k) * 35 + p];
        EXPECT_NEAR(s, 1.0, 1e-5);
      }
  }
}

TEST(Softmax, Gradient) {
  const Tensor<double> x = random_tensor({1, 3, 2, 2}, 12, -2.0, 2.0);
  EXPECT_LT(grad_check(weighted([](const Tensor<double>& v) { return ops::softmax_channels(v); }, {1, 3, 2, 2}, 9), x),
            1e-4);
}

TEST(Backward, SumOfSquares) {
  Tape<double> tape;
  Tensor<double> w = tape.variable(Tensor<double>({2}, {1.0, 2.0}));
  auto g = tape.backward(ops::sum(ops::mul(w, w)));
  EXPECT_EQ(g.of(w).vec(), (std::vector<double>{2.0, 4.0}));
}

TEST(Backward, UnusedParameterHasZeroGradient) {
  Tape<double> tape;
  Tensor<double> used = tape.variable(Tensor<double>({2}, {1.0, 2.0}));
  Tensor<double> unused = tape.variable(Tensor<double>({3}, {1.0, 2.0, 3.0}));
  auto g = tape.backward(ops::sum(used));
  EXPECT_FALSE(g.has(unused));
  EXPECT_EQ(g.of(unused).vec(), (std::vector<double>(3, 0.0)));
}

TEST(Backward, SharedValueAccumulatesBothUses) {
  const Tensor<double> a = random_tensor({4}, 30), b = random_tensor({4}, 31), v = random_tensor({4}, 32);
  auto grad_of = [&](bool first, bool second) {
    Tape<double> tape;
    Tensor<double> x = tape.variable(v);
    Tensor<double> loss;
    if (first && second) {
      loss = ops::add(ops::sum(ops::mul(x, a)), ops::sum(ops::square(ops::mul(x, b))));
    } else if (first) {
      loss = ops::sum(ops::mul(x, a));
    } else {
      loss = ops::sum(ops::square(ops::mul(x, b)));
    }
    return tape.backward(loss).of(x).vec();
  };
  const auto both = grad_of(true, true), one = grad_of(true, false), two = grad_of(false, true);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(both[i], one[i] + two[i]);
}

TEST(Backward, NodesVisitedInReverseInsertionOrder) {
  Tape<double> tape;
  std::vector<int> order;
  Tensor<double> x = tape.variable(Tensor<double>::scalar(1.0));
  auto tagged = [&](int id, const Tensor<double>& in) {
    return Tape<double>::record("tag", in.detach(), {&in}, [&order, id](std::span<const double> g, GradSink<double>& s) {
      order.push_back(id);
      s.grad(0)[0] += g[0];
    });
  };
  Tensor<double> y = tagged(3, tagged(2, tagged(1, x)));
  tape.backward(y);
  EXPECT_EQ(order, (std::vector<int>{3, 2, 1}));
}

TEST(Backward, RequiresScalarOnThisTape) {
  Tape<double> tape, other;
  Tensor<double> x = tape.variable(Tensor<double>({2}, {1, 2}));
  EXPECT_THROW(tape.backward(x), ArgumentError);
  Tensor<double> y = other.variable(Tensor<double>::scalar(1));
  EXPECT_THROW(tape.backward(y), ArgumentError);
}

TEST(GradCheck, LinearFunctionIsExactUpToRounding) {
  // Central differences are exact for a linear function; only rounding of x +- eps remains.
  ScalarFunction f = [](const Tensor<double>& x) { return ops::sum(x); };
  EXPECT_LT(grad_check(f, random_tensor({5}, 40), 1e-3), 1e-12);
}

TEST(GradCheck, QuadraticIsExactUpToRounding) {
  ScalarFunction f = [](const Tensor<double>& x) { return ops::sum(ops::mul(x, x)); };
  EXPECT_LT(grad_check(f, Tensor<double>({3}, {1, 2, 3}), 1e-3), 1e-9);
}

TEST(GradCheck, FilteredSpectrumEnergy) {
  const Tensor<double> mask = random_tensor({1, 1, 4, 4}, 41, 0.0, 1.0);
  ScalarFunction f = [mask](const Tensor<double>& x) {
    Tensor<double> z = ops::fft2_complex(ops::mask_complex(mask, ops::fft2(x)), true);
    return ops::mean(ops::square(ops::complex_abs(z)));
  };
  EXPECT_LT(grad_check(f, random_tensor({1, 1, 4, 4}, 42), 1e-3), 1e-6);
}

TEST(GradCheck, DetectsWrongGradient) {
  ScalarFunction f = [](const Tensor<double>& x) {
    Tensor<double> y = Tape<double>::record("wrong", ops::square(x.detach()), {&x},
                                           [](std::span<const double> g, GradSink<double>& s) {
                                             for (std::size_t i = 0; i < g.size(); ++i) s.grad(0)[i] += g[i];
                                           });
    return ops::sum(y);
  };
  EXPECT_GT(grad_check(f, Tensor<double>({2}, {1.0, 3.0})), 0.5);
}

TEST(Ops, FiniteOutputsOnFiniteInputs) {
  const Tensor<float> x = random_tensor({1, 3, 8, 8}, 50, -5.0, 5.0).cast<float>();
  const Tensor<float> k = random_tensor({2, 3, 3, 3}, 51).cast<float>();
  std::vector<Tensor<float>> outs{ops::conv2d(x, k, Tensor<float>::zeros({2}), 1, 1),
                                  ops::instance_norm(x, Tensor<float>::full({3}, 1.0f), Tensor<float>::zeros({3})),
                                  ops::softmax_channels(x), ops::softplus(x), ops::fft2(x),
                                  ops::complex_abs(ops::fft2(x))};
  for (const auto& t : outs)
    for (float v : t.vec()) ASSERT_TRUE(std::isfinite(v));
}

}  // namespace
}  // namespace sdagan
