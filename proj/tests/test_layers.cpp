// Finite-difference checks of every layer's backward pass.

#include "fatigue/nn/layers.hpp"

#include "support/layer_checks.hpp"

#include <gtest/gtest.h>

using namespace fatigue;

namespace {

class LayerGradient : public ::testing::TestWithParam<layer_checks::Named> {};

}  // namespace

TEST_P(LayerGradient, MatchesFiniteDifferences) {
  const auto o = GetParam().run(50);
  EXPECT_EQ(o.instances, 50);
  EXPECT_LE(o.worst, gradcheck::kTol);
}

INSTANTIATE_TEST_SUITE_P(AllLayers, LayerGradient, ::testing::ValuesIn(layer_checks::all()),
                         [](const auto& info) {
                           std::string n = info.param.name;
                           std::replace(n.begin(), n.end(), '/', '_');
                           return n;
                         });

TEST(Tensor, ChannelConcatAndSlice) {
  std::mt19937_64 rng(111);
  for (int inst = 0; inst < 20; ++inst) {
    const auto a = gradcheck::random_batch(2, layer_checks::pick(rng, 1, 3), 5, rng);
    const auto b = gradcheck::random_batch(2, layer_checks::pick(rng, 1, 3), 5, rng);
    const auto cat = nn::concat_channels<double>({&a, &b});
    EXPECT_EQ(layer_checks::stack(nn::slice_channels(cat, 0, a[0].rows())), layer_checks::stack(a));
    EXPECT_EQ(layer_checks::stack(nn::slice_channels(cat, a[0].rows(), b[0].rows())),
              layer_checks::stack(b));
  }
}

TEST(Pooling, TiesGoToTheFirstIndex) {
  nn::MaxPool1d<double> pool(2, 2);
  Eigen::MatrixXd x(1, 4);
  x << 1.0, 1.0, 0.0, 2.0;
  const auto y = pool.forward({x});
  Eigen::MatrixXd dy(1, 2);
  dy << 5.0, 7.0;
  const auto dx = pool.backward({dy});
  Eigen::MatrixXd want(1, 4);
  want << 5.0, 0.0, 0.0, 7.0;
  EXPECT_EQ(dx[0], want);
}
