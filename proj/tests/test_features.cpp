#include <gtest/gtest.h>

#include "support.hpp"
#include "vra/features.hpp"

using namespace vra;
using vra::fixtures::random_clip;

namespace {

Network<double> identity_like_linear() {
  Network<double> net(Architecture::linear(2), 0);
  return net;
}

}  // namespace

TEST(Features, DefaultIsNormalizedPenultimate) {
  const Network<float> net(Architecture::desk(8), 1);
  const VideoClip clip = random_clip({8, 32, 32}, 1);
  const FeatureVector f = extract_features(net, clip);
  EXPECT_EQ(f.dimension(), 128);
  EXPECT_NEAR(f.values.norm(), 1.0, 1e-12);
  EXPECT_EQ(f.layer_ids, std::vector<int>{4});
  EXPECT_EQ(feature_dimension(net.architecture(), {}, clip.shape), 128);
}

TEST(Features, ConcatenationDimensions) {
  const Network<float> net(Architecture::desk(8), 1);
  const VideoClip clip = random_clip({8, 32, 32}, 2);
  FeatureSpec spec;
  spec.layers = {3, 4};
  spec.timesteps = {0};
  const FeatureVector f = extract_features(net, clip, spec);
  EXPECT_EQ(f.dimension(), 64 + 128);
  EXPECT_EQ(f.layer_ids, (std::vector<int>{3, 4}));
  EXPECT_EQ(feature_dimension(net.architecture(), spec, clip.shape), 192);

  spec.layers = {4};
  spec.timesteps = {0, 1};
  EXPECT_EQ(extract_features(net, clip, spec).dimension(), 256);
  spec.pooling = Pooling::Flatten;
  spec.timesteps = {};
  EXPECT_EQ(extract_features(net, clip, spec).dimension(), 128 * 8);
  EXPECT_EQ(feature_dimension(net.architecture(), spec, clip.shape), 128 * 8);
}

TEST(Features, LayerMajorOrder) {
  const Network<double> net(fixtures::small_architecture(3), 4);
  const VideoClip clip = random_clip({4, 8, 8}, 3);
  FeatureSpec both;
  both.layers = {1, 2};
  both.timesteps = {0, 1};
  both.normalize = false;
  const FeatureVector f = extract_features(net, clip, both);
  FeatureSpec one = both;
  one.layers = {1};
  one.timesteps = {1};
  const FeatureVector g = extract_features(net, clip, one);
  EXPECT_EQ(f.values.segment(6, 6), g.values);
  EXPECT_EQ(f.layer_ids, (std::vector<int>{1, 2}));
  EXPECT_EQ(f.timestep_ids, (std::vector<int>{0, 1}));
}

TEST(Features, PureFunctionOfPixels) {
  const Network<float> net(Architecture::desk(4), 2);
  VideoClip clip = random_clip({8, 32, 32}, 4);
  const FeatureVector a = extract_features(net, clip);
  clip.pixels += Eigen::ArrayXd::Zero(clip.pixels.size());
  const FeatureVector b = extract_features(net, clip);
  EXPECT_TRUE(a.values == b.values);
}

TEST(Features, InvalidLayerOrTimestep) {
  const Network<float> net(Architecture::desk(4), 2);
  const VideoClip clip = random_clip({8, 32, 32}, 5);
  FeatureSpec spec;
  spec.layers = {7};
  EXPECT_THROW(extract_features(net, clip, spec), InterfaceError);
  spec.layers = {4};
  spec.timesteps = {2};
  EXPECT_THROW(extract_features(net, clip, spec), InterfaceError);
}

TEST(Features, ZeroRepresentationIsDegenerate) {
  const Network<double> net = identity_like_linear();
  const VideoClip black({2, 1, 1}, 0, "black");
  const FeatureVector f = extract_features(net, black);
  EXPECT_TRUE(f.is_zero());
  EXPECT_TRUE((f.values.array() == 0.0).all());
  TracedClip<double> traced(net, black);
  EXPECT_THROW(traced.gradient_from_features({}, Eigen::VectorXd::Ones(3)), DegenerateInputError);
}

TEST(InputGradient, ConstantLossGivesZero) {
  const Network<float> net(fixtures::small_architecture(3), 3);
  const VideoClip clip = random_clip({4, 8, 8}, 6);
  const Eigen::ArrayXd g = input_gradient(net, clip, {}, [](const Eigen::VectorXd& f, Eigen::VectorXd& grad) {
    grad = Eigen::VectorXd::Zero(f.size());
    return 0.0;
  });
  EXPECT_TRUE((g == 0.0).all());
}

TEST(InputGradient, SumThroughIdentityModelIsOnes) {
  // Layer 0, flattened, unnormalized: the features are the pixels themselves.
  const Network<double> net = identity_like_linear();
  const VideoClip clip = random_clip({2, 2, 2}, 7);
  FeatureSpec spec;
  spec.layers = {0};
  spec.pooling = Pooling::Flatten;
  spec.normalize = false;
  const FeatureVector f = extract_features(net, clip, spec);
  EXPECT_EQ(f.values, clip.pixels.matrix());
  const Eigen::ArrayXd g = input_gradient(net, clip, spec, [](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    grad = Eigen::VectorXd::Ones(v.size());
    return v.sum();
  });
  EXPECT_TRUE((g == 1.0).all());
}

TEST(InputGradient, WrongGradientSizeIsInterfaceError) {
  const Network<double> net = identity_like_linear();
  const VideoClip clip = random_clip({2, 1, 1}, 8);
  EXPECT_THROW(input_gradient(net, clip, {}, [](const Eigen::VectorXd&, Eigen::VectorXd& grad) {
                 grad = Eigen::VectorXd::Ones(1);
                 return 0.0;
               }),
               InterfaceError);
}

TEST(InputGradient, NormalizedMultiLayerMatchesFiniteDifferences) {
  const Network<double> net(fixtures::small_architecture(3), 11);
  const VideoClip clip = random_clip({4, 8, 8}, 9);
  FeatureSpec spec;
  spec.layers = {1, 2};
  spec.timesteps = {0, 1};
  const Eigen::VectorXd w = Eigen::VectorXd::Random(feature_dimension(net.architecture(), spec, clip.shape));
  const FeatureLoss loss = [&](const Eigen::VectorXd& f, Eigen::VectorXd& grad) {
    grad = w;
    return f.dot(w);
  };
  const Eigen::ArrayXd g = input_gradient(net, clip, spec, loss);
  const double h = 1e-5;
  Eigen::VectorXd dummy;
  for (Eigen::Index i = 0; i < clip.pixels.size(); i += 23) {
    VideoClip plus = clip, minus = clip;
    plus.pixels[i] += h;
    minus.pixels[i] -= h;
    const double fd =
        (loss(extract_features(net, plus, spec).values, dummy) - loss(extract_features(net, minus, spec).values, dummy)) /
        (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "pixel " << i;
  }
}
