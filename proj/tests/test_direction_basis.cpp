#include <gtest/gtest.h>

#include "vra/direction_basis.hpp"

using namespace vra;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(DirectionBasis, InitHasNoDirections) {
  const DirectionBasis b(vec({1, 0, 0}), 0);
  EXPECT_EQ(b.size(), 0);
  EXPECT_EQ(b.resets(), 0);
  EXPECT_EQ(b.anchor_unit(), vec({1, 0, 0}));
}

TEST(DirectionBasis, ZeroAnchorRejected) {
  EXPECT_THROW(DirectionBasis(Eigen::VectorXd::Zero(4), 0), DegenerateInputError);
  FeatureVector f;
  f.values = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(init_basis(f, 0), DegenerateInputError);
}

TEST(DirectionBasis, HandProjection) {
  DirectionBasis b(vec({1, 0, 0}), 0);
  EXPECT_TRUE(b.next_direction_from(vec({1, 1, 0})).isApprox(vec({0, 1, 0}), 1e-15));
  EXPECT_TRUE(b.next_direction_from(vec({1, 1, 1})).isApprox(vec({0, 0, 1}), 1e-15));
  EXPECT_EQ(b.resets(), 1);
  EXPECT_EQ(b.size(), 0);
}

TEST(DirectionBasis, RawDrawInSpanRejected) {
  DirectionBasis b(vec({1, 0, 0}), 0);
  b.next_direction_from(vec({0, 1, 0}));
  EXPECT_THROW(b.next_direction_from(vec({2, 3, 0})), DegenerateInputError);
  EXPECT_THROW(b.next_direction_from(vec({1, 0})), InterfaceError);
}

TEST(DirectionBasis, OneDimensionalAnchorHasNoDirections) {
  DirectionBasis b(vec({2}), 0);
  EXPECT_THROW(b.next_direction(), DegenerateInputError);
}

TEST(DirectionBasis, DirectionsAreOrthogonalToAnchor) {
  Rng rng(1);
  Eigen::VectorXd anchor(40);
  for (Eigen::Index i = 0; i < anchor.size(); ++i) anchor[i] = rng.uniform();
  DirectionBasis b(anchor, 3);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd e = b.next_direction();
    EXPECT_NEAR(e.dot(b.anchor_unit()), 0.0, 1e-5);
    EXPECT_NEAR(e.norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(b.resets(), 2);
}

TEST(DirectionBasis, SameSeedSameSequence) {
  const Eigen::VectorXd anchor = vec({0.3, 0.1, 0.9, 0.4, 0.2});
  DirectionBasis a(anchor, 42), b(anchor, 42), c(anchor, 43);
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd x = a.next_direction();
    EXPECT_TRUE(x == b.next_direction());
    EXPECT_FALSE(x == c.next_direction());
  }
  EXPECT_TRUE(a.rng() == b.rng());
}

TEST(DirectionBasis, ResetFiresExactlyAtDMinusOne) {
  for (int d : {2, 5, 17}) {
    DirectionBasis b(Eigen::VectorXd::LinSpaced(d, 1.0, 2.0), 7);
    for (int k = 0; k < d - 2; ++k) b.next_direction();
    EXPECT_EQ(b.resets(), 0) << d;
    EXPECT_EQ(b.size(), d - 2);
    b.next_direction();
    EXPECT_EQ(b.resets(), 1) << d;
    EXPECT_EQ(b.size(), 0);
  }
}

TEST(RandomDirection, UnitNormDeterministicPositiveOrthant) {
  const Eigen::VectorXd anchor = Eigen::VectorXd::Ones(128);
  DirectionBasis a(anchor, 5), b(anchor, 5);
  double dot_sum = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::VectorXd x = a.random_direction();
    const Eigen::VectorXd y = a.random_direction();
    EXPECT_NEAR(x.norm(), 1.0, 1e-12);
    EXPECT_TRUE(x == b.random_direction());
    EXPECT_TRUE(y == b.random_direction());
    EXPECT_TRUE((x.array() >= 0.0).all());
    dot_sum += x.dot(y);
  }
  // E[x.y] for normalized U[0,1)^d draws is close to 3/4.
  EXPECT_GT(dot_sum / 1000, 0.7);
}
