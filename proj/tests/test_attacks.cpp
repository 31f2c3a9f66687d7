#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>

#include "support.hpp"
#include "vra/attacks.hpp"
#include "vra/direction_basis.hpp"

using namespace vra;
using vra::fixtures::constant_oracle;
using vra::fixtures::flip_oracle;
using vra::fixtures::random_clip;

namespace {

const ClipShape kShape{4, 16, 16};

Eigen::VectorXd unit_direction(Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.uniform();
  return v.normalized();
}

bool same_bits(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST(Oracle, CountsAndLimits) {
  auto o = constant_oracle(3);
  const VideoClip clip({1, 1, 1}, 0, "x");
  EXPECT_EQ(o->query_count(), 0);
  EXPECT_EQ(o->hard_label_query(clip), 3);
  EXPECT_EQ(o->query_count(), 1);
  EXPECT_EQ(hard_label_query(*o, clip), 3);
  EXPECT_EQ(o->query_count(), 2);
  auto limited = constant_oracle(1, 1);
  limited->hard_label_query(clip);
  EXPECT_THROW(limited->hard_label_query(clip), BudgetExceededError);
  EXPECT_EQ(limited->query_count(), 1);
  EXPECT_EQ(limited->remaining().value(), 0);
}

TEST(VraLoss, CosineExamples) {
  Eigen::Vector2d a(1, 0), b(0, 1), c(3, 4), d(4, 3);
  EXPECT_DOUBLE_EQ(vra_loss(a, a), 1.0);
  EXPECT_DOUBLE_EQ(vra_loss(a, b), 0.0);
  EXPECT_NEAR(vra_loss(c, d), 0.96, 1e-15);
  EXPECT_THROW(vra_loss(Eigen::Vector2d::Zero(), a), DegenerateInputError);
  EXPECT_THROW(vra_loss(a, Eigen::Vector3d::Ones()), InterfaceError);
}

TEST(VraLoss, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd f(7), v(7);
    for (int i = 0; i < 7; ++i) {
      f[i] = rng.normal();
      v[i] = rng.normal();
    }
    const Eigen::VectorXd g = vra_loss_gradient(f, v);
    for (int i = 0; i < 7; ++i) {
      Eigen::VectorXd p = f, m = f;
      p[i] += 1e-6;
      m[i] -= 1e-6;
      EXPECT_NEAR(g[i], (vra_loss(p, v) - vra_loss(m, v)) / 2e-6, 1e-8);
    }
  }
}

TEST(SignStep, ZeroGradientGivesPositiveZero) {
  Eigen::ArrayXd g(3);
  g << 2.0, 0.0, -1e-30;
  const Eigen::ArrayXd s = sign_step(g, 0.5);
  EXPECT_EQ(s[0], -0.5);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_FALSE(std::signbit(s[1]));
  EXPECT_EQ(s[2], 0.5);
}

TEST(ClipToValid, ShrinksAtBounds) {
  Eigen::ArrayXd x(4), d(4);
  x << 1.0, 0.0, 0.5, 0.999;
  d << 0.1, -0.1, 0.1, 0.1;
  clip_to_valid(x, d);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 0.0);
  EXPECT_EQ(d[2], 0.1);
  EXPECT_LE(x[3] + d[3], 1.0);
}

TEST(VraPerturb, ZeroEpsilonGivesZeroTensor) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 1);
  const Eigen::ArrayXd d = vra_perturb(net, clip, unit_direction(8, 1), 0.0);
  EXPECT_TRUE((d == 0.0).all());
}

TEST(VraPerturb, SaturatedPixelIsNotPushedOut) {
  const auto& net = fixtures::small_trained_model();
  VideoClip clip = random_clip(kShape, 2);
  clip.pixels = (clip.pixels > 0.5).select(1.0, clip.pixels);
  const Eigen::VectorXd dir = unit_direction(8, 2);
  const double eps = 4.0 / 255.0;
  const Eigen::ArrayXd free = vra_perturb(net, clip, dir, eps, {}, false);
  const Eigen::ArrayXd d = vra_perturb(net, clip, dir, eps);
  int saturated_up = 0;
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (clip.pixels[k] == 1.0 && free[k] > 0.0) {
      ++saturated_up;
      EXPECT_EQ(d[k], 0.0);
    } else {
      EXPECT_EQ(d[k], std::clamp(free[k], -clip.pixels[k], 1.0 - clip.pixels[k])) << k;
    }
  }
  EXPECT_GT(saturated_up, 0);
}

TEST(VraPerturb, SignsMatchFiniteDifferenceGradient) {
  const Network<double> net = fixtures::small_trained_model().cast<double>();
  const VideoClip clip = random_clip(kShape, 3);
  const Eigen::VectorXd dir = unit_direction(8, 3);
  const double eps = 4.0 / 255.0;
  const Eigen::ArrayXd d = vra_perturb(net, clip, dir, eps, {}, false);
  EXPECT_LE(d.abs().maxCoeff(), eps);
  auto loss = [&](const VideoClip& c) { return vra_loss(extract_features(net, c).values, dir); };
  int checked = 0, agree = 0;
  Rng rng(5);
  for (int k = 0; k < 300; ++k) {
    const Eigen::Index i = Eigen::Index(rng.below(clip.pixels.size()));
    VideoClip p = clip, m = clip;
    p.pixels[i] += 1e-5;
    m.pixels[i] -= 1e-5;
    const double fd = (loss(p) - loss(m)) / 2e-5;
    if (std::abs(fd) <= 1e-7) continue;
    ++checked;
    agree += (fd > 0) == (d[i] < 0);
  }
  ASSERT_GT(checked, 100);
  EXPECT_GE(double(agree) / checked, 0.95);
}

TEST(VraAttack, AlwaysFooledSucceedsWithOneQuery) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 4, 0);
  auto o = flip_oracle(clip, 0, 1);
  AttackConfig cfg;
  const AttackResult r = vra_attack(net, *o, clip, 0, cfg);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.queries_used, 1);
  EXPECT_EQ(r.clean_check_queries, 1);
  EXPECT_EQ(r.final_label, 1);
  EXPECT_EQ(o->query_count(), 2);
  ASSERT_TRUE(r.perturbation.has_value());
  EXPECT_LE(r.perturbation->abs().maxCoeff(), cfg.epsilon + 1e-12);
}

TEST(VraAttack, UnfoolableUsesWholeBudget) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 5, 2);
  auto o = constant_oracle(2);
  AttackConfig cfg;
  cfg.q_max = 12;
  const AttackResult r = vra_attack(net, *o, clip, 2, cfg, 2);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.queries_used, 12);
  EXPECT_EQ(r.clean_check_queries, 0);
  EXPECT_EQ(o->query_count(), 12);
}

TEST(VraAttack, CleanErrorIsSkipped) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 6, 0);
  auto o = constant_oracle(3);
  const AttackResult r = vra_attack(net, *o, clip, 0, AttackConfig{});
  EXPECT_TRUE(r.skipped_clean_error);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.queries_used, 0);
  EXPECT_EQ(o->query_count(), 1);
}

TEST(VraAttack, OracleLimitEndsAttackWithoutThrowing) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 7, 1);
  auto o = constant_oracle(1, 5);
  const AttackResult r = vra_attack(net, *o, clip, 1, AttackConfig{}, 1);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.queries_used, 5);
}

TEST(VraAttack, ZeroEpsilonNeverFools) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 8, 0);
  auto o = std::make_unique<TargetOracle>(std::make_shared<NetworkClassifier<float>>(
      std::make_shared<const Network<float>>(net)));
  const int label = net.predict(clip);
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  cfg.q_max = 5;
  const AttackResult r = vra_attack(net, *o, clip, label, cfg, label);
  EXPECT_FALSE(r.success);
  EXPECT_TRUE((r.perturbation.value() == 0.0).all());
}

TEST(VraAttack, CandidatesFollowTheDirectionPrefix) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 9, 0);
  AttackConfig cfg;
  cfg.q_max = 6;
  cfg.seed = 77;
  std::vector<Eigen::ArrayXd> seen;
  auto o = std::make_unique<TargetOracle>(std::make_shared<FunctionClassifier>([&](const VideoClip& c) {
    seen.push_back(c.pixels - clip.pixels);
    return 0;
  }));
  vra_attack(net, *o, clip, 0, cfg, 0);
  ASSERT_EQ(seen.size(), 6u);
  DirectionBasis basis(extract_features(net, clip).values, 77);
  for (int q = 0; q < 6; ++q) {
    const Eigen::ArrayXd expected = vra_perturb(net, clip, basis.next_direction(), cfg.epsilon);
    EXPECT_TRUE(((clip.pixels + expected) - clip.pixels == seen[q]).all()) << "query " << q;
  }
}

TEST(SparseVra, ReducesToVraBitwise) {
  const auto& net = fixtures::small_trained_model();
  for (int s = 0; s < 5; ++s) {
    const VideoClip clip = random_clip(kShape, 20 + s);
    const Eigen::VectorXd dir = unit_direction(8, s);
    AttackConfig cfg;
    cfg.n_iters = 1;
    cfg.sparsity_lambda = 0.0;
    EXPECT_TRUE(same_bits(sparse_vra_perturb(net, clip, dir, cfg), vra_perturb(net, clip, dir, cfg.epsilon)));
  }
}

TEST(SparseVra, StepIsEpsilonOverIterations) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 30);
  AttackConfig cfg;
  cfg.n_iters = 4;
  cfg.clip_to_valid_range = false;
  const Eigen::ArrayXd d = sparse_vra_perturb(net, clip, unit_direction(8, 4), cfg);
  const Eigen::ArrayXd steps = d * 255.0;
  EXPECT_TRUE(((steps - steps.round()).abs() < 1e-9).all());
  EXPECT_LE(d.abs().maxCoeff(), cfg.epsilon + 1e-15);
}

TEST(SparseVra, PenaltyDoesNotIncreaseL1) {
  const auto& net = fixtures::small_trained_model();
  double prev = INFINITY;
  for (double lambda : {0.0, 1e-4, 1e-3, 1e-2}) {
    double total = 0.0;
    for (int s = 0; s < 4; ++s) {
      AttackConfig cfg;
      cfg.sparsity_lambda = lambda;
      total += sparse_vra_perturb(net, random_clip(kShape, 40 + s), unit_direction(8, s), cfg).abs().sum();
    }
    EXPECT_LE(total, prev + 1e-12) << lambda;
    prev = total;
  }
}

TEST(Fgsm, SignStepValues) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 50);
  AttackConfig cfg;
  cfg.clip_to_valid_range = false;
  const Eigen::ArrayXd d = fgsm_family_perturb(net, clip, FgsmVariant::FGSM, cfg);
  EXPECT_TRUE(((d == cfg.epsilon) || (d == -cfg.epsilon) || (d == 0.0)).all());
}

TEST(Fgsm, IteratedWithOneStepIsFgsmBitwise) {
  const auto& net = fixtures::small_trained_model();
  AttackConfig cfg;
  cfg.n_iters = 1;
  for (int s = 0; s < 4; ++s) {
    const VideoClip clip = random_clip(kShape, 60 + s);
    EXPECT_TRUE(same_bits(fgsm_family_perturb(net, clip, FgsmVariant::I_FGSM, cfg),
                          fgsm_family_perturb(net, clip, FgsmVariant::FGSM, cfg)));
    EXPECT_TRUE(same_bits(fgsm_family_perturb(net, clip, FgsmVariant::LL_I_FGSM, cfg),
                          fgsm_family_perturb(net, clip, FgsmVariant::LL_FGSM, cfg)));
  }
}

TEST(Fgsm, AllVariantsRespectBudget) {
  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 70);
  AttackConfig cfg;
  for (FgsmVariant v : all_fgsm_variants()) {
    const Eigen::ArrayXd d = fgsm_family_perturb(net, clip, v, cfg);
    EXPECT_LE(d.abs().maxCoeff(), cfg.epsilon + 1e-12) << to_string(v);
    EXPECT_GE((clip.pixels + d).minCoeff(), 0.0);
    EXPECT_LE((clip.pixels + d).maxCoeff(), 1.0);
    EXPECT_EQ(fgsm_variant_from_string(to_string(v)), v);
    auto o = flip_oracle(clip, 0, 1);
    const AttackResult r = fgsm_family_attack(net, *o, clip, 0, v, cfg, 0);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.queries_used, 1);
  }
  EXPECT_THROW(fgsm_variant_from_string("PGD"), ParameterError);
}

TEST(Fgsm, DescentAndAscentMoveTheLossAsIntended) {
  const Network<double> net = fixtures::small_trained_model().cast<double>();
  const VideoClip clip = random_clip(kShape, 71);
  AttackConfig cfg;
  cfg.epsilon = 1e-3;
  const Eigen::VectorXd p = net.probabilities(clip);
  Eigen::Index top, low;
  p.maxCoeff(&top);
  p.minCoeff(&low);
  VideoClip up = clip, down = clip;
  up.pixels += fgsm_family_perturb(net, clip, FgsmVariant::FGSM, cfg);
  down.pixels += fgsm_family_perturb(net, clip, FgsmVariant::LL_FGSM, cfg);
  EXPECT_LT(net.probabilities(up)[top], p[top]);
  EXPECT_GT(net.probabilities(down)[low], p[low]);
}

TEST(Momentum, TwoStepHandRecursion) {
  Eigen::ArrayXd g1(3), g2(3);
  g1 << 1.0, -2.0, 1.0;
  g2 << 0.0, 3.0, -1.0;
  const double mu = 1.0;
  const Eigen::ArrayXd a1 = momentum_update(Eigen::ArrayXd::Zero(3), g1, mu);
  const Eigen::ArrayXd a2 = momentum_update(a1, g2, mu);
  Eigen::ArrayXd expected(3);
  expected << 0.25, -0.5 + 0.75, 0.25 - 0.25;
  EXPECT_TRUE(a2.isApprox(expected, 1e-15));
  EXPECT_TRUE(momentum_update(a1, Eigen::ArrayXd::Zero(3), 0.5).isApprox(0.5 * a1));
}

TEST(Diversity, IndexMap) {
  const ClipShape s{1, 4, 4};
  const auto id = diversity_index_map(s, 4, 4, 0, 0);
  for (Eigen::Index p = 0; p < 16; ++p) EXPECT_EQ(id[p], p);
  const auto small = diversity_index_map(s, 2, 2, 1, 2);
  EXPECT_EQ(std::count(small.begin(), small.end(), -1), 12);
  EXPECT_EQ(small[1 * 4 + 2], 0);
  EXPECT_EQ(small[1 * 4 + 3], 2);
  EXPECT_EQ(small[2 * 4 + 2], 8);
  EXPECT_EQ(small[2 * 4 + 3], 10);
}

TEST(TargetedLl, VisitOrderAndCap) {
  Eigen::VectorXd p(3);
  p << 0.7, 0.1, 0.2;
  EXPECT_EQ(least_likely_order(p), (std::vector<int>{1, 2, 0}));
  Eigen::VectorXd tie(3);
  tie << 0.2, 0.2, 0.6;
  EXPECT_EQ(least_likely_order(tie), (std::vector<int>{0, 1, 2}));

  const auto& net = fixtures::small_trained_model();
  const VideoClip clip = random_clip(kShape, 80, 0);
  AttackConfig cfg;
  cfg.q_max = 5;
  auto o = flip_oracle(clip, 0, 1);
  EXPECT_THROW(targeted_ll_query_attack(net, *o, clip, 0, cfg, 0), ParameterError);
  cfg.q_max = 4;
  const AttackResult r = targeted_ll_query_attack(net, *o, clip, 0, cfg, 0);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.queries_used, 1);
  auto never = constant_oracle(0);
  EXPECT_EQ(targeted_ll_query_attack(net, *never, clip, 0, cfg, 0).queries_used, 4);
}

TEST(RandomPerturbation, FullMagnitudeDeterministicUnfoolable) {
  const VideoClip clip = random_clip(kShape, 90, 0);
  AttackConfig cfg;
  cfg.clip_to_valid_range = false;
  cfg.q_max = 7;
  cfg.seed = 3;
  std::vector<Eigen::ArrayXd> a, b;
  for (auto* seen : {&a, &b}) {
    auto o = std::make_unique<TargetOracle>(std::make_shared<FunctionClassifier>([&, seen](const VideoClip& c) {
      seen->push_back(c.pixels - clip.pixels);
      return 0;
    }));
    const AttackResult r = random_perturbation_attack(*o, clip, 0, cfg, 0);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.queries_used, 7);
    EXPECT_EQ(r.perturbation->abs().minCoeff(), cfg.epsilon);
    EXPECT_EQ(r.perturbation->abs().maxCoeff(), cfg.epsilon);
  }
  ASSERT_EQ(a.size(), 7u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE((a[i] == b[i]).all());
  EXPECT_FALSE((a[0] == a[1]).all());
}

TEST(AttackConfig, Validation) {
  AttackConfig c;
  EXPECT_NO_THROW(c.validate());
  c.q_max = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = AttackConfig{};
  c.epsilon = -1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = AttackConfig{};
  c.n_iters = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = AttackConfig{};
  c.diversity_prob = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
}
