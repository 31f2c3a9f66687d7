#include "vra/attacks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "vra/direction_basis.hpp"

namespace vra {

namespace {

constexpr std::array<const char*, 8> kVariantNames{"FGSM",    "I-FGSM",    "MI-FGSM",    "DI2-FGSM",
                                                   "LL-FGSM", "LL-I-FGSM", "LL-MI-FGSM", "LL-DI2-FGSM"};

bool is_least_likely(FgsmVariant v) { return int(v) >= int(FgsmVariant::LL_FGSM); }
FgsmVariant base_variant(FgsmVariant v) { return is_least_likely(v) ? FgsmVariant(int(v) - 4) : v; }

/// Handles the clean-prediction gate. Returns false when the attack must not run.
bool clean_gate(TargetOracle& oracle, const VideoClip& clip, int true_label, std::optional<int> clean_prediction,
                AttackResult& r) {
  int pred;
  if (clean_prediction) {
    pred = *clean_prediction;
  } else {
    try {
      pred = oracle.hard_label_query(clip);
    } catch (const BudgetExceededError&) {
      return false;
    }
    r.clean_check_queries = 1;
  }
  if (pred != true_label) {
    r.skipped_clean_error = true;
    r.final_label = pred;
    return false;
  }
  r.final_label = true_label;
  return true;
}

/// Queries candidate(i) for i = 0, 1, ... until the label flips, the budget
/// runs out or `q_max` candidates were tried.
template <typename Candidate>
void query_loop(TargetOracle& oracle, const VideoClip& clip, int true_label, int q_max, Candidate&& candidate,
                AttackResult& r) {
  for (int q = 1; q <= q_max; ++q) {
    Eigen::ArrayXd delta = candidate(q - 1);
    int label;
    try {
      label = oracle.hard_label_query(apply_perturbation(clip, delta));
    } catch (const BudgetExceededError&) {
      return;
    }
    r.queries_used = q;
    r.final_label = label;
    r.perturbation = std::move(delta);
    if (label != true_label) {
      r.success = true;
      return;
    }
  }
}

Eigen::VectorXd one_hot(Eigen::Index n, int k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[k] = 1.0;
  return v;
}

void project(const Eigen::ArrayXd& pixels, Eigen::ArrayXd& delta, double epsilon, bool clip_range) {
  delta = delta.max(-epsilon).min(epsilon);
  if (clip_range) clip_to_valid(pixels, delta);
}

}  // namespace

std::string to_string(FgsmVariant v) { return kVariantNames[int(v)]; }

FgsmVariant fgsm_variant_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (s == kVariantNames[i]) return FgsmVariant(i);
  }
  throw ParameterError("unknown FGSM variant '" + s + "'");
}

std::vector<FgsmVariant> all_fgsm_variants() {
  std::vector<FgsmVariant> out;
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) out.push_back(FgsmVariant(i));
  return out;
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ParameterError("attack.epsilon must be a finite value >= 0");
  if (q_max < 1) throw ParameterError("attack.q_max must be >= 1");
  if (n_iters < 1) throw ParameterError("attack.n_iters must be >= 1");
  if (!(sparsity_lambda >= 0.0)) throw ParameterError("attack.sparsity_lambda must be >= 0");
  if (!(momentum_decay >= 0.0)) throw ParameterError("attack.momentum_decay must be >= 0");
  if (!(diversity_prob >= 0.0 && diversity_prob <= 1.0)) throw ParameterError("attack.diversity_prob must be in [0, 1]");
  if (!(diversity_min_scale > 0.0 && diversity_min_scale <= 1.0)) {
    throw ParameterError("attack.diversity_min_scale must be in (0, 1]");
  }
}

double vra_loss(const Eigen::VectorXd& f, const Eigen::VectorXd& v) {
  if (f.size() != v.size()) throw InterfaceError("feature and direction dimensions differ");
  const double nf = f.norm(), nv = v.norm();
  if (nf == 0.0 || nv == 0.0) throw DegenerateInputError("cosine loss of a zero vector");
  return f.dot(v) / (nf * nv);
}

Eigen::VectorXd vra_loss_gradient(const Eigen::VectorXd& f, const Eigen::VectorXd& v) {
  if (f.size() != v.size()) throw InterfaceError("feature and direction dimensions differ");
  const double nf = f.norm(), nv = v.norm();
  if (nf == 0.0 || nv == 0.0) throw DegenerateInputError("cosine loss of a zero vector");
  return v / (nf * nv) - f * (f.dot(v) / (nf * nf * nf * nv));
}

Eigen::ArrayXd sign_step(const Eigen::ArrayXd& g, double epsilon) {
  return (g > 0.0).select(-epsilon, (g < 0.0).select(epsilon, Eigen::ArrayXd::Zero(g.size())));
}

void clip_to_valid(const Eigen::ArrayXd& pixels, Eigen::ArrayXd& delta) {
  delta = delta.max(-pixels).min(1.0 - pixels);
}

VideoClip apply_perturbation(const VideoClip& clip, const Eigen::ArrayXd& delta) {
  if (delta.size() != clip.pixels.size()) throw InterfaceError("perturbation does not match the clip shape");
  VideoClip out = clip;
  out.pixels += delta;
  return out;
}

template <typename Scalar>
Eigen::ArrayXd vra_perturb(const TracedClip<Scalar>& traced, const FeatureVector& clean, const Eigen::ArrayXd& pixels,
                           const Eigen::VectorXd& direction, double epsilon, const FeatureSpec& features,
                           bool clip_range) {
  if (clean.is_zero()) throw DegenerateInputError("clean representation is a zero vector");
  const Eigen::ArrayXd grad = traced.gradient_from_features(features, vra_loss_gradient(clean.values, direction));
  Eigen::ArrayXd delta = sign_step(grad, epsilon);
  if (clip_range) clip_to_valid(pixels, delta);
  return delta;
}

template <typename Scalar>
Eigen::ArrayXd vra_perturb(const Network<Scalar>& model, const VideoClip& clip, const Eigen::VectorXd& direction,
                           double epsilon, const FeatureSpec& features, bool clip_range) {
  TracedClip<Scalar> traced(model, clip);
  return vra_perturb(traced, traced.features(features), clip.pixels, direction, epsilon, features, clip_range);
}

template <typename Scalar>
AttackResult vra_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip, int true_label,
                        const AttackConfig& cfg, std::optional<int> clean_prediction) {
  cfg.validate();
  AttackResult r;
  if (!clean_gate(oracle, clip, true_label, clean_prediction, r)) return r;

  TracedClip<Scalar> traced(model, clip);
  const FeatureVector clean = traced.features(cfg.features);
  if (clean.is_zero()) throw DegenerateInputError("clip '" + clip.clip_id + "' has a zero representation");
  DirectionBasis basis(clean.values, cfg.seed);
  query_loop(oracle, clip, true_label, cfg.q_max, [&](int) {
    const Eigen::VectorXd e =
        cfg.direction_mode == DirectionMode::Orthogonal ? basis.next_direction() : basis.random_direction();
    return vra_perturb(traced, clean, clip.pixels, e, cfg.epsilon, cfg.features, cfg.clip_to_valid_range);
  }, r);
  return r;
}

template <typename Scalar>
Eigen::ArrayXd sparse_vra_perturb(const Network<Scalar>& model, const VideoClip& clip,
                                  const Eigen::VectorXd& direction, const AttackConfig& cfg) {
  const double alpha = cfg.epsilon / cfg.n_iters;
  Eigen::ArrayXd delta = Eigen::ArrayXd::Zero(clip.pixels.size());
  for (int i = 0; i < cfg.n_iters; ++i) {
    const Eigen::ArrayXd x = clip.pixels + delta;
    TracedClip<Scalar> traced(model, x, clip.shape);
    const FeatureVector f = traced.features(cfg.features);
    if (f.is_zero()) throw DegenerateInputError("clip '" + clip.clip_id + "' has a zero representation");
    Eigen::ArrayXd grad = traced.gradient_from_features(cfg.features, vra_loss_gradient(f.values, direction));
    if (cfg.sparsity_lambda > 0.0) grad += cfg.sparsity_lambda * delta.sign();
    delta = delta + sign_step(grad, alpha);
    project(clip.pixels, delta, cfg.epsilon, cfg.clip_to_valid_range);
  }
  return delta;
}

template <typename Scalar>
AttackResult sparse_vra_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip,
                               int true_label, const AttackConfig& cfg, std::optional<int> clean_prediction) {
  cfg.validate();
  AttackResult r;
  if (!clean_gate(oracle, clip, true_label, clean_prediction, r)) return r;

  const FeatureVector clean = extract_features(model, clip, cfg.features);
  if (clean.is_zero()) throw DegenerateInputError("clip '" + clip.clip_id + "' has a zero representation");
  DirectionBasis basis(clean.values, cfg.seed);
  query_loop(oracle, clip, true_label, cfg.q_max, [&](int) {
    const Eigen::VectorXd e =
        cfg.direction_mode == DirectionMode::Orthogonal ? basis.next_direction() : basis.random_direction();
    return sparse_vra_perturb(model, clip, e, cfg);
  }, r);
  return r;
}

Eigen::ArrayXd momentum_update(const Eigen::ArrayXd& accumulator, const Eigen::ArrayXd& gradient, double mu) {
  const double l1 = gradient.abs().sum();
  return l1 > 0.0 ? Eigen::ArrayXd(mu * accumulator + gradient / l1) : Eigen::ArrayXd(mu * accumulator);
}

std::vector<Eigen::Index> diversity_index_map(ClipShape shape, int rh, int rw, int top, int left) {
  std::vector<Eigen::Index> map(std::size_t(shape.height) * shape.width, -1);
  for (int h = top; h < top + rh && h < shape.height; ++h) {
    for (int w = left; w < left + rw && w < shape.width; ++w) {
      const int sh = std::min(shape.height - 1, (h - top) * shape.height / rh);
      const int sw = std::min(shape.width - 1, (w - left) * shape.width / rw);
      map[std::size_t(h) * shape.width + w] = Eigen::Index(sh) * shape.width + sw;
    }
  }
  return map;
}

namespace {

Eigen::ArrayXd gather(const Eigen::ArrayXd& x, ClipShape s, const std::vector<Eigen::Index>& map) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(x.size());
  const Eigen::Index plane = Eigen::Index(s.height) * s.width;
  for (int t = 0; t < s.frames; ++t) {
    for (Eigen::Index p = 0; p < plane; ++p) {
      if (map[p] < 0) continue;
      out.segment((t * plane + p) * 3, 3) = x.segment((t * plane + map[p]) * 3, 3);
    }
  }
  return out;
}

Eigen::ArrayXd scatter(const Eigen::ArrayXd& g, ClipShape s, const std::vector<Eigen::Index>& map) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(g.size());
  const Eigen::Index plane = Eigen::Index(s.height) * s.width;
  for (int t = 0; t < s.frames; ++t) {
    for (Eigen::Index p = 0; p < plane; ++p) {
      if (map[p] < 0) continue;
      out.segment((t * plane + map[p]) * 3, 3) += g.segment((t * plane + p) * 3, 3);
    }
  }
  return out;
}

}  // namespace

template <typename Scalar>
Eigen::ArrayXd fgsm_family_perturb(const Network<Scalar>& model, const VideoClip& clip, FgsmVariant variant,
                                   const AttackConfig& cfg) {
  cfg.validate();
  const FgsmVariant base = base_variant(variant);
  const bool least_likely = is_least_likely(variant);
  const bool momentum = base == FgsmVariant::MI_FGSM;
  const bool diverse = base == FgsmVariant::DI2_FGSM;
  const int steps = base == FgsmVariant::FGSM ? 1 : cfg.n_iters;
  const double alpha = cfg.epsilon / steps;

  const Eigen::VectorXd probs = softmax(TracedClip<Scalar>(model, clip).logits());
  Eigen::Index label;
  if (least_likely) {
    probs.minCoeff(&label);
  } else {
    probs.maxCoeff(&label);
  }

  Rng rng(mix_seed(cfg.seed, 0xD1D1ULL));
  Eigen::ArrayXd delta = Eigen::ArrayXd::Zero(clip.pixels.size());
  Eigen::ArrayXd accumulator = Eigen::ArrayXd::Zero(clip.pixels.size());
  for (int k = 0; k < steps; ++k) {
    Eigen::ArrayXd x = clip.pixels + delta;
    std::vector<Eigen::Index> map;
    if (diverse && rng.bernoulli(cfg.diversity_prob)) {
      const double scale = rng.uniform(cfg.diversity_min_scale, 1.0);
      const int rh = std::max(1, int(std::lround(clip.shape.height * scale)));
      const int rw = std::max(1, int(std::lround(clip.shape.width * scale)));
      const int top = int(rng.below(clip.shape.height - rh + 1));
      const int left = int(rng.below(clip.shape.width - rw + 1));
      map = diversity_index_map(clip.shape, rh, rw, top, left);
      x = gather(x, clip.shape, map);
    }
    TracedClip<Scalar> traced(model, x, clip.shape);
    Eigen::VectorXd dlogits = softmax(traced.logits());
    dlogits[label] -= 1.0;
    Eigen::ArrayXd grad = traced.gradient_from_logits(dlogits);
    if (!map.empty()) grad = scatter(grad, clip.shape, map);
    if (momentum) {
      accumulator = momentum_update(accumulator, grad, cfg.momentum_decay);
      grad = accumulator;
    }
    // Untargeted variants ascend the loss of the predicted label; LL variants
    // descend the loss of the least likely label.
    delta = delta + (least_likely ? sign_step(grad, alpha) : sign_step(-grad, alpha));
    project(clip.pixels, delta, cfg.epsilon, cfg.clip_to_valid_range);
  }
  return delta;
}

template <typename Scalar>
AttackResult fgsm_family_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip,
                                int true_label, FgsmVariant variant, const AttackConfig& cfg,
                                std::optional<int> clean_prediction) {
  cfg.validate();
  AttackResult r;
  if (!clean_gate(oracle, clip, true_label, clean_prediction, r)) return r;
  query_loop(oracle, clip, true_label, 1, [&](int) { return fgsm_family_perturb(model, clip, variant, cfg); }, r);
  return r;
}

std::vector<int> least_likely_order(const Eigen::VectorXd& p) {
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] < p[b]; });
  return order;
}

template <typename Scalar>
AttackResult targeted_ll_query_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip,
                                      int true_label, const AttackConfig& cfg, std::optional<int> clean_prediction) {
  cfg.validate();
  const int classes = model.architecture().num_classes;
  if (cfg.q_max > classes) {
    throw ParameterError("targeted LL-FGSM can issue at most " + std::to_string(classes) + " queries, q_max is " +
                         std::to_string(cfg.q_max));
  }
  AttackResult r;
  if (!clean_gate(oracle, clip, true_label, clean_prediction, r)) return r;

  TracedClip<Scalar> traced(model, clip);
  const Eigen::VectorXd probs = softmax(traced.logits());
  const std::vector<int> order = least_likely_order(probs);
  query_loop(oracle, clip, true_label, cfg.q_max, [&](int i) {
    const Eigen::VectorXd dlogits = probs - one_hot(probs.size(), order[i]);
    Eigen::ArrayXd delta = sign_step(traced.gradient_from_logits(dlogits), cfg.epsilon);
    if (cfg.clip_to_valid_range) clip_to_valid(clip.pixels, delta);
    return delta;
  }, r);
  return r;
}

AttackResult random_perturbation_attack(TargetOracle& oracle, const VideoClip& clip, int true_label,
                                        const AttackConfig& cfg, std::optional<int> clean_prediction) {
  cfg.validate();
  AttackResult r;
  if (!clean_gate(oracle, clip, true_label, clean_prediction, r)) return r;
  Rng rng(cfg.seed);
  query_loop(oracle, clip, true_label, cfg.q_max, [&](int) {
    Eigen::ArrayXd delta(clip.pixels.size());
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = rng.uniform() < 0.5 ? -cfg.epsilon : cfg.epsilon;
    if (cfg.clip_to_valid_range) clip_to_valid(clip.pixels, delta);
    return delta;
  }, r);
  return r;
}

#define VRA_INSTANTIATE_ATTACKS(S)                                                                                   \
  template Eigen::ArrayXd vra_perturb(const Network<S>&, const VideoClip&, const Eigen::VectorXd&, double,          \
                                      const FeatureSpec&, bool);                                                    \
  template Eigen::ArrayXd vra_perturb(const TracedClip<S>&, const FeatureVector&, const Eigen::ArrayXd&,            \
                                      const Eigen::VectorXd&, double, const FeatureSpec&, bool);                    \
  template AttackResult vra_attack(const Network<S>&, TargetOracle&, const VideoClip&, int, const AttackConfig&,    \
                                   std::optional<int>);                                                             \
  template Eigen::ArrayXd sparse_vra_perturb(const Network<S>&, const VideoClip&, const Eigen::VectorXd&,           \
                                             const AttackConfig&);                                                  \
  template AttackResult sparse_vra_attack(const Network<S>&, TargetOracle&, const VideoClip&, int,                  \
                                          const AttackConfig&, std::optional<int>);                                 \
  template Eigen::ArrayXd fgsm_family_perturb(const Network<S>&, const VideoClip&, FgsmVariant, const AttackConfig&); \
  template AttackResult fgsm_family_attack(const Network<S>&, TargetOracle&, const VideoClip&, int, FgsmVariant,    \
                                           const AttackConfig&, std::optional<int>);                                \
  template AttackResult targeted_ll_query_attack(const Network<S>&, TargetOracle&, const VideoClip&, int,           \
                                                 const AttackConfig&, std::optional<int>);

VRA_INSTANTIATE_ATTACKS(float)
VRA_INSTANTIATE_ATTACKS(double)

#undef VRA_INSTANTIATE_ATTACKS

}  // namespace vra
