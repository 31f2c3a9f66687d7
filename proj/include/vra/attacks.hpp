#ifndef VRA_ATTACKS_HPP
#define VRA_ATTACKS_HPP

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "vra/features.hpp"
#include "vra/oracle.hpp"

namespace vra {

enum class DirectionMode { Orthogonal, Random };

enum class FgsmVariant {
  FGSM,
  I_FGSM,
  MI_FGSM,
  DI2_FGSM,
  LL_FGSM,
  LL_I_FGSM,
  LL_MI_FGSM,
  LL_DI2_FGSM,
};

std::string to_string(FgsmVariant v);
/// Accepts the names printed by to_string, e.g. "LL-MI-FGSM". Throws ParameterError.
FgsmVariant fgsm_variant_from_string(const std::string& s);
std::vector<FgsmVariant> all_fgsm_variants();

struct AttackConfig {
  double epsilon = 4.0 / 255.0;
  int q_max = 100;
  DirectionMode direction_mode = DirectionMode::Orthogonal;
  FeatureSpec features;
  double sparsity_lambda = 0.0;
  /// Steps of the sparse variant and of the iterated FGSM baselines.
  int n_iters = 5;
  std::uint64_t seed = 0;
  bool clip_to_valid_range = true;
  double momentum_decay = 1.0;
  double diversity_prob = 0.5;
  double diversity_min_scale = 0.9;

  /// Throws ParameterError.
  void validate() const;
};

struct AttackResult {
  bool success = false;
  /// Perturbation queries; the optional clean verification query is not included.
  int queries_used = 0;
  std::optional<Eigen::ArrayXd> perturbation;
  int final_label = -1;
  bool skipped_clean_error = false;
  int clean_check_queries = 0;
};

double vra_loss(const Eigen::VectorXd& features, const Eigen::VectorXd& direction);
/// d vra_loss / d features.
Eigen::VectorXd vra_loss_gradient(const Eigen::VectorXd& features, const Eigen::VectorXd& direction);

/// -epsilon * sign(g), with sign(0) = 0.
Eigen::ArrayXd sign_step(const Eigen::ArrayXd& gradient, double epsilon);
/// Shrinks `delta` elementwise so that pixels + delta stays in [0, 1].
void clip_to_valid(const Eigen::ArrayXd& pixels, Eigen::ArrayXd& delta);
VideoClip apply_perturbation(const VideoClip& clip, const Eigen::ArrayXd& delta);

/// Single gradient-sign step pushing the representation away from `direction`.
template <typename Scalar>
Eigen::ArrayXd vra_perturb(const Network<Scalar>& model, const VideoClip& clip, const Eigen::VectorXd& direction,
                           double epsilon, const FeatureSpec& features = {}, bool clip_to_valid_range = true);

/// Same as vra_perturb, reusing an existing forward pass of the clean clip.
template <typename Scalar>
Eigen::ArrayXd vra_perturb(const TracedClip<Scalar>& traced, const FeatureVector& clean_features,
                           const Eigen::ArrayXd& pixels, const Eigen::VectorXd& direction, double epsilon,
                           const FeatureSpec& features, bool clip_to_valid_range);

/// Direction search under a hard-label query budget. Every candidate is a
/// single step from the clean clip; the search stops at the first query whose
/// label differs from `true_label`. When `clean_prediction` is absent one
/// extra query checks the clean clip first; a clip the target already gets
/// wrong is skipped without spending perturbation queries.
template <typename Scalar>
AttackResult vra_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip, int true_label,
                        const AttackConfig& cfg, std::optional<int> clean_prediction = std::nullopt);

/// Iterated perturbation for one direction with an L1 sparsity term:
/// delta <- delta - (eps/n) * sign(grad vra_loss(x + delta) + lambda * sign(delta)).
template <typename Scalar>
Eigen::ArrayXd sparse_vra_perturb(const Network<Scalar>& model, const VideoClip& clip,
                                  const Eigen::VectorXd& direction, const AttackConfig& cfg);

template <typename Scalar>
AttackResult sparse_vra_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip,
                               int true_label, const AttackConfig& cfg,
                               std::optional<int> clean_prediction = std::nullopt);

/// Transfer baselines; one target query. Untargeted variants use the source
/// model's own prediction as the label, LL variants descend towards the
/// source model's least likely class.
template <typename Scalar>
Eigen::ArrayXd fgsm_family_perturb(const Network<Scalar>& model, const VideoClip& clip, FgsmVariant variant,
                                   const AttackConfig& cfg);

template <typename Scalar>
AttackResult fgsm_family_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip,
                                int true_label, FgsmVariant variant, const AttackConfig& cfg,
                                std::optional<int> clean_prediction = std::nullopt);

/// mu * accumulator + g / ||g||_1.
Eigen::ArrayXd momentum_update(const Eigen::ArrayXd& accumulator, const Eigen::ArrayXd& gradient, double mu);

/// Source classes ordered from least to most likely (stable on ties).
std::vector<int> least_likely_order(const Eigen::VectorXd& probabilities);

/// Query-based targeted baseline: one targeted step per source class, least
/// likely first. Throws ParameterError when q_max exceeds the class count.
template <typename Scalar>
AttackResult targeted_ll_query_attack(const Network<Scalar>& model, TargetOracle& oracle, const VideoClip& clip,
                                      int true_label, const AttackConfig& cfg,
                                      std::optional<int> clean_prediction = std::nullopt);

/// Uniform {-eps, +eps} noise per query; no source model.
AttackResult random_perturbation_attack(TargetOracle& oracle, const VideoClip& clip, int true_label,
                                        const AttackConfig& cfg, std::optional<int> clean_prediction = std::nullopt);

/// Spatial resize (nearest) by `scale` then zero padding back to the input
/// size at (top, left); returns, per output pixel, the source pixel index or -1.
std::vector<Eigen::Index> diversity_index_map(ClipShape shape, int resized_h, int resized_w, int top, int left);

}  // namespace vra

#endif  // VRA_ATTACKS_HPP
