#ifndef VRA_FEATURES_HPP
#define VRA_FEATURES_HPP

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "vra/network.hpp"

namespace vra {

enum class Pooling {
  Mean,     // spatial (or spatio-temporal) average per channel
  Flatten,  // keep every voxel of the slice
};

/// Which activations form the representation f+(x).
///
/// `layers` empty means the penultimate layer. `timesteps` empty means the
/// full temporal extent is pooled; otherwise each listed layer contributes
/// one slice per listed timestep, in layer-major order:
/// [f(t1,l1), f(t2,l1), f(t1,l2), f(t2,l2)].
struct FeatureSpec {
  std::vector<int> layers;
  std::vector<int> timesteps;
  Pooling pooling = Pooling::Mean;
  bool normalize = true;

  bool operator==(const FeatureSpec&) const = default;
};

struct FeatureVector {
  Eigen::VectorXd values;
  std::vector<int> layer_ids;
  std::vector<int> timestep_ids;
  /// L2 norm before normalization.
  double raw_norm = 0.0;

  Eigen::Index dimension() const { return values.size(); }
  bool is_zero() const { return raw_norm == 0.0; }
};

/// A forward pass kept alive so that many input gradients can be taken
/// against the same clip without re-running the network.
template <typename Scalar>
class TracedClip {
 public:
  TracedClip(const Network<Scalar>& model, const VideoClip& clip);
  TracedClip(const Network<Scalar>& model, const Eigen::ArrayXd& pixels, ClipShape shape);

  /// Throws InterfaceError for unknown layer ids or timesteps.
  FeatureVector features(const FeatureSpec& spec) const;

  /// d loss / d pixels given d loss / d features, where the features are the
  /// (normalized, when requested) output of `features(spec)`. Throws
  /// DegenerateInputError when normalizing a zero feature vector.
  Eigen::ArrayXd gradient_from_features(const FeatureSpec& spec, const Eigen::VectorXd& feature_grad) const;

  Eigen::VectorXd logits() const { return trace_.logits.template cast<double>(); }
  Eigen::ArrayXd gradient_from_logits(const Eigen::VectorXd& logit_grad) const;

  const Network<Scalar>& model() const { return *model_; }
  ClipShape shape() const { return shape_; }

 private:
  const Network<Scalar>* model_;
  ClipShape shape_;
  Trace<Scalar> trace_;
};

/// Loss over a feature vector: returns the scalar value and writes its
/// gradient (same dimension as the features) into the second argument.
using FeatureLoss = std::function<double(const Eigen::VectorXd& features, Eigen::VectorXd& grad)>;

template <typename Scalar>
FeatureVector extract_features(const Network<Scalar>& model, const VideoClip& clip, const FeatureSpec& spec = {});

/// d loss / d pixels, same layout as clip.pixels. Model parameters are not
/// touched. Throws InterfaceError when `loss` does not return a gradient of
/// the feature dimension.
template <typename Scalar>
Eigen::ArrayXd input_gradient(const Network<Scalar>& model, const VideoClip& clip, const FeatureSpec& spec,
                              const FeatureLoss& loss);

/// Feature dimension for a clip shape, without running the network.
int feature_dimension(const Architecture& arch, const FeatureSpec& spec, ClipShape shape);

extern template class TracedClip<float>;
extern template class TracedClip<double>;

}  // namespace vra

#endif  // VRA_FEATURES_HPP
