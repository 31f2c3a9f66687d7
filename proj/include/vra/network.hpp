#ifndef VRA_NETWORK_HPP
#define VRA_NETWORK_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "vra/video.hpp"

namespace vra {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One 3x3x3 convolution (padding 1) followed by ReLU.
struct BlockSpec {
  int channels = 16;
  std::array<int, 3> stride{1, 1, 1};  // (t, h, w)
  bool operator==(const BlockSpec&) const = default;
};

/// Layer list of a small 3D convolutional classifier: conv blocks, global
/// spatio-temporal average pooling, linear head. Layer id 0 is the raw input
/// clip; layer id k >= 1 is the output of block k.
struct Architecture {
  std::vector<BlockSpec> blocks;
  int num_classes = 0;
  double input_shift = 0.5;
  double input_scale = 4.0;

  /// Four blocks with 16/32/64/128 channels.
  static Architecture desk(int num_classes);
  /// No conv blocks: logits are affine in the pooled input.
  static Architecture linear(int num_classes);

  int num_layers() const { return static_cast<int>(blocks.size()); }
  int penultimate_layer() const { return num_layers(); }
  /// Channel width of a layer id.
  int width(int layer) const;
  bool operator==(const Architecture&) const = default;
};

/// Spatio-temporal extent of an activation map.
struct Extent {
  int t = 0, h = 0, w = 0;
  Eigen::Index voxels() const { return Eigen::Index(t) * h * w; }
  Eigen::Index plane() const { return Eigen::Index(h) * w; }
};

template <typename Scalar>
struct ConvBlock {
  Matrix<Scalar> weight;  // out x (27 * in), column index (kt*9 + kh*3 + kw) * in + c
  Vector<Scalar> bias;
  std::array<int, 3> stride{1, 1, 1};
  int in_channels = 0;

  int out_channels() const { return static_cast<int>(weight.rows()); }
};

/// Activations recorded by a forward pass; each map is channels x voxels.
template <typename Scalar>
struct Trace {
  Matrix<Scalar> raw_input;
  Matrix<Scalar> input;  // shifted and scaled
  std::vector<Extent> extents;   // index = layer id
  std::vector<Matrix<Scalar>> columns;  // im2col buffers, one per block
  std::vector<Matrix<Scalar>> outputs;  // index = block index (layer id - 1)
  Vector<Scalar> pooled;
  Vector<Scalar> logits;

  const Matrix<Scalar>& layer(int id) const { return id == 0 ? raw_input : outputs[id - 1]; }
};

template <typename Scalar>
struct Gradients {
  std::vector<Matrix<Scalar>> weight;
  std::vector<Vector<Scalar>> bias;
  Matrix<Scalar> head_weight;
  Vector<Scalar> head_bias;

  void set_zero();
  Gradients& operator+=(const Gradients& other);
};

template <typename Scalar>
class Network {
 public:
  Network() = default;
  /// He-normal initialisation from `seed`.
  Network(Architecture arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }

  Trace<Scalar> forward(const VideoClip& clip) const { return forward(clip.pixels, clip.shape); }
  Trace<Scalar> forward(const Eigen::ArrayXd& pixels, ClipShape shape) const;

  /// Reverse pass. `layer_grads[id]` (when non-empty) is added to the gradient
  /// of layer `id`'s activations; `logit_grad` (when non-null) enters through
  /// the head. Returns d/d(raw pixels) as a 3 x voxels matrix. Parameter
  /// gradients are accumulated into `grads` when it is non-null. With
  /// `input_grad` false the pass stops after the first block's parameters and
  /// returns an empty matrix.
  Matrix<Scalar> backward(const Trace<Scalar>& trace, const std::vector<Matrix<Scalar>>& layer_grads,
                          const Vector<Scalar>* logit_grad, Gradients<Scalar>* grads,
                          bool input_grad = true) const;

  int predict(const VideoClip& clip) const;
  Eigen::VectorXd probabilities(const VideoClip& clip) const;

  Gradients<Scalar> zero_gradients() const;

  std::vector<ConvBlock<Scalar>>& blocks() { return blocks_; }
  const std::vector<ConvBlock<Scalar>>& blocks() const { return blocks_; }
  Matrix<Scalar>& head_weight() { return head_weight_; }
  const Matrix<Scalar>& head_weight() const { return head_weight_; }
  Vector<Scalar>& head_bias() { return head_bias_; }
  const Vector<Scalar>& head_bias() const { return head_bias_; }

  Eigen::Index parameter_count() const;

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out;
    out.arch_ = arch_;
    out.ontology = ontology;
    out.val_accuracy = val_accuracy;
    for (const auto& b : blocks_) {
      out.blocks_.push_back(
          ConvBlock<Other>{b.weight.template cast<Other>(), b.bias.template cast<Other>(), b.stride, b.in_channels});
    }
    out.head_weight_ = head_weight_.template cast<Other>();
    out.head_bias_ = head_bias_.template cast<Other>();
    return out;
  }

  LabelOntology ontology;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();

 private:
  template <typename>
  friend class Network;

  Architecture arch_;
  std::vector<ConvBlock<Scalar>> blocks_;
  Matrix<Scalar> head_weight_;
  Vector<Scalar> head_bias_;
};

/// Output extent of a 3x3x3, padding-1 convolution.
Extent conv_output_extent(const Extent& in, const std::array<int, 3>& stride);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace vra

#endif  // VRA_NETWORK_HPP
