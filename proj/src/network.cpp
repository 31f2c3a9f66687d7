#include "vra/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vra {

Architecture Architecture::desk(int num_classes) {
  Architecture a;
  a.num_classes = num_classes;
  a.blocks = {{16, {1, 2, 2}}, {32, {2, 2, 2}}, {64, {1, 2, 2}}, {128, {2, 2, 2}}};
  return a;
}

Architecture Architecture::linear(int num_classes) {
  Architecture a;
  a.num_classes = num_classes;
  a.input_shift = 0.0;
  a.input_scale = 1.0;
  return a;
}

int Architecture::width(int layer) const {
  if (layer < 0 || layer > num_layers()) throw InterfaceError("unknown layer id " + std::to_string(layer));
  return layer == 0 ? 3 : blocks[layer - 1].channels;
}

Extent conv_output_extent(const Extent& in, const std::array<int, 3>& s) {
  return Extent{(in.t - 1) / s[0] + 1, (in.h - 1) / s[1] + 1, (in.w - 1) / s[2] + 1};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

namespace {

template <typename Scalar>
void im2col(const Matrix<Scalar>& in, const Extent& ie, const std::array<int, 3>& s, const Extent& oe,
            Matrix<Scalar>& cols) {
  const Eigen::Index cin = in.rows();
  cols.setZero(27 * cin, oe.voxels());
  for (int ot = 0; ot < oe.t; ++ot) {
    for (int oh = 0; oh < oe.h; ++oh) {
      for (int ow = 0; ow < oe.w; ++ow) {
        const Eigen::Index o = (Eigen::Index(ot) * oe.h + oh) * oe.w + ow;
        Scalar* dst = cols.col(o).data();
        for (int kt = 0; kt < 3; ++kt) {
          const int it = ot * s[0] + kt - 1;
          if (it < 0 || it >= ie.t) continue;
          for (int kh = 0; kh < 3; ++kh) {
            const int ih = oh * s[1] + kh - 1;
            if (ih < 0 || ih >= ie.h) continue;
            for (int kw = 0; kw < 3; ++kw) {
              const int iw = ow * s[2] + kw - 1;
              if (iw < 0 || iw >= ie.w) continue;
              const Eigen::Index i = (Eigen::Index(it) * ie.h + ih) * ie.w + iw;
              std::memcpy(dst + ((kt * 3 + kh) * 3 + kw) * cin, in.col(i).data(), sizeof(Scalar) * cin);
            }
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Matrix<Scalar>& cols, const Extent& ie, const std::array<int, 3>& s, const Extent& oe,
            Matrix<Scalar>& in) {
  const Eigen::Index cin = cols.rows() / 27;
  in.setZero(cin, ie.voxels());
  for (int ot = 0; ot < oe.t; ++ot) {
    for (int oh = 0; oh < oe.h; ++oh) {
      for (int ow = 0; ow < oe.w; ++ow) {
        const Eigen::Index o = (Eigen::Index(ot) * oe.h + oh) * oe.w + ow;
        for (int kt = 0; kt < 3; ++kt) {
          const int it = ot * s[0] + kt - 1;
          if (it < 0 || it >= ie.t) continue;
          for (int kh = 0; kh < 3; ++kh) {
            const int ih = oh * s[1] + kh - 1;
            if (ih < 0 || ih >= ie.h) continue;
            for (int kw = 0; kw < 3; ++kw) {
              const int iw = ow * s[2] + kw - 1;
              if (iw < 0 || iw >= ie.w) continue;
              const Eigen::Index i = (Eigen::Index(it) * ie.h + ih) * ie.w + iw;
              in.col(i) += cols.col(o).segment(((kt * 3 + kh) * 3 + kw) * cin, cin);
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Scalar>
void Gradients<Scalar>::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
  head_weight.setZero();
  head_bias.setZero();
}

template <typename Scalar>
Gradients<Scalar>& Gradients<Scalar>::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  head_weight += other.head_weight;
  head_bias += other.head_bias;
  return *this;
}

template <typename Scalar>
Network<Scalar>::Network(Architecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  if (arch_.num_classes < 1) throw ParameterError("architecture needs at least one class");
  Rng rng(seed);
  int in = 3;
  for (const auto& spec : arch_.blocks) {
    if (spec.channels < 1) throw ParameterError("block channel count must be positive");
    ConvBlock<Scalar> b;
    b.in_channels = in;
    b.stride = spec.stride;
    b.weight.resize(spec.channels, 27 * in);
    const double stddev = std::sqrt(2.0 / (27.0 * in));
    for (Eigen::Index j = 0; j < b.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < b.weight.rows(); ++i) b.weight(i, j) = Scalar(stddev * rng.normal());
    b.bias = Vector<Scalar>::Zero(spec.channels);
    blocks_.push_back(std::move(b));
    in = spec.channels;
  }
  head_weight_.resize(arch_.num_classes, in);
  const double stddev = std::sqrt(1.0 / in);
  for (Eigen::Index j = 0; j < head_weight_.cols(); ++j)
    for (Eigen::Index i = 0; i < head_weight_.rows(); ++i) head_weight_(i, j) = Scalar(stddev * rng.normal());
  head_bias_ = Vector<Scalar>::Zero(arch_.num_classes);
}

template <typename Scalar>
Trace<Scalar> Network<Scalar>::forward(const Eigen::ArrayXd& pixels, ClipShape shape) const {
  if (pixels.size() != shape.size()) throw InterfaceError("pixel buffer does not match clip shape");
  Trace<Scalar> tr;
  tr.raw_input = Eigen::Map<const Eigen::MatrixXd>(pixels.data(), 3, shape.voxels()).cast<Scalar>();
  tr.input = ((tr.raw_input.array() - Scalar(arch_.input_shift)) * Scalar(arch_.input_scale)).matrix();
  tr.extents.push_back(Extent{shape.frames, shape.height, shape.width});
  const Matrix<Scalar>* x = &tr.input;
  for (const auto& b : blocks_) {
    const Extent ie = tr.extents.back();
    const Extent oe = conv_output_extent(ie, b.stride);
    Matrix<Scalar> cols;
    im2col(*x, ie, b.stride, oe, cols);
    Matrix<Scalar> out = b.weight * cols;
    out.colwise() += b.bias;
    out = out.cwiseMax(Scalar(0));
    tr.columns.push_back(std::move(cols));
    tr.outputs.push_back(std::move(out));
    tr.extents.push_back(oe);
    x = &tr.outputs.back();
  }
  tr.pooled = x->rowwise().mean();
  tr.logits = head_weight_ * tr.pooled + head_bias_;
  return tr;
}

template <typename Scalar>
Matrix<Scalar> Network<Scalar>::backward(const Trace<Scalar>& tr, const std::vector<Matrix<Scalar>>& layer_grads,
                                         const Vector<Scalar>* logit_grad, Gradients<Scalar>* grads,
                                         bool input_grad) const {
  const int n = arch_.num_layers();
  auto injected = [&](int id) -> const Matrix<Scalar>* {
    if (id < int(layer_grads.size()) && layer_grads[id].size() > 0) return &layer_grads[id];
    return nullptr;
  };

  // Gradient w.r.t. the top activation map (the normalized input when n == 0).
  const Matrix<Scalar>& top = n == 0 ? tr.input : tr.outputs.back();
  Matrix<Scalar> g;
  if (logit_grad) {
    if (grads) {
      grads->head_weight += *logit_grad * tr.pooled.transpose();
      grads->head_bias += *logit_grad;
    }
    const Vector<Scalar> dpooled = head_weight_.transpose() * *logit_grad / Scalar(top.cols());
    g = dpooled.replicate(1, top.cols());
  }
  if (n > 0) {
    if (auto* inj = injected(n)) g = g.size() ? Matrix<Scalar>(g + *inj) : *inj;
    for (int l = n; l >= 1; --l) {
      const auto& b = blocks_[l - 1];
      Matrix<Scalar> below;
      if (g.size()) {
        const Matrix<Scalar> dz = g.cwiseProduct((tr.outputs[l - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
        if (grads) {
          grads->weight[l - 1].noalias() += dz * tr.columns[l - 1].transpose();
          grads->bias[l - 1] += dz.rowwise().sum();
        }
        if (l > 1 || input_grad) {
          const Matrix<Scalar> dcols = b.weight.transpose() * dz;
          col2im(dcols, tr.extents[l - 1], b.stride, tr.extents[l], below);
        }
      }
      if (l > 1) {
        if (auto* inj = injected(l - 1)) below = below.size() ? Matrix<Scalar>(below + *inj) : *inj;
      }
      g = std::move(below);
    }
  }
  // g is now d/d(normalized input), possibly empty.
  if (!input_grad) return {};
  Matrix<Scalar> d_raw = g.size() ? Matrix<Scalar>(g * Scalar(arch_.input_scale))
                                  : Matrix<Scalar>::Zero(3, tr.raw_input.cols());
  if (auto* inj = injected(0)) d_raw += *inj;
  return d_raw;
}

template <typename Scalar>
int Network<Scalar>::predict(const VideoClip& clip) const {
  const auto tr = forward(clip);
  Eigen::Index idx;
  tr.logits.maxCoeff(&idx);
  return static_cast<int>(idx);
}

template <typename Scalar>
Eigen::VectorXd Network<Scalar>::probabilities(const VideoClip& clip) const {
  return softmax(forward(clip).logits.template cast<double>());
}

template <typename Scalar>
Gradients<Scalar> Network<Scalar>::zero_gradients() const {
  Gradients<Scalar> g;
  for (const auto& b : blocks_) {
    g.weight.push_back(Matrix<Scalar>::Zero(b.weight.rows(), b.weight.cols()));
    g.bias.push_back(Vector<Scalar>::Zero(b.bias.size()));
  }
  g.head_weight = Matrix<Scalar>::Zero(head_weight_.rows(), head_weight_.cols());
  g.head_bias = Vector<Scalar>::Zero(head_bias_.size());
  return g;
}

template <typename Scalar>
Eigen::Index Network<Scalar>::parameter_count() const {
  Eigen::Index n = head_weight_.size() + head_bias_.size();
  for (const auto& b : blocks_) n += b.weight.size() + b.bias.size();
  return n;
}

template struct Gradients<float>;
template struct Gradients<double>;
template class Network<float>;
template class Network<double>;

}  // namespace vra
