#include "vra/features.hpp"

#include <cmath>

namespace vra {
namespace {

std::vector<int> resolve_layers(const Architecture& arch, const FeatureSpec& spec) {
  std::vector<int> layers = spec.layers.empty() ? std::vector<int>{arch.penultimate_layer()} : spec.layers;
  for (int l : layers) {
    if (l < 0 || l > arch.num_layers()) throw InterfaceError("unknown feature layer id " + std::to_string(l));
  }
  return layers;
}

std::vector<Extent> layer_extents(const Architecture& arch, ClipShape shape) {
  std::vector<Extent> ext{Extent{shape.frames, shape.height, shape.width}};
  for (const auto& b : arch.blocks) ext.push_back(conv_output_extent(ext.back(), b.stride));
  return ext;
}

/// Timesteps to slice for a layer; {-1} stands for full temporal pooling.
std::vector<int> resolve_timesteps(const FeatureSpec& spec, int layer, const Extent& e) {
  if (spec.timesteps.empty()) return {-1};
  for (int t : spec.timesteps) {
    if (t < 0 || t >= e.t) {
      throw InterfaceError("timestep " + std::to_string(t) + " outside the temporal extent " + std::to_string(e.t) +
                           " of layer " + std::to_string(layer));
    }
  }
  return spec.timesteps;
}

Eigen::Index slice_width(const FeatureSpec& spec, int channels, const Extent& e, int t) {
  if (spec.pooling == Pooling::Mean) return channels;
  return Eigen::Index(channels) * (t < 0 ? e.voxels() : e.plane());
}

}  // namespace

int feature_dimension(const Architecture& arch, const FeatureSpec& spec, ClipShape shape) {
  const auto layers = resolve_layers(arch, spec);
  const auto ext = layer_extents(arch, shape);
  Eigen::Index d = 0;
  for (int l : layers) {
    for (int t : resolve_timesteps(spec, l, ext[l])) d += slice_width(spec, arch.width(l), ext[l], t);
  }
  return static_cast<int>(d);
}

template <typename Scalar>
TracedClip<Scalar>::TracedClip(const Network<Scalar>& model, const VideoClip& clip)
    : TracedClip(model, clip.pixels, clip.shape) {}

template <typename Scalar>
TracedClip<Scalar>::TracedClip(const Network<Scalar>& model, const Eigen::ArrayXd& pixels, ClipShape shape)
    : model_(&model), shape_(shape), trace_(model.forward(pixels, shape)) {}

template <typename Scalar>
FeatureVector TracedClip<Scalar>::features(const FeatureSpec& spec) const {
  const auto& arch = model_->architecture();
  const auto layers = resolve_layers(arch, spec);
  FeatureVector fv;
  fv.layer_ids = layers;
  fv.timestep_ids = spec.timesteps;

  std::vector<Eigen::VectorXd> parts;
  Eigen::Index d = 0;
  for (int l : layers) {
    const Extent& e = trace_.extents[l];
    const Matrix<Scalar>& a = trace_.layer(l);
    for (int t : resolve_timesteps(spec, l, e)) {
      const auto block = t < 0 ? a.middleCols(0, e.voxels()) : a.middleCols(t * e.plane(), e.plane());
      Eigen::VectorXd part;
      if (spec.pooling == Pooling::Mean) {
        part = block.rowwise().mean().template cast<double>();
      } else {
        part = Eigen::Map<const Vector<Scalar>>(block.data(), block.size()).template cast<double>();
      }
      d += part.size();
      parts.push_back(std::move(part));
    }
  }
  fv.values.resize(d);
  Eigen::Index k = 0;
  for (const auto& p : parts) {
    fv.values.segment(k, p.size()) = p;
    k += p.size();
  }
  fv.raw_norm = fv.values.norm();
  if (spec.normalize) {
    if (fv.raw_norm > 0.0) {
      fv.values /= fv.raw_norm;
    } else {
      fv.values.setZero();
    }
  }
  return fv;
}

template <typename Scalar>
Eigen::ArrayXd TracedClip<Scalar>::gradient_from_features(const FeatureSpec& spec,
                                                          const Eigen::VectorXd& feature_grad) const {
  const auto& arch = model_->architecture();
  const auto layers = resolve_layers(arch, spec);

  Eigen::VectorXd g = feature_grad;
  if (spec.normalize) {
    const FeatureVector fv = features(spec);
    if (fv.is_zero()) throw DegenerateInputError("feature vector is zero; its normalization has no gradient");
    if (g.size() != fv.dimension()) throw InterfaceError("feature gradient has the wrong dimension");
    g = (g - fv.values * fv.values.dot(g)) / fv.raw_norm;
  }

  std::vector<Matrix<Scalar>> layer_grads(arch.num_layers() + 1);
  Eigen::Index k = 0;
  for (int l : layers) {
    const Extent& e = trace_.extents[l];
    const Eigen::Index channels = arch.width(l);
    auto& dl = layer_grads[l];
    if (dl.size() == 0) dl = Matrix<Scalar>::Zero(channels, e.voxels());
    for (int t : resolve_timesteps(spec, l, e)) {
      const Eigen::Index first = t < 0 ? 0 : t * e.plane();
      const Eigen::Index cols = t < 0 ? e.voxels() : e.plane();
      const Eigen::Index width = slice_width(spec, int(channels), e, t);
      if (k + width > g.size()) throw InterfaceError("feature gradient has the wrong dimension");
      if (spec.pooling == Pooling::Mean) {
        const Vector<Scalar> part = (g.segment(k, width) / double(cols)).template cast<Scalar>();
        dl.middleCols(first, cols).colwise() += part;
      } else {
        const Matrix<Scalar> part =
            Eigen::Map<const Eigen::MatrixXd>(g.data() + k, channels, cols).template cast<Scalar>();
        dl.middleCols(first, cols) += part;
      }
      k += width;
    }
  }
  if (k != g.size()) throw InterfaceError("feature gradient has the wrong dimension");

  const Matrix<Scalar> dx = model_->backward(trace_, layer_grads, nullptr, nullptr);
  return Eigen::Map<const Vector<Scalar>>(dx.data(), dx.size()).template cast<double>().array();
}

template <typename Scalar>
Eigen::ArrayXd TracedClip<Scalar>::gradient_from_logits(const Eigen::VectorXd& logit_grad) const {
  if (logit_grad.size() != trace_.logits.size()) throw InterfaceError("logit gradient has the wrong dimension");
  const Vector<Scalar> g = logit_grad.cast<Scalar>();
  const Matrix<Scalar> dx = model_->backward(trace_, {}, &g, nullptr);
  return Eigen::Map<const Vector<Scalar>>(dx.data(), dx.size()).template cast<double>().array();
}

template <typename Scalar>
FeatureVector extract_features(const Network<Scalar>& model, const VideoClip& clip, const FeatureSpec& spec) {
  return TracedClip<Scalar>(model, clip).features(spec);
}

template <typename Scalar>
Eigen::ArrayXd input_gradient(const Network<Scalar>& model, const VideoClip& clip, const FeatureSpec& spec,
                              const FeatureLoss& loss) {
  TracedClip<Scalar> traced(model, clip);
  const FeatureVector fv = traced.features(spec);
  Eigen::VectorXd grad;
  const double value = loss(fv.values, grad);
  if (!std::isfinite(value) || grad.size() != fv.dimension()) {
    throw InterfaceError("feature loss must be a finite scalar with a gradient of dimension " +
                         std::to_string(fv.dimension()));
  }
  return traced.gradient_from_features(spec, grad);
}

template class TracedClip<float>;
template class TracedClip<double>;
template FeatureVector extract_features(const Network<float>&, const VideoClip&, const FeatureSpec&);
template FeatureVector extract_features(const Network<double>&, const VideoClip&, const FeatureSpec&);
template Eigen::ArrayXd input_gradient(const Network<float>&, const VideoClip&, const FeatureSpec&,
                                       const FeatureLoss&);
template Eigen::ArrayXd input_gradient(const Network<double>&, const VideoClip&, const FeatureSpec&,
                                       const FeatureLoss&);

}  // namespace vra
