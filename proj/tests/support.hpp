#ifndef VRA_TESTS_SUPPORT_HPP
#define VRA_TESTS_SUPPORT_HPP

#include <memory>

#include "vra/attacks.hpp"
#include "vra/train.hpp"

namespace vra::fixtures {

inline VideoClip random_clip(ClipShape shape, std::uint64_t seed, int label = 0) {
  VideoClip clip(shape, label, "clip-" + std::to_string(seed));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < clip.pixels.size(); ++i) clip.pixels[i] = rng.uniform();
  return clip;
}

inline Architecture small_architecture(int classes) {
  Architecture a;
  a.num_classes = classes;
  a.blocks = {{6, {1, 2, 2}}, {8, {2, 2, 2}}};
  return a;
}

inline ClipShape small_shape() { return {4, 8, 8}; }

/// Small model trained briefly on 4 synthetic classes.
inline const Network<float>& small_trained_model() {
  static const Network<float> model = [] {
    const OverlapSpec spec{4, 4, 3};
    const auto data = generate_synthetic(spec, 4, 6, {4, 16, 16});
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 8;
    cfg.frames_per_clip = 4;
    return train_model<float>(data.source, small_architecture(4), cfg);
  }();
  return model;
}

/// Oracle over a classifier that always answers `label`.
inline std::unique_ptr<TargetOracle> constant_oracle(int label, std::optional<std::int64_t> limit = std::nullopt) {
  return std::make_unique<TargetOracle>(std::make_shared<FunctionClassifier>([label](const VideoClip&) { return label; }),
                                        limit);
}

/// Oracle that answers `clean_label` on the unmodified clip and `other` on anything else.
inline std::unique_ptr<TargetOracle> flip_oracle(const VideoClip& clean, int clean_label, int other) {
  const Eigen::ArrayXd pixels = clean.pixels;
  return std::make_unique<TargetOracle>(std::make_shared<FunctionClassifier>([=](const VideoClip& c) {
    return (c.pixels == pixels).all() ? clean_label : other;
  }));
}

}  // namespace vra::fixtures

#endif  // VRA_TESTS_SUPPORT_HPP
