#ifndef VRA_TRAIN_HPP
#define VRA_TRAIN_HPP

#include <filesystem>
#include <vector>

#include "vra/network.hpp"

namespace vra {

struct TrainConfig {
  int epochs = 30;
  double peak_lr = 0.01;
  int warmup_epochs = 3;
  int batch_size = 16;
  int frames_per_clip = 8;
  bool random_crop = true;
  int crop_padding = 2;
  bool horizontal_flip = false;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;

  /// 30 epochs, peak lr 0.01, 3 warmup epochs, batch 16, 8 frames.
  static TrainConfig desk();
  /// 100 epochs, peak lr 0.01, 5 warmup epochs, batch 32, 16 frames, crop + flip.
  static TrainConfig full_scale();

  /// Throws ParameterError.
  void validate() const;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  double val_accuracy = 0.0;
};

/// Linear warmup to the peak over the warmup epochs, then a single cosine
/// decay to zero at the end of training. `step` counts optimizer updates.
double learning_rate(const TrainConfig& cfg, long step, long steps_per_epoch);

/// SGD with momentum and weight decay on softmax cross-entropy. Training is
/// single-threaded and bitwise reproducible for a fixed seed. Throws
/// TrainingError on an empty dataset or a non-finite loss.
template <typename Scalar>
Network<Scalar> train_model(const Dataset& train, const Architecture& arch, const TrainConfig& cfg,
                            const Dataset* val = nullptr, TrainLog* log = nullptr);

template <typename Scalar>
double evaluate_accuracy(const Network<Scalar>& model, const Dataset& data);

/// Binary checkpoint: magic, JSON header (architecture, ontology, accuracy,
/// tensor shapes, scalar type), then raw little-endian parameter tensors.
template <typename Scalar>
void save_checkpoint(const Network<Scalar>& model, const std::filesystem::path& path);

/// Loads a checkpoint, converting when the stored scalar type differs.
template <typename Scalar>
Network<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace vra

#endif  // VRA_TRAIN_HPP
