#ifndef VRA_VIDEO_HPP
#define VRA_VIDEO_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vra/common.hpp"

namespace vra {

struct ClipShape {
  int frames = 8;
  int height = 32;
  int width = 32;

  Eigen::Index voxels() const { return Eigen::Index(frames) * height * width; }
  /// Number of scalars in a T x H x W x 3 tensor.
  Eigen::Index size() const { return voxels() * 3; }
  bool operator==(const ClipShape&) const = default;
};

/// A T x H x W x 3 video tensor with values in [0, 1].
///
/// Pixels are stored flat in (t, h, w, c) order with c fastest, so the buffer
/// maps directly onto a 3 x (T*H*W) column-major matrix, one column per voxel.
struct VideoClip {
  ClipShape shape;
  Eigen::ArrayXd pixels;
  int label_id = -1;
  std::string clip_id;

  VideoClip() = default;
  VideoClip(ClipShape s, int label, std::string id)
      : shape(s), pixels(Eigen::ArrayXd::Zero(s.size())), label_id(label), clip_id(std::move(id)) {}

  Eigen::Index index(int t, int h, int w, int c) const {
    return ((Eigen::Index(t) * shape.height + h) * shape.width + w) * 3 + c;
  }
  double& at(int t, int h, int w, int c) { return pixels[index(t, h, w, c)]; }
  double at(int t, int h, int w, int c) const { return pixels[index(t, h, w, c)]; }

  /// Throws FormatError when the shape or pixel range invariants do not hold.
  void validate() const;
};

/// Round every pixel to the nearest multiple of 1/255.
Eigen::ArrayXd quantize8(const Eigen::ArrayXd& pixels);

class LabelOntology {
 public:
  LabelOntology() = default;
  /// Throws LabelError on duplicate names.
  LabelOntology(std::string dataset_name, std::vector<std::string> class_names);

  const std::string& dataset_name() const { return dataset_name_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int size() const { return static_cast<int>(class_names_.size()); }
  std::optional<int> find(const std::string& name) const;
  /// Throws LabelError when the name is unknown.
  int index_of(const std::string& name) const;

  bool operator==(const LabelOntology&) const = default;

 private:
  std::string dataset_name_;
  std::vector<std::string> class_names_;
};

enum class Split { Train, Val };
std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct Dataset {
  std::vector<VideoClip> clips;
  LabelOntology ontology;
  Split split = Split::Train;

  bool empty() const { return clips.empty(); }
  int size() const { return static_cast<int>(clips.size()); }
};

struct OverlapSpec {
  int n_source_classes = 8;
  int n_common_classes = 4;
  std::uint64_t seed = 0;
};

struct ClassOverlap {
  int count = 0;
  double fraction_of_a = 0.0;
};

/// Classes shared by exact name match; fraction is relative to |a|.
ClassOverlap class_overlap(const LabelOntology& a, const LabelOntology& b);

/// Reads `<root>/manifest.json` and `<root>/clips/<clip_id>/frame_NNNNN.png`.
Dataset load_dataset(const std::filesystem::path& root);
/// Writes the layout read by load_dataset; pixels are stored as 8-bit RGB.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

struct SyntheticPair {
  Dataset source;
  Dataset target;
};

/// Procedurally rendered moving-shape datasets for a source and a target
/// domain sharing exactly `spec.n_common_classes` class motifs.
///
/// The target ontology depends only on the seed and `n_target_classes`, so a
/// sweep over `n_common_classes` keeps the target domain fixed while the
/// source domain gains shared classes. Target classes are drawn from a
/// seeded 2-shape by 3-motion region of the motif grid and source-only
/// classes from outside it first. Output is a pure function of the
/// arguments.
SyntheticPair generate_synthetic(const OverlapSpec& spec, int n_target_classes, int clips_per_class,
                                 ClipShape shape, Split split = Split::Train);

/// Number of distinct motifs available to the generator.
int synthetic_motif_count();

}  // namespace vra

#endif  // VRA_VIDEO_HPP
