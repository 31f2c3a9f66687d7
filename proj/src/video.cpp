#include "vra/video.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_set>

#include "vra/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vra {

void VideoClip::validate() const {
  if (shape.frames < 1 || shape.height < 1 || shape.width < 1) {
    throw FormatError("clip '" + clip_id + "' has an empty shape");
  }
  if (pixels.size() != shape.size()) {
    throw FormatError("clip '" + clip_id + "' pixel buffer does not match T x H x W x 3");
  }
  if (!pixels.isFinite().all() || pixels.minCoeff() < 0.0 || pixels.maxCoeff() > 1.0) {
    throw FormatError("clip '" + clip_id + "' has pixels outside [0, 1]");
  }
}

Eigen::ArrayXd quantize8(const Eigen::ArrayXd& pixels) {
  return (pixels.max(0.0).min(1.0) * 255.0).round() / 255.0;
}

LabelOntology::LabelOntology(std::string dataset_name, std::vector<std::string> class_names)
    : dataset_name_(std::move(dataset_name)), class_names_(std::move(class_names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : class_names_) {
    if (!seen.insert(n).second) throw LabelError("duplicate class name '" + n + "'");
  }
}

std::optional<int> LabelOntology::find(const std::string& name) const {
  auto it = std::find(class_names_.begin(), class_names_.end(), name);
  if (it == class_names_.end()) return std::nullopt;
  return static_cast<int>(it - class_names_.begin());
}

int LabelOntology::index_of(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw LabelError("class '" + name + "' is not in ontology '" + dataset_name_ + "'");
  return *idx;
}

std::string to_string(Split split) { return split == Split::Train ? "train" : "val"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  throw FormatError("unknown split '" + s + "'");
}

ClassOverlap class_overlap(const LabelOntology& a, const LabelOntology& b) {
  std::set<std::string> names_b(b.class_names().begin(), b.class_names().end());
  ClassOverlap out;
  for (const auto& n : a.class_names()) out.count += names_b.count(n) ? 1 : 0;
  out.fraction_of_a = a.size() == 0 ? 0.0 : static_cast<double>(out.count) / a.size();
  return out;
}

namespace {

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", index);
  return buf;
}

}  // namespace

Dataset load_dataset(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("missing manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }

  Dataset ds;
  try {
    ds.ontology = LabelOntology(manifest.at("dataset_name").get<std::string>(),
                                manifest.at("class_names").get<std::vector<std::string>>());
    ds.split = split_from_string(manifest.value("split", std::string("train")));
    for (const auto& entry : manifest.at("clips")) {
      const auto clip_id = entry.at("clip_id").get<std::string>();
      const auto class_name = entry.at("class_name").get<std::string>();
      const int frame_count = entry.at("frame_count").get<int>();
      const int label = ds.ontology.index_of(class_name);
      const fs::path dir = root / "clips" / clip_id;
      if (!fs::is_directory(dir)) throw LoadError("clip directory '" + dir.string() + "' does not exist");
      if (frame_count < 1) throw FormatError("clip '" + clip_id + "' has no frames");

      std::vector<RgbImage> frames;
      frames.reserve(frame_count);
      for (int t = 0; t < frame_count; ++t) {
        frames.push_back(read_png(dir / frame_name(t)));
        if (frames[t].width != frames[0].width || frames[t].height != frames[0].height) {
          throw FormatError("clip '" + clip_id + "' frame " + std::to_string(t) + " has a different size");
        }
      }
      VideoClip clip(ClipShape{frame_count, frames[0].height, frames[0].width}, label, clip_id);
      Eigen::Index k = 0;
      for (const auto& f : frames) {
        for (auto v : f.data) clip.pixels[k++] = v / 255.0;
      }
      ds.clips.push_back(std::move(clip));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "clips", ec);
  if (ec) throw IoError("cannot create '" + (root / "clips").string() + "': " + ec.message());

  json manifest;
  manifest["dataset_name"] = ds.ontology.dataset_name();
  manifest["split"] = to_string(ds.split);
  manifest["class_names"] = ds.ontology.class_names();
  manifest["clips"] = json::array();
  for (const auto& clip : ds.clips) {
    clip.validate();
    if (clip.label_id < 0 || clip.label_id >= ds.ontology.size()) {
      throw LabelError("clip '" + clip.clip_id + "' has label outside the ontology");
    }
    const fs::path dir = root / "clips" / clip.clip_id;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    const ClipShape s = clip.shape;
    const Eigen::Index frame_size = Eigen::Index(s.height) * s.width * 3;
    for (int t = 0; t < s.frames; ++t) {
      RgbImage img(s.width, s.height);
      for (Eigen::Index i = 0; i < frame_size; ++i) {
        const double v = std::clamp(clip.pixels[t * frame_size + i], 0.0, 1.0);
        img.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
      write_png(img, dir / frame_name(t));
    }
    manifest["clips"].push_back(
        {{"clip_id", clip.clip_id}, {"class_name", ds.ontology.class_names()[clip.label_id]}, {"frame_count", s.frames}});
  }
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write '" + (root / "manifest.json").string() + "'");
  out << manifest.dump(2) << "\n";
}

}  // namespace vra
