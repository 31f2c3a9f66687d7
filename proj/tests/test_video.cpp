#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "vra/image_io.hpp"
#include "vra/video.hpp"

namespace fs = std::filesystem;
using namespace vra;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vra_test_video_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_manifest(const fs::path& root, const nlohmann::json& j) {
  std::ofstream(root / "manifest.json") << j.dump();
}

nlohmann::json one_clip_manifest(const std::string& label = "a") {
  return {{"dataset_name", "tiny"},
          {"split", "val"},
          {"class_names", {"a"}},
          {"clips", {{{"clip_id", "c0"}, {"class_name", label}, {"frame_count", 4}}}}};
}

void write_black_frames(const fs::path& root, int frames, int size) {
  fs::create_directories(root / "clips" / "c0");
  for (int t = 0; t < frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.png", t);
    write_png(RgbImage(size, size, 0), root / "clips" / "c0" / name);
  }
}

}  // namespace

TEST(LoadDataset, BlackFramesGiveZeroPixels) {
  const fs::path root = scratch("black");
  write_manifest(root, one_clip_manifest());
  write_black_frames(root, 4, 8);
  const Dataset ds = load_dataset(root);
  ASSERT_EQ(ds.size(), 1);
  EXPECT_EQ(ds.clips[0].shape, (ClipShape{4, 8, 8}));
  EXPECT_EQ(ds.clips[0].label_id, 0);
  EXPECT_TRUE((ds.clips[0].pixels == 0.0).all());
  EXPECT_EQ(ds.split, Split::Val);
}

TEST(LoadDataset, MissingClipDirectoryIsLoadError) {
  const fs::path root = scratch("missing");
  write_manifest(root, one_clip_manifest());
  EXPECT_THROW(load_dataset(root), LoadError);
}

TEST(LoadDataset, MissingManifestIsLoadError) { EXPECT_THROW(load_dataset(scratch("nomanifest")), LoadError); }

TEST(LoadDataset, UnknownLabelIsLabelError) {
  const fs::path root = scratch("label");
  write_manifest(root, one_clip_manifest("zebra"));
  write_black_frames(root, 4, 8);
  EXPECT_THROW(load_dataset(root), LabelError);
}

TEST(LoadDataset, MismatchedFrameSizeIsFormatError) {
  const fs::path root = scratch("size");
  write_manifest(root, one_clip_manifest());
  write_black_frames(root, 4, 8);
  write_png(RgbImage(9, 8, 0), root / "clips" / "c0" / "frame_00002.png");
  EXPECT_THROW(load_dataset(root), FormatError);
}

TEST(LoadDataset, MalformedManifestIsFormatError) {
  const fs::path root = scratch("malformed");
  std::ofstream(root / "manifest.json") << "{ not json";
  EXPECT_THROW(load_dataset(root), FormatError);
}

TEST(LoadDataset, SyntheticRoundTripIsBitwise) {
  const fs::path root = scratch("roundtrip");
  const auto pair = generate_synthetic({4, 2, 11}, 4, 2, {4, 12, 12}, Split::Val);
  save_dataset(pair.source, root);
  const Dataset back = load_dataset(root);
  ASSERT_EQ(back.size(), pair.source.size());
  EXPECT_EQ(back.ontology, pair.source.ontology);
  for (int i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.clips[i].clip_id, pair.source.clips[i].clip_id);
    EXPECT_EQ(back.clips[i].label_id, pair.source.clips[i].label_id);
    EXPECT_TRUE((back.clips[i].pixels == quantize8(pair.source.clips[i].pixels)).all());
    EXPECT_TRUE((back.clips[i].pixels == pair.source.clips[i].pixels).all());
  }
}

TEST(LabelOntology, DuplicateNamesRejected) {
  EXPECT_THROW(LabelOntology("x", {"a", "b", "a"}), LabelError);
  const LabelOntology o("x", {"a", "b"});
  EXPECT_EQ(o.index_of("b"), 1);
  EXPECT_THROW(o.index_of("c"), LabelError);
}

TEST(ClassOverlap, CountsSharedNames) {
  std::vector<std::string> a, b;
  for (int i = 0; i < 101; ++i) a.push_back("ucf" + std::to_string(i));
  for (int i = 0; i < 70; ++i) b.push_back("ucf" + std::to_string(i));
  for (int i = 0; i < 330; ++i) b.push_back("kin" + std::to_string(i));
  const auto o = class_overlap(LabelOntology("ucf", a), LabelOntology("kinetics", b));
  EXPECT_EQ(o.count, 70);
  EXPECT_DOUBLE_EQ(o.fraction_of_a, 70.0 / 101.0);

  const LabelOntology x("x", {"p", "q"}), y("y", {"r"});
  EXPECT_EQ(class_overlap(x, x).count, 2);
  EXPECT_DOUBLE_EQ(class_overlap(x, x).fraction_of_a, 1.0);
  EXPECT_EQ(class_overlap(x, y).count, 0);
  EXPECT_DOUBLE_EQ(class_overlap(x, y).fraction_of_a, 0.0);
}

TEST(GenerateSynthetic, OverlapIsExact) {
  const ClipShape shape{2, 8, 8};
  const auto none = generate_synthetic({4, 0, 7}, 4, 1, shape);
  EXPECT_EQ(class_overlap(none.source.ontology, none.target.ontology).count, 0);
  EXPECT_DOUBLE_EQ(class_overlap(none.source.ontology, none.target.ontology).fraction_of_a, 0.0);
  const auto all = generate_synthetic({4, 4, 7}, 8, 1, shape);
  EXPECT_EQ(class_overlap(all.source.ontology, all.target.ontology).count, 4);
  for (int common = 0; common <= 8; ++common) {
    const auto p = generate_synthetic({8, common, 3}, 8, 1, shape);
    EXPECT_EQ(class_overlap(p.source.ontology, p.target.ontology).count, common);
    EXPECT_EQ(p.source.ontology.size(), 8);
  }
}

TEST(GenerateSynthetic, TargetDoesNotDependOnOverlap) {
  const ClipShape shape{2, 8, 8};
  const auto a = generate_synthetic({8, 0, 5}, 8, 2, shape);
  const auto b = generate_synthetic({8, 4, 5}, 8, 2, shape);
  EXPECT_EQ(a.target.ontology, b.target.ontology);
  for (int i = 0; i < a.target.size(); ++i) EXPECT_TRUE((a.target.clips[i].pixels == b.target.clips[i].pixels).all());
}

TEST(GenerateSynthetic, DeterministicAndQuantized) {
  const ClipShape shape{4, 16, 16};
  const auto a = generate_synthetic({4, 2, 9}, 4, 3, shape);
  const auto b = generate_synthetic({4, 2, 9}, 4, 3, shape);
  ASSERT_EQ(a.source.size(), 12);
  for (int i = 0; i < a.source.size(); ++i) {
    EXPECT_TRUE((a.source.clips[i].pixels == b.source.clips[i].pixels).all());
    EXPECT_TRUE((a.source.clips[i].pixels == quantize8(a.source.clips[i].pixels)).all());
    EXPECT_NO_THROW(a.source.clips[i].validate());
  }
  const auto c = generate_synthetic({4, 2, 10}, 4, 3, shape);
  EXPECT_FALSE((a.source.clips[0].pixels == c.source.clips[0].pixels).all());
}

TEST(GenerateSynthetic, SplitsDiffer) {
  const ClipShape shape{2, 8, 8};
  const auto tr = generate_synthetic({4, 2, 9}, 4, 1, shape, Split::Train);
  const auto va = generate_synthetic({4, 2, 9}, 4, 1, shape, Split::Val);
  EXPECT_EQ(tr.source.ontology, va.source.ontology);
  EXPECT_FALSE((tr.source.clips[0].pixels == va.source.clips[0].pixels).all());
}

TEST(GenerateSynthetic, InvalidSpecsRejected) {
  const ClipShape shape{2, 8, 8};
  EXPECT_THROW(generate_synthetic({4, 5, 1}, 8, 1, shape), ParameterError);
  EXPECT_THROW(generate_synthetic({4, -1, 1}, 8, 1, shape), ParameterError);
  EXPECT_THROW(generate_synthetic({60, 0, 1}, 40, 1, shape), ParameterError);
  EXPECT_THROW(generate_synthetic({4, 2, 1}, 4, 0, shape), ParameterError);
  EXPECT_THROW(generate_synthetic({4, 2, 1}, 4, 1, {2, 2, 2}), ParameterError);
  EXPECT_EQ(synthetic_motif_count(), 96);
}

TEST(VideoClip, ValidateRejectsOutOfRange) {
  VideoClip c({1, 2, 2}, 0, "x");
  EXPECT_NO_THROW(c.validate());
  c.pixels[3] = 1.5;
  EXPECT_THROW(c.validate(), FormatError);
}
