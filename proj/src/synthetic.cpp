#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "vra/video.hpp"

namespace vra {
namespace {

enum class ShapeKind { Square, Circle, Triangle, Bar };
enum class Motion { Left, Right, Up, Down, Still, Rotate };

constexpr std::array<ShapeKind, 4> kShapes{ShapeKind::Square, ShapeKind::Circle, ShapeKind::Triangle, ShapeKind::Bar};
constexpr std::array<Motion, 6> kMotions{Motion::Left, Motion::Right, Motion::Up, Motion::Down, Motion::Still, Motion::Rotate};
constexpr std::array<const char*, 4> kShapeNames{"square", "circle", "triangle", "bar"};
constexpr std::array<const char*, 6> kMotionNames{"left", "right", "up", "down", "still", "rotate"};
constexpr std::array<const char*, 4> kColorNames{"warm", "cool", "green", "violet"};
constexpr std::array<std::array<double, 3>, 4> kColorBase{
    {{0.85, 0.40, 0.20}, {0.20, 0.50, 0.85}, {0.30, 0.80, 0.30}, {0.75, 0.30, 0.80}}};

// Object colors sit this far from the background toward the bucket color.
constexpr double kContrast = 0.5;

constexpr int kNumMotifs = int(kShapes.size() * kMotions.size() * kColorNames.size());

struct Motif {
  ShapeKind shape;
  Motion motion;
  int color;
  std::string name;
};

Motif motif(int id) {
  const int colors = int(kColorNames.size());
  const int color = id % colors;
  const int motion = (id / colors) % 6;
  const int shape = id / (colors * 6);
  return Motif{kShapes[shape], kMotions[motion], color,
               std::string(kColorNames[color]) + "_" + kShapeNames[shape] + "_" + kMotionNames[motion]};
}

/// Point-in-shape test in shape-local coordinates scaled by the shape radius.
/// Returns 0 outside, 1 on the body, 2 on the circle's marker spot.
int shape_hit(ShapeKind shape, double u, double v) {
  switch (shape) {
    case ShapeKind::Square:
      return (std::abs(u) <= 0.85 && std::abs(v) <= 0.85) ? 1 : 0;
    case ShapeKind::Circle: {
      if (u * u + v * v > 1.0) return 0;
      const double du = u - 0.45;
      return (du * du + v * v <= 0.35 * 0.35) ? 2 : 1;
    }
    case ShapeKind::Triangle: {
      // Apex up (negative v in image coordinates).
      if (v > 0.6) return 0;
      const double half_width = (v + 1.0) * 0.6;
      return (v >= -1.0 && std::abs(u) <= half_width) ? 1 : 0;
    }
    case ShapeKind::Bar:
      return (std::abs(u) <= 1.15 && std::abs(v) <= 0.35) ? 1 : 0;
  }
  return 0;
}

VideoClip render_clip(const Motif& m, ClipShape shape, std::uint64_t seed, int label, std::string clip_id) {
  Rng rng(seed);
  VideoClip clip(shape, label, std::move(clip_id));
  const double H = shape.height, W = shape.width;
  const double scale = std::min(H, W) / 32.0;

  const double background = rng.uniform(0.30, 0.60);
  const double radius = rng.uniform(4.0, 5.5) * scale;
  std::array<double, 3> color;
  for (int c = 0; c < 3; ++c) color[c] = std::clamp(kColorBase[m.color][c] + rng.uniform(-0.08, 0.08), 0.0, 1.0);

  const double speed = rng.uniform(1.3, 2.0) * scale;
  const double travel = speed * std::max(shape.frames - 1, 0);
  double vx = 0.0, vy = 0.0;
  switch (m.motion) {
    case Motion::Left: vx = -speed; break;
    case Motion::Right: vx = speed; break;
    case Motion::Up: vy = -speed; break;
    case Motion::Down: vy = speed; break;
    default: break;
  }
  // Start positions keep the whole trajectory inside the frame where possible.
  auto start = [&](double extent, double v) {
    const double lo = radius + (v < 0 ? travel : 0.0);
    const double hi = extent - radius - (v > 0 ? travel : 0.0);
    return hi > lo ? rng.uniform(lo, hi) : extent / 2.0 - v * std::max(shape.frames - 1, 0) / 2.0;
  };
  const double x0 = start(W, vx);
  const double y0 = start(H, vy);
  const double angle0 = m.motion == Motion::Rotate ? rng.uniform(0.0, 6.283185307179586) : rng.uniform(-0.15, 0.15);
  const double spin = m.motion == Motion::Rotate ? rng.uniform(0.30, 0.45) * (rng.bernoulli(0.5) ? 1.0 : -1.0) : 0.0;

  // Static texture keeps the background from being trivially flat.
  Eigen::ArrayXd texture(Eigen::Index(shape.height) * shape.width);
  for (auto& t : texture) t = 0.04 * rng.normal();

  constexpr int kSub = 2;
  for (int t = 0; t < shape.frames; ++t) {
    const double cx = x0 + vx * t, cy = y0 + vy * t;
    const double angle = angle0 + spin * t;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int h = 0; h < shape.height; ++h) {
      for (int w = 0; w < shape.width; ++w) {
        double body = 0.0, spot = 0.0;
        for (int sy = 0; sy < kSub; ++sy) {
          for (int sx = 0; sx < kSub; ++sx) {
            const double px = w + (sx + 0.5) / kSub - cx;
            const double py = h + (sy + 0.5) / kSub - cy;
            const double u = (ca * px + sa * py) / radius;
            const double v = (-sa * px + ca * py) / radius;
            const int hit = shape_hit(m.shape, u, v);
            body += hit == 1;
            spot += hit == 2;
          }
        }
        body /= kSub * kSub;
        spot /= kSub * kSub;
        const double bg = background + texture[Eigen::Index(h) * shape.width + w] + 0.015 * rng.normal();
        for (int c = 0; c < 3; ++c) {
          const double fill = bg + kContrast * (color[c] - bg);
          const double mark = bg + kContrast * (0.25 * color[c] - bg);
          const double value = (1.0 - body - spot) * bg + body * fill + spot * mark;
          clip.at(t, h, w, c) = std::clamp(value, 0.0, 1.0);
        }
      }
    }
  }
  clip.pixels = quantize8(clip.pixels);
  return clip;
}

Dataset render_domain(const std::vector<int>& motif_ids, const std::string& domain, std::uint64_t seed,
                      int clips_per_class, ClipShape shape, Split split) {
  std::vector<std::string> names;
  for (int id : motif_ids) names.push_back(motif(id).name);
  Dataset ds;
  ds.ontology = LabelOntology("synthetic-" + domain, names);
  ds.split = split;
  const std::uint64_t domain_tag = domain == "source" ? 0x5ULL : 0x7ULL;
  const std::uint64_t split_tag = split == Split::Train ? 0x11ULL : 0x13ULL;
  char buf[64];
  for (int label = 0; label < int(motif_ids.size()); ++label) {
    for (int i = 0; i < clips_per_class; ++i) {
      const std::uint64_t clip_seed =
          mix_seed(mix_seed(mix_seed(seed, domain_tag), split_tag), std::uint64_t(motif_ids[label]) * 100003ULL + i);
      std::snprintf(buf, sizeof(buf), "%s-%s-%02d-%04d", domain.c_str(), to_string(split).c_str(), label, i);
      ds.clips.push_back(render_clip(motif(motif_ids[label]), shape, clip_seed, label, buf));
    }
  }
  return ds;
}

}  // namespace

int synthetic_motif_count() { return kNumMotifs; }

SyntheticPair generate_synthetic(const OverlapSpec& spec, int n_target_classes, int clips_per_class, ClipShape shape,
                                 Split split) {
  if (spec.n_common_classes < 0 || spec.n_common_classes > spec.n_source_classes ||
      spec.n_common_classes > n_target_classes) {
    throw ParameterError("n_common_classes must lie in [0, min(n_source_classes, n_target_classes)]");
  }
  if (spec.n_source_classes < 1 || n_target_classes < 1) throw ParameterError("ontologies need at least one class");
  if (n_target_classes + spec.n_source_classes - spec.n_common_classes > kNumMotifs) {
    throw ParameterError("requested ontologies need more than " + std::to_string(kNumMotifs) + " distinct motifs");
  }
  if (clips_per_class < 1) throw ParameterError("clips_per_class must be positive");
  if (shape.frames < 1 || shape.height < 4 || shape.width < 4) throw ParameterError("clip shape too small");

  // A seeded region of 2 shapes x 3 motions x 2 colors hosts the target
  // classes; classes private to the source come from outside it first, so
  // they share as few factor values with the target as the grid allows.
  Rng rng(mix_seed(spec.seed, 0xC1A55ULL));
  auto shuffled = [&rng](int n) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(v[i], v[rng.below(i + 1)]);
    return v;
  };
  const std::vector<int> shape_rank = shuffled(int(kShapes.size()));
  const std::vector<int> motion_rank = shuffled(int(kMotions.size()));
  const std::vector<int> color_rank = shuffled(int(kColorNames.size()));
  const std::vector<int> pool = shuffled(kNumMotifs);
  auto region_score = [&](int id) {
    const Motif m = motif(id);
    return int(shape_rank[int(m.shape)] < 2) + int(motion_rank[int(m.motion)] < 3) + int(color_rank[m.color] < 2);
  };
  std::vector<int> ranked = pool;
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) { return region_score(a) > region_score(b); });

  std::vector<int> target(ranked.begin(), ranked.begin() + n_target_classes);
  std::vector<int> source(target.begin(), target.begin() + spec.n_common_classes);
  source.insert(source.end(), ranked.rbegin(),
                ranked.rbegin() + (spec.n_source_classes - spec.n_common_classes));

  SyntheticPair out;
  out.source = render_domain(source, "source", spec.seed, clips_per_class, shape, split);
  out.target = render_domain(target, "target", spec.seed, clips_per_class, shape, split);
  return out;
}

}  // namespace vra
