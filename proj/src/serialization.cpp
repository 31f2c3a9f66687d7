#include "vra/serialization.hpp"

namespace vra {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ParameterError("unknown key '" + where + "." + key + "'");
  }
}

std::string to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "flatten"; }

Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::Mean;
  if (s == "flatten") return Pooling::Flatten;
  throw ParameterError("unknown pooling '" + s + "' (expected mean or flatten)");
}

std::string to_string(DirectionMode m) { return m == DirectionMode::Orthogonal ? "orthogonal" : "random"; }

DirectionMode direction_mode_from_string(const std::string& s) {
  if (s == "orthogonal") return DirectionMode::Orthogonal;
  if (s == "random") return DirectionMode::Random;
  throw ParameterError("unknown direction mode '" + s + "' (expected orthogonal or random)");
}

void to_json(json& j, const BlockSpec& b) { j = json{{"channels", b.channels}, {"stride", b.stride}}; }

void from_json(const json& j, BlockSpec& b) {
  require_keys(j, {"channels", "stride"}, "block");
  read_key(j, "channels", b.channels, "block");
  read_key(j, "stride", b.stride, "block");
}

void to_json(json& j, const Architecture& a) {
  j = json{{"blocks", a.blocks},
           {"num_classes", a.num_classes},
           {"input_shift", a.input_shift},
           {"input_scale", a.input_scale}};
}

void from_json(const json& j, Architecture& a) {
  require_keys(j, {"blocks", "num_classes", "input_shift", "input_scale"}, "architecture");
  if (j.contains("blocks")) {
    if (!j["blocks"].is_array()) throw ParameterError("architecture.blocks must be an array");
    a.blocks.clear();
    for (const auto& b : j["blocks"]) a.blocks.push_back(b.get<BlockSpec>());
  }
  read_key(j, "num_classes", a.num_classes, "architecture");
  read_key(j, "input_shift", a.input_shift, "architecture");
  read_key(j, "input_scale", a.input_scale, "architecture");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"peak_lr", c.peak_lr},
           {"warmup_epochs", c.warmup_epochs},
           {"batch_size", c.batch_size},
           {"frames_per_clip", c.frames_per_clip},
           {"random_crop", c.random_crop},
           {"crop_padding", c.crop_padding},
           {"horizontal_flip", c.horizontal_flip},
           {"momentum", c.momentum},
           {"weight_decay", c.weight_decay},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  const std::string w = "train";
  require_keys(j,
               {"epochs", "peak_lr", "warmup_epochs", "batch_size", "frames_per_clip", "random_crop", "crop_padding",
                "horizontal_flip", "momentum", "weight_decay", "seed"},
               w);
  read_key(j, "epochs", c.epochs, w);
  read_key(j, "peak_lr", c.peak_lr, w);
  read_key(j, "warmup_epochs", c.warmup_epochs, w);
  read_key(j, "batch_size", c.batch_size, w);
  read_key(j, "frames_per_clip", c.frames_per_clip, w);
  read_key(j, "random_crop", c.random_crop, w);
  read_key(j, "crop_padding", c.crop_padding, w);
  read_key(j, "horizontal_flip", c.horizontal_flip, w);
  read_key(j, "momentum", c.momentum, w);
  read_key(j, "weight_decay", c.weight_decay, w);
  read_key(j, "seed", c.seed, w);
}

void to_json(json& j, const FeatureSpec& s) {
  j = json{{"layers", s.layers},
           {"timesteps", s.timesteps},
           {"pooling", to_string(s.pooling)},
           {"normalize", s.normalize}};
}

void from_json(const json& j, FeatureSpec& s) {
  const std::string w = "attack.features";
  require_keys(j, {"layers", "timesteps", "pooling", "normalize"}, w);
  read_key(j, "layers", s.layers, w);
  read_key(j, "timesteps", s.timesteps, w);
  std::string pooling = to_string(s.pooling);
  read_key(j, "pooling", pooling, w);
  s.pooling = pooling_from_string(pooling);
  read_key(j, "normalize", s.normalize, w);
}

void to_json(json& j, const AttackConfig& c) {
  j = json{{"epsilon", c.epsilon},
           {"q_max", c.q_max},
           {"direction_mode", to_string(c.direction_mode)},
           {"features", c.features},
           {"sparsity_lambda", c.sparsity_lambda},
           {"n_iters", c.n_iters},
           {"seed", c.seed},
           {"clip_to_valid_range", c.clip_to_valid_range},
           {"momentum_decay", c.momentum_decay},
           {"diversity_prob", c.diversity_prob},
           {"diversity_min_scale", c.diversity_min_scale}};
}

void from_json(const json& j, AttackConfig& c) {
  const std::string w = "attack";
  require_keys(j,
               {"epsilon", "q_max", "direction_mode", "features", "sparsity_lambda", "n_iters", "seed",
                "clip_to_valid_range", "momentum_decay", "diversity_prob", "diversity_min_scale"},
               w);
  read_key(j, "epsilon", c.epsilon, w);
  read_key(j, "q_max", c.q_max, w);
  std::string mode = to_string(c.direction_mode);
  read_key(j, "direction_mode", mode, w);
  c.direction_mode = direction_mode_from_string(mode);
  if (j.contains("features")) from_json(j["features"], c.features);
  read_key(j, "sparsity_lambda", c.sparsity_lambda, w);
  read_key(j, "n_iters", c.n_iters, w);
  read_key(j, "seed", c.seed, w);
  read_key(j, "clip_to_valid_range", c.clip_to_valid_range, w);
  read_key(j, "momentum_decay", c.momentum_decay, w);
  read_key(j, "diversity_prob", c.diversity_prob, w);
  read_key(j, "diversity_min_scale", c.diversity_min_scale, w);
}

}  // namespace vra
