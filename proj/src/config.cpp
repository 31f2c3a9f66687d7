#include "vra/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "vra/serialization.hpp"

namespace vra {

using nlohmann::json;

namespace {

void from_json_architecture(const json& j, Architecture& a, const std::string& where) {
  if (j.is_string()) {
    const std::string preset = j.get<std::string>();
    if (preset == "desk") {
      a = Architecture::desk(0);
    } else if (preset == "linear") {
      a = Architecture::linear(0);
    } else {
      throw ParameterError(where + ": unknown architecture preset '" + preset + "'");
    }
    return;
  }
  from_json(j, a);
}

bool escapes(const std::filesystem::path& p) {
  for (const auto& part : p.lexically_normal()) {
    if (part == "..") return true;
  }
  return false;
}

}  // namespace

const std::vector<std::string>& known_attacks() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"VRA", "VRA-random", "sparse-VRA", "targeted-LL-FGSM", "random-perturbation"};
    for (FgsmVariant v : all_fgsm_variants()) n.push_back(to_string(v));
    return n;
  }();
  return names;
}

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : std::filesystem::path(output_dir) / path;
}

void ExperimentConfig::validate() const {
  if (output_dir.empty()) throw ParameterError("output_dir must not be empty");
  for (const auto& [key, value] : {std::pair{"data_dir", &data_dir}, std::pair{"source_checkpoint", &source_checkpoint},
                                   std::pair{"target_checkpoint", &target_checkpoint}}) {
    const std::filesystem::path p(*value);
    if (value->empty()) throw ParameterError(std::string(key) + " must not be empty");
    if (p.is_absolute() || escapes(p)) {
      throw ParameterError(std::string(key) + " must be a relative path inside output_dir, got '" + *value + "'");
    }
  }
  if (data.n_target_classes < 2) throw ParameterError("data.n_target_classes must be >= 2");
  if (data.n_source_classes < 2) throw ParameterError("data.n_source_classes must be >= 2");
  if (data.n_common_classes < 0 || data.n_common_classes > std::min(data.n_source_classes, data.n_target_classes)) {
    throw ParameterError("data.n_common_classes must be in [0, min(n_source_classes, n_target_classes)]");
  }
  if (data.train_clips_per_class < 1) throw ParameterError("data.train_clips_per_class must be >= 1");
  if (data.val_clips_per_class < 1) throw ParameterError("data.val_clips_per_class must be >= 1");
  source_train.validate();
  target_train.validate();
  attack.validate();
  if (attacks.empty()) throw ParameterError("attacks must list at least one attack");
  for (const auto& a : attacks) {
    if (std::find(known_attacks().begin(), known_attacks().end(), a) == known_attacks().end()) {
      throw ParameterError("attacks: unknown attack '" + a + "'");
    }
  }
  if (budgets.empty()) throw ParameterError("budgets must not be empty");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw ParameterError("budgets must be >= 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) throw ParameterError("budgets must be strictly increasing");
  }
  const int private_classes = data.n_source_classes - data.n_common_classes;
  for (int level : overlap_levels) {
    if (level < 0 || level > data.n_target_classes) {
      throw ParameterError("overlap_levels: level " + std::to_string(level) + " is out of range");
    }
    if (private_classes + level < 1) {
      throw ParameterError("overlap_levels: level 0 needs data.n_source_classes > data.n_common_classes");
    }
  }
  if (max_eval_clips < 0) throw ParameterError("max_eval_clips must be >= 0");
  if (oracle_query_limit && *oracle_query_limit < 0) throw ParameterError("oracle_query_limit must be >= 0");
  if (workers < 0) throw ParameterError("workers must be >= 0");
}

void to_json(json& j, const DataConfig& c) {
  j = json{{"frames", c.shape.frames},
           {"height", c.shape.height},
           {"width", c.shape.width},
           {"n_source_classes", c.n_source_classes},
           {"n_common_classes", c.n_common_classes},
           {"n_target_classes", c.n_target_classes},
           {"train_clips_per_class", c.train_clips_per_class},
           {"val_clips_per_class", c.val_clips_per_class},
           {"seed", c.seed}};
}

void from_json(const json& j, DataConfig& c) {
  const std::string w = "data";
  require_keys(j,
               {"frames", "height", "width", "n_source_classes", "n_common_classes", "n_target_classes",
                "train_clips_per_class", "val_clips_per_class", "seed"},
               w);
  read_key(j, "frames", c.shape.frames, w);
  read_key(j, "height", c.shape.height, w);
  read_key(j, "width", c.shape.width, w);
  read_key(j, "n_source_classes", c.n_source_classes, w);
  read_key(j, "n_common_classes", c.n_common_classes, w);
  read_key(j, "n_target_classes", c.n_target_classes, w);
  read_key(j, "train_clips_per_class", c.train_clips_per_class, w);
  read_key(j, "val_clips_per_class", c.val_clips_per_class, w);
  read_key(j, "seed", c.seed, w);
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"output_dir", c.output_dir},
           {"data_dir", c.data_dir},
           {"source_checkpoint", c.source_checkpoint},
           {"target_checkpoint", c.target_checkpoint},
           {"data", c.data},
           {"source_architecture", c.source_architecture},
           {"target_architecture", c.target_architecture},
           {"source_train", c.source_train},
           {"target_train", c.target_train},
           {"attack", c.attack},
           {"attacks", c.attacks},
           {"budgets", c.budgets},
           {"overlap_levels", c.overlap_levels},
           {"max_eval_clips", c.max_eval_clips},
           {"oracle_query_limit", c.oracle_query_limit ? json(*c.oracle_query_limit) : json(nullptr)},
           {"workers", c.workers}};
}

void from_json(const json& j, ExperimentConfig& c) {
  const std::string w = "config";
  require_keys(j,
               {"output_dir", "data_dir", "source_checkpoint", "target_checkpoint", "data", "source_architecture",
                "target_architecture", "source_train", "target_train", "attack", "attacks", "budgets",
                "overlap_levels", "max_eval_clips", "oracle_query_limit", "workers"},
               w);
  read_key(j, "output_dir", c.output_dir, w);
  read_key(j, "data_dir", c.data_dir, w);
  read_key(j, "source_checkpoint", c.source_checkpoint, w);
  read_key(j, "target_checkpoint", c.target_checkpoint, w);
  if (j.contains("data")) from_json(j["data"], c.data);
  if (j.contains("source_architecture")) {
    from_json_architecture(j["source_architecture"], c.source_architecture, "source_architecture");
  }
  if (j.contains("target_architecture")) {
    from_json_architecture(j["target_architecture"], c.target_architecture, "target_architecture");
  }
  if (j.contains("source_train")) from_json(j["source_train"], c.source_train);
  if (j.contains("target_train")) from_json(j["target_train"], c.target_train);
  if (j.contains("attack")) from_json(j["attack"], c.attack);
  read_key(j, "attacks", c.attacks, w);
  read_key(j, "budgets", c.budgets, w);
  read_key(j, "overlap_levels", c.overlap_levels, w);
  read_key(j, "max_eval_clips", c.max_eval_clips, w);
  if (j.contains("oracle_query_limit")) {
    if (j["oracle_query_limit"].is_null()) {
      c.oracle_query_limit.reset();
    } else {
      std::int64_t limit = 0;
      read_key(j, "oracle_query_limit", limit, w);
      c.oracle_query_limit = limit;
    }
  }
  read_key(j, "workers", c.workers, w);
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ParameterError("override '" + assignment + "' must have the form dotted.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ParameterError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ParameterError("override key '" + key + "' descends into a non-object value");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  from_json(j, cfg);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return experiment_config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = cfg;
  j.erase("workers");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vra
