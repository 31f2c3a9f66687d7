#ifndef VRA_CONFIG_HPP
#define VRA_CONFIG_HPP

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vra/attacks.hpp"
#include "vra/train.hpp"

namespace vra {

struct DataConfig {
  ClipShape shape;
  int n_source_classes = 8;
  int n_common_classes = 4;
  int n_target_classes = 8;
  int train_clips_per_class = 64;
  int val_clips_per_class = 40;
  std::uint64_t seed = 1;

  OverlapSpec overlap() const { return {n_source_classes, n_common_classes, seed}; }
};

/// One experiment: data generation, the two models, the attack list and the
/// protocol knobs. Relative paths are resolved against `output_dir`.
struct ExperimentConfig {
  std::string output_dir = "runs/desk";
  std::string data_dir = "data";
  std::string source_checkpoint = "source.ckpt";
  std::string target_checkpoint = "target.ckpt";
  DataConfig data;
  Architecture source_architecture = Architecture::desk(0);
  Architecture target_architecture = Architecture::desk(0);
  TrainConfig source_train = TrainConfig::desk();
  TrainConfig target_train = [] {
    TrainConfig c = TrainConfig::desk();
    c.seed = 7;
    return c;
  }();
  AttackConfig attack;
  std::vector<std::string> attacks{"VRA", "VRA-random", "random-perturbation"};
  std::vector<int> budgets{1, 10, 100};
  std::vector<int> overlap_levels{0, 2, 4};
  /// 0 evaluates every clip of the target validation split.
  int max_eval_clips = 0;
  /// Per-clip hard cap on oracle calls; exhausting it ends that clip's attack.
  std::optional<std::int64_t> oracle_query_limit;
  /// 0 falls back to VRA_WORKERS, then to 1.
  int workers = 0;

  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path data_path() const { return resolve(data_dir); }
  std::filesystem::path source_path() const { return resolve(source_checkpoint); }
  std::filesystem::path target_path() const { return resolve(target_checkpoint); }

  /// Throws ParameterError naming the offending key.
  void validate() const;
};

/// Attack names accepted in `attacks`.
const std::vector<std::string>& known_attacks();

void to_json(nlohmann::json& j, const DataConfig& c);
void from_json(const nlohmann::json& j, DataConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Sets a dotted key ("attack.q_max=10"); the value is parsed as JSON and
/// taken as a string when that fails. Throws ParameterError.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Parses and validates; throws LoadError for a missing file and
/// ParameterError for schema violations.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides = {});
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// FNV-1a 64 of the serialized resolved config without `workers`, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace vra

#endif  // VRA_CONFIG_HPP
