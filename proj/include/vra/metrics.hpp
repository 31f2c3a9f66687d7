#ifndef VRA_METRICS_HPP
#define VRA_METRICS_HPP

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vra/config.hpp"

namespace vra {

struct Metrics {
  double asr = 0.0;
  double dr = 0.0;
};

/// asr = 1 - adv, dr = (clean - adv) / clean. Requires 0 <= adv <= clean <= 1;
/// throws ParameterError otherwise and DegenerateInputError when clean is 0.
Metrics compute_metrics(double clean_top1, double adv_top1);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval at 95%; [0, 1] when n == 0.
Interval wilson_interval(long successes, long n);

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Outcome of one attack on one evaluation clip.
struct AttackRecord {
  int clip_index = 0;
  std::string clip_id;
  int true_label = -1;
  int clean_label = -1;
  bool clean_correct = false;
  bool success = false;
  int queries_used = 0;
  int final_label = -1;
  bool budget_exhausted = false;
  double linf = 0.0;
  double l1 = 0.0;
};

struct MetricsReport {
  std::string attack;
  int budget = 0;
  /// Queries the attack may issue at this budget.
  int queries_cap = 0;
  long n_eval = 0;
  long n_clean_errors = 0;
  double clean_top1 = 0.0;
  double adv_top1 = 0.0;
  double asr = 0.0;
  double dr = 0.0;
  Interval asr_ci;
  Interval dr_ci;
  /// Mean perturbation queries over successful clips; NaN without successes.
  double mean_queries_success = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<AttackRecord> records;
};

/// Builds a report from per-clip records, counting a success only when it
/// happened within `budget` queries.
MetricsReport summarize(const std::string& attack, int budget, int queries_cap,
                        const std::vector<AttackRecord>& records, double epsilon, std::uint64_t seed,
                        const std::string& hash);

/// Runs one named attack (see known_attacks) on a clip.
AttackResult run_named_attack(const std::string& name, const Network<float>& source, TargetOracle& oracle,
                              const VideoClip& clip, int true_label, const AttackConfig& cfg,
                              std::optional<int> clean_prediction);

/// Largest number of queries `name` can use under `budget`.
int attack_query_cap(const std::string& name, int budget, const Network<float>& source);

/// Worker count: cfg.workers, else VRA_WORKERS, else 1.
int resolve_workers(int configured);

/// Runs fn(i) for i in [0, n) on `workers` threads; the first exception is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// Evaluation clips of a dataset under cfg.max_eval_clips.
std::vector<const VideoClip*> evaluation_clips(const Dataset& eval, int max_eval_clips);

/// Every attack at every budget. Each attack runs once per clip at its largest
/// budget and smaller budgets replay the recorded success index. Fresh oracles
/// are created per clip and attack, so clip order does not affect results.
std::vector<MetricsReport> run_budget_sweep(const ExperimentConfig& cfg, const Network<float>& source,
                                            const Network<float>& target, const Dataset& eval);

/// Loads the checkpoints and the target validation split named by `cfg`.
std::vector<MetricsReport> run_budget_sweep(const ExperimentConfig& cfg);

struct OverlapRow {
  int overlap_count = 0;
  double overlap_fraction = 0.0;
  double source_val_accuracy = 0.0;
  double clean_top1 = 0.0;
  double dr = 0.0;
  double random_dr = 0.0;
  long n_eval = 0;
};

struct OverlapTable {
  std::vector<OverlapRow> rows;
  double target_val_accuracy = 0.0;
  int queries = 0;
  /// Between overlap_count and dr.
  double spearman_rho = 0.0;
};

/// One spec per entry of cfg.overlap_levels: the source-only classes of
/// cfg.data stay fixed and each level adds that many shared classes, so the
/// source ontology has (n_source_classes - n_common_classes) + level classes.
std::vector<OverlapSpec> overlap_levels(const ExperimentConfig& cfg);

/// Per level: generate data, train a source model, attack the target with VRA
/// and the random baseline at cfg.attack.q_max queries. Needs at least three
/// levels including 0; a failing level is rethrown as LevelError.
OverlapTable run_overlap_experiment(const std::vector<OverlapSpec>& levels, const ExperimentConfig& cfg,
                                    const std::function<void(const std::string&)>& log = {});

/// results.csv, summary.txt and dr_vs_queries.png under `output_dir`.
/// Throws ParameterError when `reports` is empty and IoError when a file cannot be written.
void emit_report(const std::vector<MetricsReport>& reports, const std::filesystem::path& output_dir);

/// Parses a results.csv written by emit_report; records are not stored.
std::vector<MetricsReport> read_results_csv(const std::filesystem::path& path);

/// overlap.csv plus a plain-text summary, overlap_summary.txt.
void emit_overlap_table(const OverlapTable& table, const std::filesystem::path& output_dir);

/// Column order of results.csv.
const std::vector<std::string>& results_columns();

}  // namespace vra

#endif  // VRA_METRICS_HPP
