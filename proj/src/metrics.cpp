#include "vra/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "vra/plot.hpp"

namespace vra {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

bool is_fgsm_variant(const std::string& name) {
  try {
    fgsm_variant_from_string(name);
    return true;
  } catch (const ParameterError&) {
    return false;
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<AttackRecord> attack_clips(const std::string& name, int cap, const ExperimentConfig& cfg,
                                       const Network<float>& source,
                                       const std::shared_ptr<const HardLabelClassifier>& target,
                                       const std::vector<const VideoClip*>& clips, const std::vector<int>& clean,
                                       int workers) {
  std::vector<AttackRecord> records(clips.size());
  parallel_for(int(clips.size()), workers, [&](int i) {
    const VideoClip& clip = *clips[i];
    AttackRecord& rec = records[i];
    rec.clip_index = i;
    rec.clip_id = clip.clip_id;
    rec.true_label = clip.label_id;
    rec.clean_label = clean[i];
    rec.clean_correct = clean[i] == clip.label_id;
    rec.final_label = clean[i];
    if (!rec.clean_correct) return;
    AttackConfig acfg = cfg.attack;
    acfg.q_max = cap;
    acfg.seed = mix_seed(cfg.attack.seed, std::uint64_t(i));
    TargetOracle oracle(target, cfg.oracle_query_limit);
    const AttackResult r = run_named_attack(name, source, oracle, clip, clip.label_id, acfg, clean[i]);
    rec.success = r.success;
    rec.queries_used = r.queries_used;
    rec.final_label = r.final_label;
    const auto remaining = oracle.remaining();
    rec.budget_exhausted = !r.success && remaining && *remaining == 0 && r.queries_used < cap;
    if (r.perturbation) {
      rec.linf = r.perturbation->abs().maxCoeff();
      rec.l1 = r.perturbation->abs().sum();
    }
  });
  return records;
}

std::vector<int> clean_labels(const Network<float>& target, const std::vector<const VideoClip*>& clips, int workers) {
  std::vector<int> labels(clips.size());
  parallel_for(int(clips.size()), workers, [&](int i) { labels[i] = target.predict(*clips[i]); });
  return labels;
}

}  // namespace

Metrics compute_metrics(double clean_top1, double adv_top1) {
  if (!(clean_top1 >= 0.0 && clean_top1 <= 1.0)) throw ParameterError("clean_top1 must be in [0, 1]");
  if (!(adv_top1 >= 0.0 && adv_top1 <= clean_top1)) throw ParameterError("adv_top1 must be in [0, clean_top1]");
  if (clean_top1 == 0.0) throw DegenerateInputError("deception rate is undefined when clean_top1 is 0");
  return {1.0 - adv_top1, (clean_top1 - adv_top1) / clean_top1};
}

Interval wilson_interval(long successes, long n) {
  if (n <= 0) return {0.0, 1.0};
  const double p = double(successes) / double(n);
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * double(n) * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ParameterError("spearman needs equally long inputs");
  if (x.size() < 2) return std::nan("");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

MetricsReport summarize(const std::string& attack, int budget, int queries_cap,
                        const std::vector<AttackRecord>& records, double epsilon, std::uint64_t seed,
                        const std::string& hash) {
  MetricsReport r;
  r.attack = attack;
  r.budget = budget;
  r.queries_cap = queries_cap;
  r.epsilon = epsilon;
  r.seed = seed;
  r.config_hash = hash;
  r.n_eval = long(records.size());
  long correct = 0, fooled = 0;
  double query_sum = 0.0;
  for (const auto& rec : records) {
    AttackRecord view = rec;
    if (!rec.clean_correct) {
      ++r.n_clean_errors;
    } else {
      ++correct;
      view.success = rec.success && rec.queries_used <= queries_cap;
      if (view.success) {
        ++fooled;
        query_sum += rec.queries_used;
      } else if (rec.success) {
        view.queries_used = queries_cap;
        view.final_label = rec.true_label;
      }
    }
    r.records.push_back(std::move(view));
  }
  r.mean_queries_success = fooled > 0 ? query_sum / fooled : std::nan("");
  if (r.n_eval == 0) {
    r.clean_top1 = r.adv_top1 = r.asr = r.dr = std::nan("");
    return r;
  }
  r.clean_top1 = double(correct) / r.n_eval;
  r.adv_top1 = double(correct - fooled) / r.n_eval;
  r.asr = 1.0 - r.adv_top1;
  r.dr = correct > 0 ? double(fooled) / correct : std::nan("");
  r.asr_ci = wilson_interval(r.n_eval - (correct - fooled), r.n_eval);
  r.dr_ci = wilson_interval(fooled, correct);
  return r;
}

AttackResult run_named_attack(const std::string& name, const Network<float>& source, TargetOracle& oracle,
                              const VideoClip& clip, int true_label, const AttackConfig& cfg,
                              std::optional<int> clean_prediction) {
  if (name == "VRA" || name == "VRA-random") {
    AttackConfig c = cfg;
    c.direction_mode = name == "VRA" ? DirectionMode::Orthogonal : DirectionMode::Random;
    return vra_attack(source, oracle, clip, true_label, c, clean_prediction);
  }
  if (name == "sparse-VRA") return sparse_vra_attack(source, oracle, clip, true_label, cfg, clean_prediction);
  if (name == "targeted-LL-FGSM") return targeted_ll_query_attack(source, oracle, clip, true_label, cfg, clean_prediction);
  if (name == "random-perturbation") return random_perturbation_attack(oracle, clip, true_label, cfg, clean_prediction);
  if (is_fgsm_variant(name)) {
    return fgsm_family_attack(source, oracle, clip, true_label, fgsm_variant_from_string(name), cfg, clean_prediction);
  }
  throw ParameterError("unknown attack '" + name + "'");
}

int attack_query_cap(const std::string& name, int budget, const Network<float>& source) {
  if (is_fgsm_variant(name)) return 1;
  if (name == "targeted-LL-FGSM") return std::min(budget, source.architecture().num_classes);
  return budget;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("VRA_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return int(v);
    throw ParameterError("VRA_WORKERS must be a positive integer, got '" + std::string(env) + "'");
  }
  return 1;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<const VideoClip*> evaluation_clips(const Dataset& eval, int max_eval_clips) {
  std::vector<const VideoClip*> clips;
  for (const auto& c : eval.clips) {
    if (max_eval_clips > 0 && int(clips.size()) >= max_eval_clips) break;
    clips.push_back(&c);
  }
  return clips;
}

std::vector<MetricsReport> run_budget_sweep(const ExperimentConfig& cfg, const Network<float>& source,
                                            const Network<float>& target, const Dataset& eval) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const int workers = resolve_workers(cfg.workers);
  const auto clips = evaluation_clips(eval, cfg.max_eval_clips);
  const auto classifier =
      std::make_shared<NetworkClassifier<float>>(std::make_shared<const Network<float>>(target));
  const auto clean = clean_labels(target, clips, workers);

  std::vector<MetricsReport> reports;
  for (const auto& name : cfg.attacks) {
    const int cap = attack_query_cap(name, cfg.budgets.back(), source);
    const auto records = attack_clips(name, cap, cfg, source, classifier, clips, clean, workers);
    for (int b : cfg.budgets) {
      reports.push_back(summarize(name, b, attack_query_cap(name, b, source), records, cfg.attack.epsilon,
                                  cfg.attack.seed, hash));
    }
  }
  return reports;
}

std::vector<MetricsReport> run_budget_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto source = load_checkpoint<float>(cfg.source_path());
  const auto target = load_checkpoint<float>(cfg.target_path());
  const Dataset eval = load_dataset(cfg.data_path() / "target" / "val");
  if (eval.ontology.size() != target.architecture().num_classes) {
    throw LabelError("target checkpoint has " + std::to_string(target.architecture().num_classes) +
                     " classes but the evaluation data has " + std::to_string(eval.ontology.size()));
  }
  return run_budget_sweep(cfg, source, target, eval);
}

std::vector<OverlapSpec> overlap_levels(const ExperimentConfig& cfg) {
  const int private_classes = cfg.data.n_source_classes - cfg.data.n_common_classes;
  std::vector<OverlapSpec> levels;
  for (int common : cfg.overlap_levels) {
    OverlapSpec spec = cfg.data.overlap();
    spec.n_common_classes = common;
    spec.n_source_classes = private_classes + common;
    levels.push_back(spec);
  }
  return levels;
}

OverlapTable run_overlap_experiment(const std::vector<OverlapSpec>& levels, const ExperimentConfig& cfg,
                                    const std::function<void(const std::string&)>& log) {
  cfg.validate();
  if (levels.size() < 3) throw ParameterError("overlap experiment needs at least 3 levels");
  if (std::none_of(levels.begin(), levels.end(), [](const OverlapSpec& s) { return s.n_common_classes == 0; })) {
    throw ParameterError("overlap experiment needs a zero-overlap level");
  }
  auto note = [&](const std::string& m) {
    if (log) log(m);
  };
  const std::string hash = config_hash(cfg);
  const int workers = resolve_workers(cfg.workers);
  const int q = cfg.attack.q_max;

  OverlapTable table;
  table.queries = q;
  std::map<std::uint64_t, std::shared_ptr<const Network<float>>> targets;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const OverlapSpec& level = levels[li];
    try {
      const auto train = generate_synthetic(level, cfg.data.n_target_classes, cfg.data.train_clips_per_class,
                                            cfg.data.shape, Split::Train);
      const auto val = generate_synthetic(level, cfg.data.n_target_classes, cfg.data.val_clips_per_class,
                                          cfg.data.shape, Split::Val);
      // The target split depends on the seed only, so one target model serves every level sharing it.
      auto& target = targets[level.seed];
      if (!target) {
        note("training target model (seed " + std::to_string(level.seed) + ")");
        target = std::make_shared<const Network<float>>(
            train_model<float>(train.target, cfg.target_architecture, cfg.target_train, &val.target));
        table.target_val_accuracy = target->val_accuracy;
      }
      note("level " + std::to_string(li) + ": training source model with " +
           std::to_string(level.n_common_classes) + " shared classes");
      const auto source = train_model<float>(train.source, cfg.source_architecture, cfg.source_train, &val.source);

      const auto clips = evaluation_clips(val.target, cfg.max_eval_clips);
      const auto clean = clean_labels(*target, clips, workers);
      const auto classifier = std::make_shared<NetworkClassifier<float>>(target);
      const auto vra = summarize("VRA", q, q, attack_clips("VRA", q, cfg, source, classifier, clips, clean, workers),
                                 cfg.attack.epsilon, cfg.attack.seed, hash);
      const auto noise = summarize(
          "random-perturbation", q, q,
          attack_clips("random-perturbation", q, cfg, source, classifier, clips, clean, workers),
          cfg.attack.epsilon, cfg.attack.seed, hash);

      OverlapRow row;
      row.overlap_count = class_overlap(train.source.ontology, train.target.ontology).count;
      row.overlap_fraction = double(row.overlap_count) / cfg.data.n_target_classes;
      row.source_val_accuracy = source.val_accuracy;
      row.clean_top1 = vra.clean_top1;
      row.dr = vra.dr;
      row.random_dr = noise.dr;
      row.n_eval = vra.n_eval;
      table.rows.push_back(row);
      note("level " + std::to_string(li) + ": DR " + format_number(row.dr) + ", random baseline DR " +
           format_number(row.random_dr));
    } catch (const Error& e) {
      throw LevelError(e.what(), int(li));
    }
  }
  std::vector<double> counts, drs;
  for (const auto& r : table.rows) {
    counts.push_back(r.overlap_count);
    drs.push_back(r.dr);
  }
  table.spearman_rho = spearman(counts, drs);
  return table;
}

const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols{
      "attack", "budget", "queries_cap", "n_eval", "n_clean_errors", "clean_top1",           "adv_top1",
      "asr",    "dr",     "asr_lo",      "asr_hi", "dr_lo",          "dr_hi",                "mean_queries_success",
      "epsilon", "seed",  "config_hash"};
  return cols;
}

void emit_report(const std::vector<MetricsReport>& reports, const std::filesystem::path& output_dir) {
  if (reports.empty()) throw ParameterError("emit_report needs at least one report");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create '" + output_dir.string() + "': " + ec.message());

  {
    auto out = open_output(output_dir / "results.csv");
    const auto& cols = results_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& r : reports) {
      out << r.attack << ',' << r.budget << ',' << r.queries_cap << ',' << r.n_eval << ',' << r.n_clean_errors << ','
          << format_number(r.clean_top1) << ',' << format_number(r.adv_top1) << ',' << format_number(r.asr) << ','
          << format_number(r.dr) << ',' << format_number(r.asr_ci.lo) << ',' << format_number(r.asr_ci.hi) << ','
          << format_number(r.dr_ci.lo) << ',' << format_number(r.dr_ci.hi) << ','
          << format_number(r.mean_queries_success) << ',' << format_number(r.epsilon) << ',' << r.seed << ','
          << r.config_hash << "\n";
    }
    if (!out) throw IoError("failed writing results.csv in '" + output_dir.string() + "'");
  }

  std::vector<std::string> order;
  std::map<std::string, Series> series;
  for (const auto& r : reports) {
    if (!series.count(r.attack)) {
      order.push_back(r.attack);
      series[r.attack].name = r.attack;
      series[r.attack].color = palette_color(order.size() - 1);
    }
    series[r.attack].x.push_back(r.budget);
    series[r.attack].y.push_back(r.dr);
  }

  {
    auto out = open_output(output_dir / "summary.txt");
    char line[256];
    out << "vra " << kVersion << "  config " << reports.front().config_hash << "\n";
    std::snprintf(line, sizeof line, "eval clips %ld, clean errors %ld, clean top-1 %.2f%%, epsilon %.6g\n\n",
                  reports.front().n_eval, reports.front().n_clean_errors, 100.0 * reports.front().clean_top1,
                  reports.front().epsilon);
    out << line;
    std::snprintf(line, sizeof line, "%-22s %7s %6s %8s %19s %8s %9s\n", "attack", "budget", "cap", "DR%",
                  "DR 95% CI", "ASR%", "mean q");
    out << line;
    for (const auto& r : reports) {
      std::snprintf(line, sizeof line, "%-22s %7d %6d %8.2f    [%6.2f, %6.2f] %8.2f %9.2f\n", r.attack.c_str(),
                    r.budget, r.queries_cap, 100.0 * r.dr, 100.0 * r.dr_ci.lo, 100.0 * r.dr_ci.hi, 100.0 * r.asr,
                    r.mean_queries_success);
      out << line;
    }
    out << "\nplot colours (dr_vs_queries.png, DR against log10 queries):\n";
    for (const auto& name : order) {
      const Rgb c = series[name].color;
      std::snprintf(line, sizeof line, "  %-22s #%02x%02x%02x\n", name.c_str(), c[0], c[1], c[2]);
      out << line;
    }
    if (!out) throw IoError("failed writing summary.txt in '" + output_dir.string() + "'");
  }

  std::vector<Series> ordered;
  for (const auto& name : order) ordered.push_back(series[name]);
  write_png(render_log_plot(ordered), output_dir / "dr_vs_queries.png");
}

std::vector<MetricsReport> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open results table '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) header.push_back(f);
  }
  if (header != results_columns()) throw FormatError("'" + path.string() + "' has an unexpected header");
  std::vector<MetricsReport> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() != header.size()) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(lineno) + " has " +
                        std::to_string(f.size()) + " fields");
    }
    try {
      MetricsReport r;
      r.attack = f[0];
      r.budget = std::stoi(f[1]);
      r.queries_cap = std::stoi(f[2]);
      r.n_eval = std::stol(f[3]);
      r.n_clean_errors = std::stol(f[4]);
      r.clean_top1 = std::strtod(f[5].c_str(), nullptr);
      r.adv_top1 = std::strtod(f[6].c_str(), nullptr);
      r.asr = std::strtod(f[7].c_str(), nullptr);
      r.dr = std::strtod(f[8].c_str(), nullptr);
      r.asr_ci = {std::strtod(f[9].c_str(), nullptr), std::strtod(f[10].c_str(), nullptr)};
      r.dr_ci = {std::strtod(f[11].c_str(), nullptr), std::strtod(f[12].c_str(), nullptr)};
      r.mean_queries_success = std::strtod(f[13].c_str(), nullptr);
      r.epsilon = std::strtod(f[14].c_str(), nullptr);
      r.seed = std::stoull(f[15]);
      r.config_hash = f[16];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(lineno) + " has a malformed number");
    }
  }
  return out;
}

void emit_overlap_table(const OverlapTable& table, const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create '" + output_dir.string() + "': " + ec.message());
  {
    auto out = open_output(output_dir / "overlap.csv");
    out << "overlap_count,overlap_fraction,source_val_accuracy,clean_top1,dr,random_dr,n_eval,queries\n";
    for (const auto& r : table.rows) {
      out << r.overlap_count << ',' << format_number(r.overlap_fraction) << ','
          << format_number(r.source_val_accuracy) << ',' << format_number(r.clean_top1) << ','
          << format_number(r.dr) << ',' << format_number(r.random_dr) << ',' << r.n_eval << ',' << table.queries
          << "\n";
    }
    if (!out) throw IoError("failed writing overlap.csv in '" + output_dir.string() + "'");
  }
  auto out = open_output(output_dir / "overlap_summary.txt");
  char line[256];
  std::snprintf(line, sizeof line, "target val accuracy %.2f%%, %d queries per clip\n\n",
                100.0 * table.target_val_accuracy, table.queries);
  out << line;
  std::snprintf(line, sizeof line, "%8s %10s %8s %12s\n", "overlap", "src acc%", "DR%", "random DR%");
  out << line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%8d %10.2f %8.2f %12.2f\n", r.overlap_count, 100.0 * r.source_val_accuracy,
                  100.0 * r.dr, 100.0 * r.random_dr);
    out << line;
  }
  std::snprintf(line, sizeof line, "\nSpearman rho(overlap, DR) = %.4f\n", table.spearman_rho);
  out << line;
}

}  // namespace vra
