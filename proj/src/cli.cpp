#include "vra/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

#include "vra/image_io.hpp"
#include "vra/metrics.hpp"
#include "vra/serialization.hpp"

namespace vra {

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool verbose = false;
};

class Session {
 public:
  Session(const Options& opt, std::string subcommand, std::ostream& out)
      : opt_(opt), subcommand_(std::move(subcommand)), out_(out) {}

  /// Loads the config, applies --set, --seed and --workers, and logs it.
  const ExperimentConfig& config() {
    if (!cfg_) {
      if (opt_.config.empty()) throw ParameterError(subcommand_ + " requires --config");
      std::vector<std::string> overrides = opt_.overrides;
      if (opt_.seed) overrides.push_back("attack.seed=" + std::to_string(*opt_.seed));
      if (opt_.workers) overrides.push_back("workers=" + std::to_string(*opt_.workers));
      cfg_ = load_experiment_config(opt_.config, overrides);
      log_run();
    }
    return *cfg_;
  }

  void info(const std::string& msg) const {
    if (opt_.verbose) out_ << "[" << subcommand_ << "] " << msg << std::endl;
  }
  std::ostream& out() const { return out_; }

 private:
  void log_run() const {
    const std::filesystem::path dir(cfg_->output_dir);
    std::filesystem::create_directories(dir);
    nlohmann::json record{{"tool", "vra"},
                          {"version", kVersion},
                          {"subcommand", subcommand_},
                          {"config_hash", config_hash(*cfg_)},
                          {"config", *cfg_}};
    const auto path = dir / ("run_" + subcommand_ + ".json");
    std::ofstream f(path);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << record.dump(2) << "\n";
  }

  const Options& opt_;
  std::string subcommand_;
  std::ostream& out_;
  std::optional<ExperimentConfig> cfg_;
};

std::filesystem::path split_dir(const ExperimentConfig& cfg, const char* domain, Split split) {
  return cfg.data_path() / domain / to_string(split);
}

void cmd_gen_data(Session& s) {
  const auto& cfg = s.config();
  for (Split split : {Split::Train, Split::Val}) {
    const int per_class = split == Split::Train ? cfg.data.train_clips_per_class : cfg.data.val_clips_per_class;
    const auto pair = generate_synthetic(cfg.data.overlap(), cfg.data.n_target_classes, per_class, cfg.data.shape, split);
    save_dataset(pair.source, split_dir(cfg, "source", split));
    save_dataset(pair.target, split_dir(cfg, "target", split));
    s.info(to_string(split) + ": " + std::to_string(pair.source.size()) + " source and " +
           std::to_string(pair.target.size()) + " target clips");
  }
  s.out() << "wrote synthetic datasets to " << cfg.data_path().string() << "\n";
}

void cmd_train(Session& s, const std::string& which) {
  const auto& cfg = s.config();
  for (const char* domain : {"source", "target"}) {
    if (which != "both" && which != domain) continue;
    const bool is_source = std::string(domain) == "source";
    const Dataset train = load_dataset(split_dir(cfg, domain, Split::Train));
    const Dataset val = load_dataset(split_dir(cfg, domain, Split::Val));
    s.info(std::string("training ") + domain + " model on " + std::to_string(train.size()) + " clips");
    TrainLog log;
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = train_model<float>(train, is_source ? cfg.source_architecture : cfg.target_architecture,
                                          is_source ? cfg.source_train : cfg.target_train, &val, &log);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto path = is_source ? cfg.source_path() : cfg.target_path();
    save_checkpoint(model, path);
    s.out() << domain << " model: val top-1 " << log.val_accuracy << " after " << log.epoch_loss.size()
            << " epochs (" << secs << " s), saved to " << path.string() << "\n";
  }
}

void cmd_attack(Session& s, const std::vector<std::string>& attacks) {
  ExperimentConfig cfg = s.config();
  if (!attacks.empty()) cfg.attacks = attacks;
  else cfg.attacks = {"VRA"};
  cfg.budgets = {cfg.attack.q_max};
  cfg.validate();
  const auto reports = run_budget_sweep(cfg);
  emit_report(reports, std::filesystem::path(cfg.output_dir) / "attack");
  for (const auto& r : reports) {
    s.out() << r.attack << " at " << r.queries_cap << " queries: DR " << r.dr << ", ASR " << r.asr << " over "
            << r.n_eval << " clips\n";
  }
}

void cmd_sweep(Session& s) {
  const auto& cfg = s.config();
  const auto reports = run_budget_sweep(cfg);
  const auto dir = std::filesystem::path(cfg.output_dir) / "sweep";
  emit_report(reports, dir);
  s.out() << "wrote " << reports.size() << " rows to " << (dir / "results.csv").string() << "\n";
}

void cmd_overlap(Session& s) {
  const auto& cfg = s.config();
  const auto table = run_overlap_experiment(overlap_levels(cfg), cfg, [&](const std::string& m) { s.info(m); });
  const auto dir = std::filesystem::path(cfg.output_dir) / "overlap";
  emit_overlap_table(table, dir);
  for (const auto& r : table.rows) {
    s.out() << "overlap " << r.overlap_count << ": DR " << r.dr << " (random baseline " << r.random_dr << ")\n";
  }
  s.out() << "spearman rho " << table.spearman_rho << "\n";
}

void cmd_report(Session& s, const std::string& results, const std::string& out_dir) {
  std::filesystem::path input = results;
  std::filesystem::path output = out_dir;
  if (input.empty()) input = std::filesystem::path(s.config().output_dir) / "sweep" / "results.csv";
  if (output.empty()) output = input.parent_path();
  const auto reports = read_results_csv(input);
  emit_report(reports, output);
  s.out() << "rendered " << reports.size() << " rows into " << output.string() << "\n";
}

void cmd_viz(Session& s, const std::string& attack, int clip_index, int upscale) {
  const auto& cfg = s.config();
  const auto source = load_checkpoint<float>(cfg.source_path());
  const auto target = std::make_shared<const Network<float>>(load_checkpoint<float>(cfg.target_path()));
  const Dataset eval = load_dataset(split_dir(cfg, "target", Split::Val));
  if (clip_index < 0 || clip_index >= eval.size()) {
    throw ParameterError("--clip " + std::to_string(clip_index) + " is outside [0, " + std::to_string(eval.size()) +
                         ")");
  }
  const VideoClip& clip = eval.clips[clip_index];
  AttackConfig acfg = cfg.attack;
  acfg.seed = mix_seed(cfg.attack.seed, std::uint64_t(clip_index));
  TargetOracle oracle(std::make_shared<NetworkClassifier<float>>(target), cfg.oracle_query_limit);
  const AttackResult r = run_named_attack(attack, source, oracle, clip, clip.label_id, acfg, std::nullopt);

  const auto dir = std::filesystem::path(cfg.output_dir) / "viz" / clip.clip_id;
  std::filesystem::create_directories(dir);
  const Eigen::ArrayXd delta = r.perturbation ? *r.perturbation : Eigen::ArrayXd::Zero(clip.pixels.size());
  const ClipShape sh = clip.shape;
  for (int t = 0; t < sh.frames; ++t) {
    RgbImage img(3 * sh.width * upscale, sh.height * upscale, 255);
    for (int h = 0; h < sh.height; ++h) {
      for (int w = 0; w < sh.width; ++w) {
        for (int c = 0; c < 3; ++c) {
          const Eigen::Index k = clip.index(t, h, w, c);
          const double panels[3] = {clip.pixels[k], clip.pixels[k] + delta[k], 0.5 + 32.0 * delta[k]};
          for (int p = 0; p < 3; ++p) {
            const auto v = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(panels[p], 0.0, 1.0)));
            for (int dy = 0; dy < upscale; ++dy) {
              for (int dx = 0; dx < upscale; ++dx) {
                img.pixel((p * sh.width + w) * upscale + dx, h * upscale + dy)[c] = v;
              }
            }
          }
        }
      }
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.png", t);
    write_png(img, dir / name);
  }
  s.out() << attack << " on " << clip.clip_id << ": " << (r.success ? "fooled" : "not fooled") << " after "
          << r.queries_used << " queries, label " << clip.label_id << " -> " << r.final_label << "; frames in "
          << dir.string() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hard-label black-box video attacks with representation directions", "vra"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("-c,--config", opt.config, "Experiment config (JSON)");
    if (config_required) c->required();
    sub->add_option("--set", opt.overrides, "Override a config key, e.g. attack.q_max=10")->take_all();
    sub->add_option("--seed", opt.seed, "Attack seed (attack.seed)");
    sub->add_option("--workers", opt.workers, "Worker threads (default: VRA_WORKERS, else 1)");
    sub->add_flag("-v,--verbose", opt.verbose, "Progress messages");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic source and target datasets");
  add_common(gen, true);

  std::string train_which = "both";
  auto* train = app.add_subcommand("train", "Train the source and/or target model");
  add_common(train, true);
  train->add_option("--model", train_which, "source, target or both")
      ->check(CLI::IsMember({"source", "target", "both"}));

  std::vector<std::string> attack_names;
  auto* attack = app.add_subcommand("attack", "Attack the target at attack.q_max queries");
  add_common(attack, true);
  attack->add_option("--attack", attack_names, "Attack name(s); default VRA");

  auto* sweep = app.add_subcommand("sweep", "Every configured attack at every budget");
  add_common(sweep, true);

  auto* overlap = app.add_subcommand("overlap-exp", "Deception rate against source/target class overlap");
  add_common(overlap, true);

  std::string results, report_out;
  auto* report = app.add_subcommand("report", "Re-render summary and plot from a results table");
  add_common(report, false);
  report->add_option("--results", results, "results.csv (default: <output_dir>/sweep/results.csv)");
  report->add_option("--out", report_out, "Output directory (default: next to the results table)");

  std::string viz_attack = "VRA";
  int viz_clip = 0, viz_scale = 4;
  auto* viz = app.add_subcommand("viz", "Per-frame clean / perturbed / amplified-difference images");
  add_common(viz, true);
  viz->add_option("--attack", viz_attack, "Attack name");
  viz->add_option("--clip", viz_clip, "Index into the target validation split");
  viz->add_option("--scale", viz_scale, "Integer upscaling")->check(CLI::Range(1, 16));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }
  if (report->parsed() && results.empty() && opt.config.empty()) {
    err << "report needs --results or --config\n" << report->help();
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Session session(opt, chosen->get_name(), out);
  try {
    if (chosen == gen) cmd_gen_data(session);
    else if (chosen == train) cmd_train(session, train_which);
    else if (chosen == attack) cmd_attack(session, attack_names);
    else if (chosen == sweep) cmd_sweep(session);
    else if (chosen == overlap) cmd_overlap(session);
    else if (chosen == report) cmd_report(session, results, report_out);
    else if (chosen == viz) cmd_viz(session, viz_attack, viz_clip, viz_scale);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vra
