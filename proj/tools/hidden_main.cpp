// Command-line front end: generate / train / eval / sweep.
//
// Exit codes: 0 success, 2 bad usage (flags, config file, limits), 1 runtime
// failure.  HIDDEN_SEED serves as the seed when no --seed/--seeds flag is
// given.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hidden/hidden.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wall time is printed to stdout only; report files stay byte-reproducible.
struct WallTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("HIDDEN_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  const std::string s(v);
  std::size_t pos = 0;
  unsigned long long parsed = 0;
  try {
    parsed = std::stoull(s, &pos);
  } catch (...) {
    throw UsageError("HIDDEN_SEED ('" + s + "') is not an unsigned integer");
  }
  if (pos != s.size()) throw UsageError("HIDDEN_SEED ('" + s + "') is not an unsigned integer");
  return parsed;
}

std::optional<std::string> prescan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

hidden::TrainConfig load_base_config(const std::optional<std::string>& path) {
  if (!path) return {};
  std::ifstream in(*path);
  if (!in) throw UsageError("cannot open config file '" + *path + "'");
  hidden::json j;
  try {
    in >> j;
  } catch (const hidden::json::exception& e) {
    throw UsageError("config file '" + *path + "': " + e.what());
  }
  try {
    return hidden::config_from_json(j);
  } catch (const std::exception& e) {
    throw UsageError("config file '" + *path + "': " + e.what());
  }
}

// Malformed hierarchy files are data errors, not usage errors.
hidden::Table<int> load_hops(const std::string& path, int label_count) {
  try {
    return hidden::hops_matrix(hidden::read_hierarchy(path, label_count));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

struct GenerateArgs {
  std::string out_dir;
  hidden::GaussianGridSpec spec;
  bool seed_given = false;
};

struct TrainArgs {
  std::string train_path, test_path, hierarchy_path, out_checkpoint, metrics_path;
  hidden::TrainConfig config;
  std::string variant = "jnt";
  std::vector<int> ks = hidden::kDefaultNdcgKs;
  bool seed_given = false;
};

struct EvalArgs {
  std::string checkpoint, data_path, hierarchy_path, out_path;
  std::vector<int> ks = hidden::kDefaultNdcgKs;
};

struct SweepArgs {
  std::string train_path, test_path, hierarchy_path, out_csv;
  int setting = 1;
  std::vector<double> drop_probs = hidden::kDefaultDropProbs;
  std::vector<double> fractions = hidden::kDefaultFractions;
  std::vector<std::string> variants = {"flt", "cas", "jnt"};
  std::vector<std::uint64_t> seeds;
  std::vector<int> ks = hidden::kDefaultNdcgKs;
  hidden::TrainConfig base;
  std::string variant_unused;
};

void print_metrics(const hidden::MetricsRecord& rec) {
  std::cout << "variant " << rec.variant << ", seed " << rec.seed << ": " << rec.documents
            << " documents, " << rec.labels << " labels\n";
  std::cout << "  micro-F1 " << hidden::format_double(100.0 * rec.micro_f1) << "  macro-F1 "
            << hidden::format_double(100.0 * rec.macro_f1) << "  (x100)\n";
  if (rec.has_ranking) {
    std::cout << " ";
    for (const auto& [k, v] : rec.ndcg)
      std::cout << " ndcg@" << k << " " << hidden::format_double(v);
    std::cout << "\n  spearman x100 " << hidden::format_double(100.0 * rec.spearman_mean);
    if (rec.spearman_zero_variance_queries > 0)
      std::cout << " (" << rec.spearman_zero_variance_queries << " zero-variance queries)";
    std::cout << "\n";
  }
}

int cmd_generate(const GenerateArgs& args) {
  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);
  const auto data = hidden::generate(args.spec);
  const auto dir = fs::path(args.out_dir);
  hidden::write_dataset((dir / "train.jsonl").string(), data.train);
  hidden::write_dataset((dir / "test.jsonl").string(), data.test);
  hidden::write_hierarchy((dir / "hierarchy.txt").string(), data.truth);
  std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
            << " test documents, " << data.train.label_count << " labels, "
            << data.truth.edges.size() << " hierarchy edges to " << args.out_dir << "\n";
  return 0;
}

int cmd_train(const TrainArgs& args) {
  hidden::TrainConfig cfg = args.config;
  cfg.variant = hidden::parse_variant(args.variant);
  const auto train_data = hidden::read_dataset(args.train_path);
  const auto test_data = hidden::read_dataset(args.test_path);
  if (train_data.label_count != test_data.label_count ||
      train_data.feature_dim != test_data.feature_dim)
    throw std::runtime_error("train/test files disagree on label count or feature dim");

  std::optional<hidden::Table<int>> hops;
  if (!args.hierarchy_path.empty())
    hops = load_hops(args.hierarchy_path, static_cast<int>(train_data.label_count));

  const WallTimer timer;
  const auto model = hidden::train_model(train_data, cfg);
  hidden::save_checkpoint(args.out_checkpoint, model, train_data.feature_dim);
  const auto rec =
      hidden::evaluate_model(model, test_data, hops ? &*hops : nullptr, args.ks);
  const std::string metrics_path =
      args.metrics_path.empty() ? args.out_checkpoint + ".metrics.json" : args.metrics_path;
  auto out = hidden::open_output(metrics_path);
  out << hidden::metrics_to_json(rec).dump(2) << "\n";
  std::cout << "checkpoint " << args.out_checkpoint << "\nmetrics " << metrics_path
            << "\nbest epoch " << model.best_epoch << "\nwall seconds "
            << hidden::format_double(timer.seconds()) << "\n";
  print_metrics(rec);
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  std::size_t feature_dim = 0;
  const auto model = hidden::load_checkpoint(args.checkpoint, &feature_dim);
  const auto data = hidden::read_dataset(args.data_path);
  if (data.feature_dim != feature_dim)
    throw std::runtime_error("dataset feature dim " + std::to_string(data.feature_dim) +
                             " does not match checkpoint (" + std::to_string(feature_dim) + ")");
  if (data.label_count != model.theta.label_count)
    throw std::runtime_error("dataset label count " + std::to_string(data.label_count) +
                             " does not match checkpoint (" +
                             std::to_string(model.theta.label_count) + ")");
  std::optional<hidden::Table<int>> hops;
  if (!args.hierarchy_path.empty())
    hops = load_hops(args.hierarchy_path, static_cast<int>(data.label_count));
  const auto rec = hidden::evaluate_model(model, data, hops ? &*hops : nullptr, args.ks);
  const std::string dumped = hidden::metrics_to_json(rec).dump(2);
  if (args.out_path.empty()) {
    std::cout << dumped << "\n";
  } else {
    auto out = hidden::open_output(args.out_path);
    out << dumped << "\n";
    print_metrics(rec);
  }
  return 0;
}

int cmd_sweep(const SweepArgs& args) {
  const auto train_data = hidden::read_dataset(args.train_path);
  const auto test_data = hidden::read_dataset(args.test_path);
  if (train_data.label_count != test_data.label_count ||
      train_data.feature_dim != test_data.feature_dim)
    throw std::runtime_error("train/test files disagree on label count or feature dim");
  std::optional<hidden::Table<int>> hops;
  if (!args.hierarchy_path.empty())
    hops = load_hops(args.hierarchy_path, static_cast<int>(train_data.label_count));

  hidden::SweepConfig sweep;
  sweep.setting = args.setting == 1 ? hidden::SweepSetting::label_drop
                                    : hidden::SweepSetting::subsample;
  sweep.params = args.setting == 1 ? args.drop_probs : args.fractions;
  sweep.variants.clear();
  for (const auto& v : args.variants) sweep.variants.push_back(hidden::parse_variant(v));
  sweep.seeds = args.seeds;
  sweep.ks = args.ks;
  sweep.base = args.base;

  const WallTimer timer;
  const auto cells =
      hidden::run_sweep(train_data, test_data, hops ? &*hops : nullptr, sweep);
  for (const auto& c : cells) {
    std::cerr << hidden::sweep_setting_name(c.setting) << " param "
              << hidden::format_double(c.param) << " " << hidden::variant_name(c.variant)
              << " seed " << c.seed << ": "
              << (c.ok ? "micro-F1 " + hidden::format_double(100.0 * c.metrics.micro_f1)
                       : "error: " + c.error)
              << "\n";
  }
  auto out = hidden::open_output(args.out_csv);
  hidden::write_csv(out, hidden::sweep_table(cells, args.ks));
  std::cout << "wrote " << cells.size() << " cells to " << args.out_csv << " in "
            << hidden::format_double(timer.seconds()) << " seconds\n";
  std::size_t failed = 0;
  for (const auto& c : cells) failed += c.ok ? 0 : 1;
  if (failed > 0) std::cout << failed << " cells failed; see the status column\n";
  return 0;
}

void add_train_config_flags(CLI::App* cmd, hidden::TrainConfig& cfg) {
  cmd->add_option("--lambda", cfg.lambda, "ranking loss weight");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
  cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size");
  cmd->add_option("--embed-dim", cfg.embed_dim, "label embedding dimension");
  cmd->add_option("--doc-dropout", cfg.doc_dropout, "dropout rate on the encoder output");
  cmd->add_option("--label-dropout", cfg.label_dropout, "dropout rate on embedding columns");
  cmd->add_option("--val-fraction", cfg.validation_fraction, "validation slice fraction");
  cmd->add_option("--theta-init-width", cfg.theta_init_half_width,
                  "half width of the uniform embedding init");
  cmd->add_option("--hidden-dims", cfg.hidden_dims, "encoder hidden widths")->delimiter(',');
  cmd->add_option("--stage1-steps", cfg.stage1_steps_per_epoch,
                  "full-batch embedding steps per stage-one epoch (cas)");
  std::map<std::string, hidden::RankingSchedule> schedules{
      {"every_batch", hidden::RankingSchedule::every_batch},
      {"first_batch", hidden::RankingSchedule::first_batch}};
  cmd->add_option("--ranking-schedule", cfg.ranking_schedule, "when the ranking gradient is added")
      ->transform(CLI::CheckedTransformer(schedules, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical multi-label classification with hyperbolic label embeddings"};
  app.require_subcommand(1);

  GenerateArgs gen;
  TrainArgs train;
  EvalArgs eval;
  SweepArgs sweep;
  std::string config_path;

  try {
    const auto base = load_base_config(prescan_config(argc, argv));
    train.config = base;
    train.variant = hidden::variant_name(base.variant);
    sweep.base = base;

    auto* g = app.add_subcommand("generate", "write the synthetic Gaussian-grid benchmark");
    g->add_option("--out", gen.out_dir, "output directory")->required();
    g->add_option("--samples", gen.spec.total_samples, "total sample count");
    g->add_option("--seed", gen.spec.seed, "generation seed");
    g->add_option("--spacing", gen.spec.spacing, "grid spacing");
    g->add_option("--sigma", gen.spec.sigma_factor, "cluster sigma as a fraction of spacing");
    g->add_option("--train-fraction", gen.spec.train_fraction, "train split fraction");

    auto* t = app.add_subcommand("train", "train one variant and evaluate on a test set");
    t->add_option("--train", train.train_path, "training dataset (jsonl)")->required();
    t->add_option("--test", train.test_path, "test dataset (jsonl)")->required();
    t->add_option("--hierarchy", train.hierarchy_path,
                  "hidden hierarchy edge list for embedding metrics");
    t->add_option("--variant", train.variant, "flt, cas, jnt or euc");
    t->add_option("--seed", train.config.seed, "training seed");
    t->add_option("--k-list", train.ks, "ndcg cutoffs")->delimiter(',');
    t->add_option("--out", train.out_checkpoint, "checkpoint output path")->required();
    t->add_option("--metrics-out", train.metrics_path,
                  "metrics JSON path (default: <out>.metrics.json)");
    t->add_option("--config", config_path, "JSON config file; flags win");
    add_train_config_flags(t, train.config);

    auto* e = app.add_subcommand("eval", "re-evaluate a checkpoint on a dataset");
    e->add_option("--checkpoint", eval.checkpoint, "checkpoint path")->required();
    e->add_option("--data", eval.data_path, "dataset (jsonl)")->required();
    e->add_option("--hierarchy", eval.hierarchy_path, "hierarchy edge list");
    e->add_option("--k-list", eval.ks, "ndcg cutoffs")->delimiter(',');
    e->add_option("--out", eval.out_path, "metrics JSON path (default: stdout)");

    auto* s = app.add_subcommand("sweep", "grid over corruption settings, variants and seeds");
    s->add_option("--train", sweep.train_path, "training dataset (jsonl)")->required();
    s->add_option("--test", sweep.test_path, "test dataset (jsonl)")->required();
    s->add_option("--hierarchy", sweep.hierarchy_path, "hierarchy edge list");
    s->add_option("--setting", sweep.setting, "1 = label drop, 2 = subsample")
        ->check(CLI::Range(1, 2));
    s->add_option("--drop-probs", sweep.drop_probs, "setting-1 drop probabilities")
        ->delimiter(',');
    s->add_option("--fractions", sweep.fractions, "setting-2 kept fractions")->delimiter(',');
    s->add_option("--variants", sweep.variants, "variants to sweep")->delimiter(',');
    s->add_option("--seeds", sweep.seeds, "seeds, one run per seed")->delimiter(',');
    s->add_option("--k-list", sweep.ks, "ndcg cutoffs")->delimiter(',');
    s->add_option("--out", sweep.out_csv, "CSV output path")->required();
    s->add_option("--config", config_path, "JSON config file; flags win");
    add_train_config_flags(s, sweep.base);

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
      return app.exit(err);
    } catch (const CLI::ParseError& err) {
      app.exit(err);
      return 2;
    }

    if (app.got_subcommand(g)) {
      if (g->count("--seed") == 0) {
        if (const auto s2 = env_seed()) gen.spec.seed = *s2;
      }
      return cmd_generate(gen);
    }
    if (app.got_subcommand(t)) {
      if (t->count("--seed") == 0) {
        if (const auto s2 = env_seed()) train.config.seed = *s2;
      }
      return cmd_train(train);
    }
    if (app.got_subcommand(e)) return cmd_eval(eval);
    if (app.got_subcommand(s)) {
      if (sweep.seeds.empty()) {
        if (const auto s2 = env_seed()) sweep.seeds = {*s2, *s2 + 1, *s2 + 2};
        else sweep.seeds = {1, 2, 3};
      }
      return cmd_sweep(sweep);
    }
    return 2;
  } catch (const UsageError& e2) {
    std::cerr << "usage error: " << e2.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e2) {
    std::cerr << "usage error: " << e2.what() << "\n";
    return 2;
  } catch (const std::exception& e2) {
    std::cerr << "error: " << e2.what() << "\n";
    return 1;
  }
}
