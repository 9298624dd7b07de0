// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "trimlp/checkpoint.hpp"
#include "trimlp/data.hpp"
#include "trimlp/evaluation.hpp"
#include "trimlp/run_config.hpp"
#include "trimlp/training.hpp"

namespace trimlp {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVariantNames = "eye, square, global, local, full";

fs::path results_dir() {
  if (const char* env = std::getenv("TRIMLP_RESULTS_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "results";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size() || v == 0) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not a positive integer");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
  return out;
}

MixerVariant variant_or_throw(const std::string& name) {
  if (auto v = parse_variant(name)) return *v;
  throw ConfigError("unknown variant '" + name + "' (valid: " + kVariantNames + ")");
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write '" + path.string() + "'");
}

std::string dataset_name(const fs::path& dir) {
  const fs::path p = fs::weakly_canonical(dir);
  return p.filename().empty() ? p.parent_path().filename().string() : p.filename().string();
}

Json metrics_json(const RankingResult& r) {
  Json j = Json::object();
  for (const auto& [k, v] : r.hr) j["HR@" + std::to_string(k)] = v;
  for (const auto& [k, v] : r.ndcg) j["NDCG@" + std::to_string(k)] = v;
  return j;
}

void add_bench(Json& j, const std::optional<BenchResult>& b) {
  if (b) {
    j["infer_mean_s"] = b->mean_s;
    j["infer_std_s"] = b->std_s;
    j["rounds"] = b->rounds;
  } else {
    j["infer_mean_s"] = nullptr;
    j["infer_std_s"] = nullptr;
    j["rounds"] = 0;
  }
}

// ---- shared training flags -----------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string config;
  std::string results;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant, combine, axis, metric;
  std::optional<std::size_t> sessions, n, d, blocks, batch, epochs, patience, threads;
  std::optional<double> lr, dropout;
  std::size_t bench_rounds = 0;
};

void add_train_flags(CLI::App* sub, TrainFlags& f, bool with_variant, bool with_sessions) {
  sub->add_option("--data", f.data, "Processed dataset directory")->required();
  sub->add_option("--config", f.config, "Run config JSON (flags override it)");
  sub->add_option("--results", f.results, "Results JSON path");
  sub->add_option("--seed", f.seed, "Run seed");
  if (with_variant) sub->add_option("--variant", f.variant, kVariantNames);
  if (with_sessions) sub->add_option("--sessions", f.sessions, "Sessions s (must divide n)");
  sub->add_option("--combine", f.combine, "add, concat, serial-gl, serial-lg");
  sub->add_option("--axis", f.axis, "Softmax axis: source or target");
  sub->add_option("--n", f.n, "Window length");
  sub->add_option("--d", f.d, "Embedding width");
  sub->add_option("--blocks", f.blocks, "Number of blocks L");
  sub->add_option("--dropout", f.dropout, "Dropout rate");
  sub->add_option("--lr", f.lr, "Adam learning rate");
  sub->add_option("--batch", f.batch, "Windows per batch");
  sub->add_option("--epochs", f.epochs, "Maximum epochs");
  sub->add_option("--patience", f.patience, "Early-stopping patience");
  sub->add_option("--metric", f.metric, "Early-stopping metric, e.g. HR@10");
  sub->add_option("--threads", f.threads, "Evaluation worker threads");
}

RunConfig resolve(const TrainFlags& f) {
  RunConfig rc;
  if (!f.config.empty()) rc = run_config_from_json(read_json_file(f.config));
  if (f.variant) rc.model.variant = variant_or_throw(*f.variant);
  if (f.combine) {
    auto c = parse_combine(*f.combine);
    if (!c) {
      throw ConfigError("unknown combine '" + *f.combine +
                        "' (valid: add, concat, serial-gl, serial-lg)");
    }
    rc.model.combine = *c;
  }
  if (f.axis) {
    auto a = parse_axis(*f.axis);
    if (!a) throw ConfigError("unknown axis '" + *f.axis + "' (valid: source, target)");
    rc.model.axis = *a;
  }
  if (f.sessions) rc.model.sessions = *f.sessions;
  if (f.n) rc.model.n = *f.n;
  if (f.d) rc.model.d = *f.d;
  if (f.blocks) rc.model.blocks = *f.blocks;
  if (f.dropout) rc.model.dropout = *f.dropout;
  if (f.seed) rc.train.seed = *f.seed;
  if (f.lr) rc.train.lr = *f.lr;
  if (f.batch) rc.train.batch = *f.batch;
  if (f.epochs) rc.train.max_epochs = *f.epochs;
  if (f.patience) rc.train.patience = *f.patience;
  if (f.metric) rc.train.eval_metric = *f.metric;
  if (f.threads) rc.train.eval_threads = *f.threads;
  rc.paths.processed_dir = f.data;
  if (!f.results.empty()) rc.paths.results_path = f.results;
  if (!f.out.empty()) rc.paths.checkpoint_dir = f.out;
  return rc;
}

struct Outcome {
  TrainResult train;
  RankingResult final_metrics;
  SplitDataset split;
};

// Validates everything before the first epoch so bad flags fail fast.
Outcome run_training(RunConfig& rc, const SequenceDataset& ds, std::ostream& err,
                     const std::string& tag, std::ostream* epoch_log) {
  rc.model.vocab = ds.vocab();
  rc.model.validate();
  rc.train.validate();
  Outcome o;
  o.split = build_windows(ds, rc.model.n);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& rec) {
    if (epoch_log != nullptr) {
      Json line = metrics_json(rec.metrics);
      line["epoch"] = rec.epoch;
      line["loss"] = rec.loss;
      line["seconds"] = rec.seconds;
      *epoch_log << line.dump() << '\n' << std::flush;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%s] epoch %zu loss=%.5f %s=%.5f (%.1fs)\n", tag.c_str(),
                  rec.epoch, rec.loss, rc.train.eval_metric.c_str(),
                  metric_value(rec.metrics, rc.train.eval_metric), rec.seconds);
    err << buf << std::flush;
  };
  o.train = train(o.split, rc.model, rc.train, hooks);
  EvalOptions opt;
  opt.threads = rc.train.eval_threads;
  o.final_metrics = evaluate(o.train.best_params, rc.model, o.split.test, opt);
  return o;
}

fs::path default_results(const RunConfig& rc, const std::string& command) {
  if (!rc.paths.results_path.empty()) return rc.paths.results_path;
  return results_dir() / (command + "-" + rc.hash() + ".json");
}

// ---- commands -------------------------------------------------------------------

struct PreprocessFlags {
  std::string input, format = "tsv", output;
  std::size_t min_user = 20, min_item = 10, max_len = 64;
};

int cmd_preprocess(const PreprocessFlags& f, std::ostream& out) {
  const auto format = parse_log_format(f.format);
  if (!format) {
    throw ConfigError("unknown format '" + f.format + "' (valid: tsv, csv, movielens)");
  }
  if (f.max_len < 2) throw ConfigError("max-len must be at least 2");
  const auto raw = load_interactions(f.input, *format);
  const auto ds = filter_dataset(raw, {f.min_user, f.min_item});
  write_processed(ds, f.output, f.max_len);
  const auto& s = ds.stats;
  char buf[160];
  std::snprintf(buf, sizeof buf, "users=%zu items=%zu interactions=%zu sparsity=%.4f\n", s.users,
                s.items, s.interactions, s.sparsity);
  out << buf;
  out << "filter: single pass, items below " << f.min_item << " removed before users below "
      << f.min_user << "; " << ds.residual_item_violations
      << " kept item(s) fall below the item threshold afterwards\n";
  return 0;
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve(f);
  const auto ds = read_processed(f.data);
  rc.model.vocab = ds.vocab();
  rc.model.validate();
  rc.train.validate();
  const std::string hash = rc.hash();
  const fs::path ckpt_dir = rc.paths.checkpoint_dir.empty()
                                ? results_dir() / ("run-" + hash)
                                : fs::path(rc.paths.checkpoint_dir);
  rc.paths.checkpoint_dir = ckpt_dir.string();
  const fs::path results_path = default_results(rc, "train");
  rc.paths.results_path = results_path.string();
  fs::create_directories(ckpt_dir);
  write_text(ckpt_dir / "config.json",
             Json{{"config", rc.to_json()}, {"config_hash", hash}}.dump(2) + "\n");
  err << "[train] config_hash=" << hash << " seed=" << rc.train.seed << '\n';

  std::ofstream log(ckpt_dir / "epochs.jsonl", std::ios::binary);
  if (!log) throw IoError("cannot write '" + (ckpt_dir / "epochs.jsonl").string() + "'");
  const std::string dataset = dataset_name(f.data);
  Outcome o = run_training(rc, ds, err, "train", &log);

  Checkpoint ckpt{rc.model, o.train.best_params,
                  {{"dataset", dataset},
                   {"config_hash", hash},
                   {"seed", rc.train.seed},
                   {"best_epoch", o.train.best_epoch},
                   {"best_metric", o.train.best_metric},
                   {"stop_reason", std::string(to_string(o.train.stop_reason))},
                   {"run_config", rc.to_json()}}};
  const fs::path ckpt_path = ckpt_dir / "best.ckpt";
  save_checkpoint(ckpt_path, ckpt);

  std::optional<BenchResult> bench;
  if (f.bench_rounds > 0) {
    bench = bench_inference(o.train.best_params, rc.model, o.split.test, f.bench_rounds);
  }
  Json res = metrics_json(o.final_metrics);
  res["dataset"] = dataset;
  res["config_hash"] = hash;
  res["seed"] = rc.train.seed;
  res["variant"] = std::string(to_string(rc.model.variant));
  res["combine"] = std::string(to_string(rc.model.combine));
  res["sessions"] = rc.model.sessions;
  res["best_epoch"] = o.train.best_epoch;
  res["epochs_run"] = o.train.history.size();
  res["stop_reason"] = std::string(to_string(o.train.stop_reason));
  res["users"] = o.final_metrics.users;
  res["checkpoint"] = ckpt_path.string();
  add_bench(res, bench);
  write_text(results_path, res.dump(2) + "\n");
  out << res.dump(2) << '\n';
  if (o.train.stop_reason == StopReason::kDiverged) {
    throw NumericError("training diverged after epoch " + std::to_string(o.train.history.size()) +
                       "; best checkpoint kept at " + ckpt_path.string());
  }
  return 0;
}

struct EvalFlags {
  std::string checkpoint, data, ks = "5,10", results;
  std::size_t rounds = 0;
  std::size_t threads = 1;
  bool mask_history = false;
};

struct Loaded {
  Checkpoint ckpt;
  SplitDataset split;
  std::string hash;
  Json seed;
  std::string dataset;
};

Loaded load_for_eval(const std::string& checkpoint, const std::string& data) {
  Loaded l;
  l.ckpt = load_checkpoint(checkpoint);
  const auto ds = read_processed(data);
  if (ds.vocab() != l.ckpt.config.vocab) {
    throw ConfigError("checkpoint vocab " + std::to_string(l.ckpt.config.vocab) +
                      " does not match dataset vocab " + std::to_string(ds.vocab()));
  }
  l.split = build_windows(ds, l.ckpt.config.n);
  RunConfig fallback;
  fallback.model = l.ckpt.config;
  l.hash = l.ckpt.meta.value("config_hash", fallback.hash());
  l.seed = l.ckpt.meta.contains("seed") ? l.ckpt.meta["seed"] : Json(nullptr);
  l.dataset = dataset_name(data);
  return l;
}

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const auto ks = parse_sizes(f.ks, "--k");
  const Loaded l = load_for_eval(f.checkpoint, f.data);
  EvalOptions opt;
  opt.ks = ks;
  opt.threads = f.threads;
  opt.mask_history = f.mask_history;
  const auto r = evaluate(l.ckpt.params, l.ckpt.config, l.split.test, opt);
  std::optional<BenchResult> bench;
  if (f.rounds > 0) bench = bench_inference(l.ckpt.params, l.ckpt.config, l.split.test, f.rounds);
  Json res = metrics_json(r);
  res["dataset"] = l.dataset;
  res["config_hash"] = l.hash;
  res["seed"] = l.seed;
  res["users"] = r.users;
  res["mask_history"] = f.mask_history;
  add_bench(res, bench);
  const fs::path path =
      f.results.empty() ? results_dir() / ("eval-" + l.hash + ".json") : fs::path(f.results);
  write_text(path, res.dump(2) + "\n");
  out << res.dump(2) << '\n';
  return 0;
}

int cmd_bench(const EvalFlags& f, std::ostream& out) {
  const Loaded l = load_for_eval(f.checkpoint, f.data);
  const auto b = bench_inference(l.ckpt.params, l.ckpt.config, l.split.test, f.rounds, f.threads);
  Json res{{"dataset", l.dataset},      {"config_hash", l.hash},  {"seed", l.seed},
           {"users", l.split.test.size()}, {"threads", f.threads},
           {"infer_min_s", b.min_s},    {"infer_max_s", b.max_s}};
  add_bench(res, b);
  const fs::path path =
      f.results.empty() ? results_dir() / ("bench-" + l.hash + ".json") : fs::path(f.results);
  write_text(path, res.dump(2) + "\n");
  out << res.dump(2) << '\n';
  return 0;
}

const std::vector<std::string> kTableMetrics{"HR@5", "NDCG@5", "HR@10", "NDCG@10"};

std::string table_row(const std::string& label, const std::string& seed, const Json& m,
                      const std::string& extra) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-10s %-6s %8.5f %8.5f %8.5f %8.5f  %s\n", label.c_str(),
                seed.c_str(), m.at("HR@5").get<double>(), m.at("NDCG@5").get<double>(),
                m.at("HR@10").get<double>(), m.at("NDCG@10").get<double>(), extra.c_str());
  return buf;
}

std::string table_header(const char* first) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-10s %-6s %8s %8s %8s %8s  %s\n", first, "seed", "HR@5",
                "NDCG@5", "HR@10", "NDCG@10", "Avg. Impv.");
  return buf;
}

Json mean_metrics(const std::vector<Json>& runs) {
  Json m = Json::object();
  for (const auto& key : kTableMetrics) {
    double s = 0.0;
    for (const auto& r : runs) s += r.at(key).get<double>();
    m[key] = s / static_cast<double>(runs.size());
  }
  return m;
}

// Mean over the table metrics of (variant - baseline) / baseline.
std::optional<double> avg_improvement(const Json& variant, const Json& baseline) {
  double s = 0.0;
  for (const auto& key : kTableMetrics) {
    const double b = baseline.at(key).get<double>();
    if (b <= 0.0) return std::nullopt;
    s += (variant.at(key).get<double>() - b) / b;
  }
  return s / static_cast<double>(kTableMetrics.size());
}

std::string percent(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * *v);
  return buf;
}

struct AblateFlags {
  TrainFlags train;
  std::string variants = "eye,square,global,local,full";
  std::string sessions_list = "1,2,4,8,16,32,64";
  std::size_t seeds = 1;
};

// One trained row per (label, seed) with a per-label mean row.
int run_grid(const std::string& command, const AblateFlags& f,
             const std::vector<std::pair<std::string, std::function<void(RunConfig&)>>>& arms,
             const std::string& baseline, std::ostream& out, std::ostream& err) {
  if (f.seeds == 0) throw ConfigError("--seeds must be at least 1");
  RunConfig base = resolve(f.train);
  const auto ds = read_processed(f.train.data);
  base.model.vocab = ds.vocab();
  base.options["command"] = command;
  base.options["arms"] = Json::array();
  for (const auto& [label, apply] : arms) {
    base.options["arms"].push_back(label);
    RunConfig probe = base;
    apply(probe);
    probe.model.validate();
  }
  base.options["seeds"] = f.seeds;
  base.train.validate();
  const std::string hash = base.hash();
  err << "[" << command << "] config_hash=" << hash << '\n';

  Json rows = Json::array(), summary = Json::array();
  std::map<std::string, Json> means;
  for (const auto& [label, apply] : arms) {
    std::vector<Json> runs;
    for (std::size_t k = 0; k < f.seeds; ++k) {
      RunConfig rc = base;
      apply(rc);
      rc.train.seed = base.train.seed + k;
      Outcome o = run_training(rc, ds, err, command + " " + label, nullptr);
      Json row = metrics_json(o.final_metrics);
      row["arm"] = label;
      row["seed"] = rc.train.seed;
      row["best_epoch"] = o.train.best_epoch;
      runs.push_back(row);
      rows.push_back(row);
    }
    means[label] = mean_metrics(runs);
  }
  std::ostringstream table;
  table << table_header(command == "ablate" ? "variant" : "sessions");
  for (const auto& row : rows) {
    table << table_row(row["arm"].get<std::string>(), std::to_string(row["seed"].get<std::uint64_t>()),
                       row, "");
  }
  for (const auto& [label, apply] : arms) {
    std::optional<double> impv;
    if (means.contains(baseline)) impv = avg_improvement(means[label], means[baseline]);
    table << table_row(label, "mean", means[label], percent(impv));
    Json s = means[label];
    s["arm"] = label;
    s["avg_impv"] = impv ? Json(*impv) : Json(nullptr);
    summary.push_back(s);
  }
  out << table.str();
  Json res{{"dataset", dataset_name(f.train.data)},
           {"config_hash", hash},
           {"seed", base.train.seed},
           {"seeds", f.seeds},
           {"baseline", baseline},
           {"rows", rows},
           {"summary", summary},
           {"config", base.to_json()}};
  write_text(default_results(base, command), res.dump(2) + "\n");
  return 0;
}

int cmd_ablate(const AblateFlags& f, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::string, std::function<void(RunConfig&)>>> arms;
  for (const auto& name : split_list(f.variants)) {
    const MixerVariant v = variant_or_throw(name);
    arms.emplace_back(name, [v](RunConfig& rc) { rc.model.variant = v; });
  }
  if (arms.empty()) throw ConfigError(std::string("--variants is empty (valid: ") + kVariantNames + ")");
  return run_grid("ablate", f, arms, "eye", out, err);
}

int cmd_sweep_sessions(const AblateFlags& f, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::string, std::function<void(RunConfig&)>>> arms;
  for (std::size_t s : parse_sizes(f.sessions_list, "--sessions")) {
    arms.emplace_back(std::to_string(s), [s](RunConfig& rc) { rc.model.sessions = s; });
  }
  return run_grid("sweep-sessions", f, arms, "", out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TriMLP sequential recommender"};
  app.name("trimlp");
  app.require_subcommand(1);

  PreprocessFlags pre;
  auto* p = app.add_subcommand("preprocess", "Filter a raw log into a processed dataset");
  p->add_option("--input", pre.input, "Raw interaction log")->required();
  p->add_option("--format", pre.format, "tsv, csv or movielens");
  p->add_option("--output", pre.output, "Output directory")->required();
  p->add_option("--min-user", pre.min_user, "Minimum interactions per user");
  p->add_option("--min-item", pre.min_item, "Minimum interactions per item");
  p->add_option("--max-len", pre.max_len, "Window length recorded with the data");

  TrainFlags tr;
  auto* t = app.add_subcommand("train", "Train a model and save the best checkpoint");
  add_train_flags(t, tr, true, true);
  t->add_option("--out", tr.out, "Checkpoint directory");
  t->add_option("--bench-rounds", tr.bench_rounds, "Timed evaluation passes after training");

  EvalFlags ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Processed dataset directory")->required();
  e->add_option("--k", ev.ks, "Cutoffs, comma separated");
  e->add_option("--results", ev.results, "Results JSON path");
  e->add_option("--rounds", ev.rounds, "Timed evaluation passes (0 = none)");
  e->add_option("--threads", ev.threads, "Evaluation worker threads");
  e->add_flag("--mask-history", ev.mask_history, "Exclude previously seen items");

  EvalFlags bn;
  bn.rounds = 100;
  auto* b = app.add_subcommand("bench", "Time full evaluation passes");
  b->add_option("--checkpoint", bn.checkpoint, "Checkpoint file")->required();
  b->add_option("--data", bn.data, "Processed dataset directory")->required();
  b->add_option("--rounds", bn.rounds, "Timed passes after one warmup");
  b->add_option("--threads", bn.threads, "Worker threads (1 keeps timings comparable)");
  b->add_option("--results", bn.results, "Results JSON path");

  AblateFlags ab;
  auto* a = app.add_subcommand("ablate", "Compare mixer variants");
  add_train_flags(a, ab.train, false, true);
  a->add_option("--variants", ab.variants, kVariantNames);
  a->add_option("--seeds", ab.seeds, "Seeds per variant, counting up from --seed");

  AblateFlags sw;
  auto* s = app.add_subcommand("sweep-sessions", "Sweep the session count s");
  add_train_flags(s, sw.train, true, false);
  s->add_option("--sessions", sw.sessions_list, "Comma separated session counts");
  s->add_option("--seeds", sw.seeds, "Seeds per setting, counting up from --seed");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "trimlp-error[usage]: " << ex.what() << '\n';
    return 2;
  }

  try {
    if (p->parsed()) return cmd_preprocess(pre, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (e->parsed()) return cmd_eval(ev, out);
    if (b->parsed()) return cmd_bench(bn, out);
    if (a->parsed()) return cmd_ablate(ab, out, err);
    if (s->parsed()) return cmd_sweep_sessions(sw, out, err);
  } catch (const Error& ex) {
    err << "trimlp-error[" << ex.kind() << "]: " << ex.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& ex) {
    err << "trimlp-error[io]: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "trimlp-error[internal]: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace trimlp
