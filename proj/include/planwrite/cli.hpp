#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "planwrite/checkpoint.hpp"
#include "planwrite/dataset_io.hpp"
#include "planwrite/gamegen.hpp"
#include "planwrite/inference.hpp"
#include "planwrite/log.hpp"
#include "planwrite/metrics.hpp"
#include "planwrite/rotowire.hpp"
#include "planwrite/template_baseline.hpp"
#include "planwrite/training.hpp"

namespace planwrite::cli {

// Models run in 32-bit; the 64-bit instantiation is reserved for gradient
// checking in the test suite.
using Scalar = float;

inline Summary summary_from_tokens(std::vector<std::string> tokens) {
  Summary s;
  s.tokens = std::move(tokens);
  if (s.tokens.empty()) return s;
  s.sentence_starts.push_back(0);
  for (size_t i = 0; i + 1 < s.tokens.size(); ++i) {
    const std::string& t = s.tokens[i];
    if (t == "." || t == "!" || t == "?")
      s.sentence_starts.push_back(static_cast<int>(i) + 1);
  }
  return s;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : line) {
    if (c == ' ') {
      if (!cur.empty()) toks.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

inline std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

// One generated game as a JSON line: the plan with resolved records plus
// the summary as a token string.
inline nlohmann::json generation_to_json(const RecordTable& table, const ContentPlan& plan,
                                         const std::vector<std::string>& tokens) {
  nlohmann::json j;
  j["plan"] = nlohmann::json::array();
  for (int k = 0; k < plan.length(); ++k) {
    const Record& r = table.rec(plan.step(k));
    j["plan"].push_back({{"index", plan.step(k)},
                         {"type", r.type},
                         {"entity", r.entity},
                         {"value", r.value},
                         {"side", std::string(1, side_char(r.side))}});
  }
  j["summary"] = join_tokens(tokens);
  return j;
}

inline std::vector<Summary> load_generated(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "cannot open " + path);
  std::vector<Summary> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back(summary_from_tokens(split_tokens(j.at("summary").get<std::string>())));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
  return nlohmann::json{{"rg_count", r.rg_count},       {"rg_precision", r.rg_precision},
                        {"cs_precision", r.cs_precision}, {"cs_recall", r.cs_recall},
                        {"co_dld_pct", r.co_dld_pct},   {"bleu", r.bleu},
                        {"nondup_pct", r.nondup_pct},
                        {"flagged_examples", r.flagged_examples}};
}

inline std::string format_report_table(const MetricReport& r) {
  char buf[256];
  std::string out;
  out += "          RG#    RG P%   CS P%   CS R%   CO DLD%  BLEU    nondup%\n";
  std::snprintf(buf, sizeof(buf), "  %7.2f  %6.2f  %6.2f  %6.2f  %7.2f  %6.4f  %6.2f\n",
                r.rg_count, r.rg_precision, r.cs_precision, r.cs_recall, r.co_dld_pct, r.bleu,
                r.nondup_pct);
  out += buf;
  return out;
}

// Flat-key JSON config mirroring TrainConfig; command-line flags override
// file values.
inline void apply_config_file(const std::string& path, TrainConfig& cfg) {
  std::ifstream in(path);
  check(in.good(), "cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
  if (j.contains("lr_decay")) cfg.lr_decay = j["lr_decay"].get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("dropout")) cfg.dropout = j["dropout"].get<double>();
  if (j.contains("bptt_truncation")) cfg.bptt_truncation = j["bptt_truncation"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("copy")) cfg.copy = parse_copy_mode(j["copy"].get<std::string>());
  if (j.contains("no_gate")) cfg.no_gate = j["no_gate"].get<bool>();
  if (j.contains("no_planner")) cfg.no_planner = j["no_planner"].get<bool>();
  if (j.contains("clip_norm")) cfg.clip_norm = j["clip_norm"].get<double>();
  if (j.contains("min_count")) cfg.min_count = j["min_count"].get<int>();
  if (j.contains("val_fraction")) cfg.val_fraction = j["val_fraction"].get<double>();
  if (j.contains("hidden")) cfg.hidden = j["hidden"].get<int>();
}

inline GenerationConfig generation_limits(const Checkpoint<Scalar>& ck, int beam) {
  GenerationConfig gen;
  gen.beam_width = beam;
  gen.max_plan_len = std::max(1, static_cast<int>(std::ceil(2.0 * ck.avg_plan_len)));
  gen.max_summary_len = std::max(4, static_cast<int>(std::ceil(1.5 * ck.avg_summary_len)));
  return gen;
}

inline int run_make_data(int games, uint64_t seed, const std::string& out_path, int players,
                         int workers) {
  CorpusConfig cfg;
  cfg.players_per_team = players;
  std::vector<DatasetExample> corpus(static_cast<size_t>(games));
  parallel_for(games, workers, [&](int i) {
    corpus[static_cast<size_t>(i)] =
        generate_game(Rng::mix(seed, static_cast<uint64_t>(i)), cfg);
  });
  save_dataset(out_path, corpus);
  log_info("wrote " + std::to_string(games) + " games to " + out_path);
  return 0;
}

inline int run_extract_plans(const std::string& data_path, const std::string& rotowire_path,
                             const std::string& out_path) {
  std::vector<DatasetExample> corpus;
  if (!rotowire_path.empty()) {
    corpus = load_rotowire(rotowire_path);
  } else {
    corpus = load_dataset(data_path);
  }
  for (auto& ex : corpus) {
    ex.plan = extract_content_plan(ex.table, ex.summary);
    ex.summary = mark_copy_targets(ex.summary, ex.plan, ex.table);
  }
  save_dataset(out_path, corpus);
  log_info("extracted plans for " + std::to_string(corpus.size()) + " examples");
  return 0;
}

struct TrainCli {
  std::string data, val, config, checkpoint, log_path;
  bool keep_epoch_checkpoints = false;
  TrainConfig cfg;
};

inline int run_train(const TrainCli& t) {
  check(!t.checkpoint.empty(), "train: --checkpoint is required");
  auto corpus = load_dataset(t.data);
  std::vector<DatasetExample> val;
  if (!t.val.empty()) {
    val = load_dataset(t.val);
  } else if (t.cfg.val_fraction > 0 && corpus.size() >= 2) {
    const size_t n_val = std::max<size_t>(
        1, static_cast<size_t>(std::floor(t.cfg.val_fraction * corpus.size())));
    val.assign(corpus.end() - static_cast<long>(n_val), corpus.end());
    corpus.resize(corpus.size() - n_val);
  }

  std::ofstream log_out;
  if (!t.log_path.empty()) {
    log_out.open(t.log_path, std::ios::binary);
    check(log_out.good(), "train: cannot open log " + t.log_path);
  }

  EpochCallback<Scalar> sink = [&](const TrainSnapshot<Scalar>& snap) {
    Checkpoint<Scalar> ck{*snap.params, *snap.vocab, snap.avg_plan_len, snap.avg_summary_len};
    const std::string epoch_path =
        t.keep_epoch_checkpoints ? t.checkpoint + ".epoch" + std::to_string(snap.epoch)
                                 : t.checkpoint + ".last";
    save_checkpoint(epoch_path, ck);
    if (snap.improved) save_checkpoint(t.checkpoint, ck);
    return false;
  };

  TrainResult<Scalar> result = train<Scalar>(corpus, val, t.cfg, sink);

  for (const EpochStats& es : result.log) {
    nlohmann::json j{{"epoch", es.epoch},
                     {"train_loss", es.train_loss},
                     {"val_loss", es.val_loss},
                     {"lr", es.lr},
                     {"clip_events", es.clip_events}};
    if (result.params.cfg.use_planner)
      j["plan_acc"] = es.plan_acc;
    else
      j["plan_acc"] = nullptr;
    if (log_out.is_open())
      log_out << j.dump() << "\n";
    else
      std::cout << j.dump() << "\n";
  }
  log_info("training done; best epoch " + std::to_string(result.best_epoch));
  return 0;
}

inline int run_generate(const std::string& data_path, const std::string& ckpt_path,
                        const std::string& out_path, int beam, bool oracle_plans,
                        int workers) {
  Checkpoint<Scalar> ck = load_checkpoint<Scalar>(ckpt_path);
  auto corpus = load_dataset(data_path);
  GenerationConfig gen = generation_limits(ck, beam);

  std::vector<nlohmann::json> lines(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), workers, [&](int i) {
    const auto& ex = corpus[static_cast<size_t>(i)];
    GenerationOutput out =
        generate(ck.params, ck.vocab, ex.table, gen, oracle_plans ? &ex.plan : nullptr);
    lines[static_cast<size_t>(i)] = generation_to_json(ex.table, out.plan, out.tokens);
  });

  std::ofstream out(out_path, std::ios::binary);
  check(out.good(), "generate: cannot open " + out_path);
  for (const auto& j : lines) out << j.dump() << "\n";
  log_info("generated " + std::to_string(corpus.size()) + " summaries");
  return 0;
}

inline int run_evaluate(const std::string& gold_path, const std::string& system_path,
                        const std::string& out_path, int workers, bool quiet) {
  auto gold = load_dataset(gold_path);
  auto system = load_generated(system_path);
  MetricReport rep = evaluate_corpus(gold, system, workers);
  const std::string json_text = report_to_json(rep).dump();
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    check(out.good(), "evaluate: cannot open " + out_path);
    out << json_text << "\n";
    if (!quiet) std::cout << format_report_table(rep);
  } else {
    if (!quiet) std::cout << format_report_table(rep);
    std::cout << json_text << "\n";
  }
  return 0;
}

inline int run_template(const std::string& data_path, const std::string& out_path,
                        int workers) {
  auto corpus = load_dataset(data_path);
  std::vector<nlohmann::json> lines(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), workers, [&](int i) {
    const auto& ex = corpus[static_cast<size_t>(i)];
    TemplateOutput out = render_template(ex.table);
    lines[static_cast<size_t>(i)] = generation_to_json(ex.table, out.plan, out.summary.tokens);
  });
  std::ofstream out(out_path, std::ios::binary);
  check(out.good(), "template: cannot open " + out_path);
  for (const auto& j : lines) out << j.dump() << "\n";
  log_info("rendered " + std::to_string(corpus.size()) + " template summaries");
  return 0;
}

// Exit codes: 0 success, 1 usage error, 2 runtime error.
inline int dispatch(std::vector<std::string> args) {
  CLI::App app{"two-stage content-planning data-to-text pipeline"};
  app.require_subcommand(1);

  // make-data
  auto* make = app.add_subcommand("make-data", "generate a synthetic box-score corpus");
  int games = 64, players = 3, md_workers = 1;
  uint64_t md_seed = 1;
  std::string md_out;
  make->add_option("--games", games, "number of games");
  make->add_option("--seed", md_seed, "corpus seed");
  make->add_option("--players", players, "players per team");
  make->add_option("--workers", md_workers, "generation workers");
  make->add_option("--out", md_out, "output JSONL path")->required();

  // extract-plans
  auto* extract = app.add_subcommand("extract-plans", "recompute plans and copy labels");
  std::string ep_data, ep_rotowire, ep_out;
  extract->add_option("--data", ep_data, "dataset JSONL input");
  extract->add_option("--rotowire", ep_rotowire, "box-score JSON input (RotoWire layout)");
  extract->add_option("--out", ep_out, "output JSONL path")->required();

  // train; flags parse into a shadow config so that precedence is
  // defaults < config file < explicit flags.
  auto* tr = app.add_subcommand("train", "train a model");
  TrainCli tcli;
  TrainConfig flag_cfg;
  std::string copy_name;
  tr->add_option("--data", tcli.data, "training JSONL")->required();
  tr->add_option("--val", tcli.val, "validation JSONL");
  tr->add_option("--config", tcli.config, "JSON config file");
  tr->add_option("--checkpoint", tcli.checkpoint, "checkpoint output path")->required();
  tr->add_option("--log", tcli.log_path, "per-epoch JSONL log path");
  auto* o_seed = tr->add_option("--seed", flag_cfg.seed, "training seed");
  auto* o_copy = tr->add_option("--copy", copy_name, "copy mode: joint|conditional");
  auto* o_nogate = tr->add_flag("--no-gate", "disable the content selection gate");
  auto* o_noplan = tr->add_flag("--no-planner", "disable the content planner");
  auto* o_epochs = tr->add_option("--epochs", flag_cfg.epochs, "training epochs");
  auto* o_lr = tr->add_option("--lr", flag_cfg.lr, "initial learning rate");
  auto* o_decay = tr->add_option("--lr-decay", flag_cfg.lr_decay, "learning rate decay");
  auto* o_batch = tr->add_option("--batch-size", flag_cfg.batch_size, "batch size");
  auto* o_dropout = tr->add_option("--dropout", flag_cfg.dropout, "dropout rate");
  auto* o_bptt = tr->add_option("--bptt", flag_cfg.bptt_truncation, "BPTT truncation");
  auto* o_hidden = tr->add_option("--hidden", flag_cfg.hidden, "hidden width");
  auto* o_minc = tr->add_option("--min-count", flag_cfg.min_count, "word min count");
  auto* o_clip = tr->add_option("--clip-norm", flag_cfg.clip_norm, "gradient clip (0 = off)");
  auto* o_valf = tr->add_option("--val-fraction", flag_cfg.val_fraction,
                                "held-out fraction when --val is absent");
  tr->add_flag("--keep-epoch-checkpoints", tcli.keep_epoch_checkpoints,
               "write one checkpoint file per epoch");

  // generate
  auto* gen = app.add_subcommand("generate", "two-stage beam-search generation");
  std::string g_data, g_ckpt, g_out;
  int g_beam = 5, g_workers = 1;
  bool g_oracle = false;
  gen->add_option("--data", g_data, "tables JSONL")->required();
  gen->add_option("--checkpoint", g_ckpt, "model checkpoint")->required();
  gen->add_option("--out", g_out, "output JSONL path")->required();
  gen->add_option("--beam", g_beam, "beam width");
  gen->add_flag("--oracle-plans", g_oracle, "condition on gold plans");
  gen->add_option("--workers", g_workers, "generation workers");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score generated output against gold");
  std::string e_gold, e_system, e_out;
  int e_workers = 1;
  bool e_quiet = false;
  ev->add_option("--gold", e_gold, "gold dataset JSONL")->required();
  ev->add_option("--system", e_system, "generated JSONL")->required();
  ev->add_option("--out", e_out, "metric report JSON path");
  ev->add_option("--workers", e_workers, "evaluation workers");
  ev->add_flag("--quiet", e_quiet, "suppress the human-readable table");

  // template
  auto* tmpl = app.add_subcommand("template", "rule-based baseline generation");
  std::string t_data, t_out;
  int t_workers = 1;
  tmpl->add_option("--data", t_data, "tables JSONL")->required();
  tmpl->add_option("--out", t_out, "output JSONL path")->required();
  tmpl->add_option("--workers", t_workers, "workers");

  std::vector<const char*> argv;
  argv.push_back("planwrite");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (make->parsed()) return run_make_data(games, md_seed, md_out, players, md_workers);
    if (extract->parsed()) {
      if (ep_data.empty() == ep_rotowire.empty()) {
        log_error("extract-plans: exactly one of --data / --rotowire is required");
        return 1;
      }
      return run_extract_plans(ep_data, ep_rotowire, ep_out);
    }
    if (tr->parsed()) {
      if (!tcli.config.empty()) apply_config_file(tcli.config, tcli.cfg);
      if (o_seed->count() > 0) tcli.cfg.seed = flag_cfg.seed;
      if (o_copy->count() > 0) tcli.cfg.copy = parse_copy_mode(copy_name);
      if (o_nogate->count() > 0) tcli.cfg.no_gate = true;
      if (o_noplan->count() > 0) tcli.cfg.no_planner = true;
      if (o_epochs->count() > 0) tcli.cfg.epochs = flag_cfg.epochs;
      if (o_lr->count() > 0) tcli.cfg.lr = flag_cfg.lr;
      if (o_decay->count() > 0) tcli.cfg.lr_decay = flag_cfg.lr_decay;
      if (o_batch->count() > 0) tcli.cfg.batch_size = flag_cfg.batch_size;
      if (o_dropout->count() > 0) tcli.cfg.dropout = flag_cfg.dropout;
      if (o_bptt->count() > 0) tcli.cfg.bptt_truncation = flag_cfg.bptt_truncation;
      if (o_hidden->count() > 0) tcli.cfg.hidden = flag_cfg.hidden;
      if (o_minc->count() > 0) tcli.cfg.min_count = flag_cfg.min_count;
      if (o_clip->count() > 0) tcli.cfg.clip_norm = flag_cfg.clip_norm;
      if (o_valf->count() > 0) tcli.cfg.val_fraction = flag_cfg.val_fraction;
      return run_train(tcli);
    }
    if (gen->parsed()) return run_generate(g_data, g_ckpt, g_out, g_beam, g_oracle, g_workers);
    if (ev->parsed()) return run_evaluate(e_gold, e_system, e_out, e_workers, e_quiet);
    if (tmpl->parsed()) return run_template(t_data, t_out, t_workers);
  } catch (const std::exception& e) {
    log_error(e.what());
    return 2;
  }
  return 1;
}

}  // namespace planwrite::cli
