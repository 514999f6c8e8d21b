// Command-line front end: simulate, train, eval, sweep, gradcheck, export-metrics.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "heroes/data/corpus_io.h"
#include "heroes/harness/config.h"
#include "heroes/harness/evaluate.h"
#include "heroes/harness/experiments.h"
#include "heroes/harness/train.h"
#include "heroes/sim/generator.h"

namespace fs = std::filesystem;
using namespace heroes;
using namespace heroes::harness;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <class T>
std::vector<T> parse_list(const std::string& s, T (*parse)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse(tok));
  }
  return out;
}

double parse_double(const std::string& s) { return std::stod(s); }
std::uint64_t parse_u64(const std::string& s) { return std::stoull(s); }

// TrainConfig: --config file first, then every flag the user actually gave.
struct TrainFlags {
  std::string config_path;
  json overrides = json::object();

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON training config");
    str(app, "--architecture", "architecture", "heroes | lstm");
    str(app, "--mode", "mode", "biased | unbiased-plain | unbiased-comb");
    str(app, "--ablation", "ablation", "none | intra | inter | unit");
    str(app, "--gate-source", "gate_source", "labels | predicted (training)");
    str(app, "--eval-gate-source", "eval_gate_source", "labels | predicted (inference)");
    str(app, "--optimizer", "optimizer", "adam | sgd");
    real(app, "--alpha", "alpha");
    real(app, "--beta", "beta");
    real(app, "--gamma", "gamma");
    real(app, "--learning-rate", "learning_rate");
    real(app, "--dt", "dt");
    count(app, "--hidden", "hidden");
    count(app, "--features", "features");
    count(app, "--max-positions", "max_positions");
    count(app, "--epochs", "epochs");
    count(app, "--batch-size", "batch_size");
    count(app, "--patience", "patience");
    flag(app, "--behavior-embedding", "use_behavior_embedding");
    flag(app, "--share-tracks", "share_track_params");
    flag(app, "--early-stopping", "early_stopping");
    str(app, "--train", "train_path", "training corpus (JSONL)");
    str(app, "--valid", "valid_path", "validation corpus (JSONL)");
    str(app, "--test", "test_path", "test corpus (JSONL)");
    str(app, "--output-dir", "output_dir", "where outputs go");
  }

  TrainConfig resolve(std::optional<std::uint64_t> seed) const {
    json j = config_path.empty() ? json::object() : read_json(config_path);
    for (const auto& [k, v] : overrides.items()) j[k] = v;
    if (seed) j["seed"] = *seed;
    return config_from_json(j);
  }

 private:
  void str(CLI::App* app, const char* name, const char* key, const char* help) {
    app->add_option_function<std::string>(
        name, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }
  void real(CLI::App* app, const char* name, const char* key) {
    app->add_option_function<double>(name, [this, key](double v) { overrides[key] = v; });
  }
  void count(CLI::App* app, const char* name, const char* key) {
    app->add_option_function<std::size_t>(name, [this, key](std::size_t v) { overrides[key] = v; });
  }
  void flag(CLI::App* app, const char* name, const char* key) {
    const std::string spec = std::string(name) + ",!--no-" + (name + 2);
    app->add_flag_function(spec, [this, key](std::int64_t n) { overrides[key] = n > 0; });
  }
};

Corpus load(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " corpus given");
  return read_corpus(fs::path(path));
}

void print_report(const metrics::EvalReport& r) {
  std::cout << metrics::to_json(r) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HEROES ranking models: simulate, train, evaluate"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic corpus");
  std::uint64_t sim_seed = 0;
  std::string gen_config, sim_out, split_dir;
  std::optional<std::size_t> n_queries, min_len, max_len, n_features;
  double pbm_tau = -1.0, pbm_eta = 1.0, label_fraction = 0.01;
  sim_cmd->add_option("--seed", sim_seed, "generator seed")->required();
  sim_cmd->add_option("--generator-config", gen_config, "JSON generator config");
  sim_cmd->add_option("--queries", n_queries, "number of lists");
  sim_cmd->add_option("--min-length", min_len);
  sim_cmd->add_option("--max-length", max_len);
  sim_cmd->add_option("--features", n_features);
  sim_cmd->add_option("--out", sim_out, "corpus JSONL (whole corpus)");
  sim_cmd->add_option("--split-dir", split_dir, "also write train/valid/test.jsonl (6:2:2)");
  sim_cmd->add_option("--pbm-tau", pbm_tau, "rewrite split logs with PBM clicks at this tau");
  sim_cmd->add_option("--pbm-eta", pbm_eta, "PBM position decay exponent");
  sim_cmd->add_option("--label-fraction", label_fraction, "lists used to fit the initial ranker");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  TrainFlags train_flags;
  train_flags.attach(train_cmd);
  std::uint64_t train_seed = 0;
  std::string resume_path;
  train_cmd->add_option("--seed", train_seed, "training seed")->required();
  train_cmd->add_option("--resume", resume_path, "continue from a checkpoint");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ckpt_path, corpus_path, against = "labels", eval_json, eval_csv;
  bool use_last = false;
  eval_cmd->add_option("--checkpoint", ckpt_path)->required();
  eval_cmd->add_option("--corpus", corpus_path)->required();
  eval_cmd->add_option("--against", against, "labels | true_relevance");
  eval_cmd->add_option("--json", eval_json, "write the report as JSON");
  eval_cmd->add_option("--csv", eval_csv, "write the report as CSV");
  eval_cmd->add_flag("--last", use_last, "use the last parameters instead of the best validated ones");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid sweep over one setting");
  TrainFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::string kind, grid, seeds = "0", modes = "biased", sweep_out, sweep_against = "true_relevance";
  double sweep_eta = 1.0, sweep_fraction = 0.01;
  sweep_cmd->add_option("--kind", kind, "alpha_ratio | tau | data_fraction")->required();
  sweep_cmd->add_option("--grid", grid, "comma-separated values")->required();
  sweep_cmd->add_option("--seeds", seeds, "comma-separated seeds");
  sweep_cmd->add_option("--modes", modes, "comma-separated modes");
  sweep_cmd->add_option("--against", sweep_against, "labels | true_relevance");
  sweep_cmd->add_option("--pbm-eta", sweep_eta);
  sweep_cmd->add_option("--label-fraction", sweep_fraction);
  sweep_cmd->add_option("--out", sweep_out, "CSV output (stdout when empty)");

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  TrainFlags gc_flags;
  gc_flags.attach(gc_cmd);
  GradcheckSpec gc_spec;
  std::string gc_modes = "biased,unbiased-plain,unbiased-comb";
  gc_cmd->add_option("--sessions", gc_spec.sessions);
  gc_cmd->add_option("--length", gc_spec.length);
  gc_cmd->add_option("--eps", gc_spec.eps);
  gc_cmd->add_option("--tolerance", gc_spec.tolerance);
  gc_cmd->add_option("--check-seed", gc_spec.seed);
  gc_cmd->add_option("--modes", gc_modes);

  // export-metrics
  auto* exp_cmd = app.add_subcommand("export-metrics", "Metric records and re-ranking curves");
  std::string exp_ckpt, exp_corpus, exp_dir, exp_against = "true_relevance";
  exp_cmd->add_option("--checkpoint", exp_ckpt)->required();
  exp_cmd->add_option("--corpus", exp_corpus)->required();
  exp_cmd->add_option("--out-dir", exp_dir)->required();
  exp_cmd->add_option("--against", exp_against, "labels | true_relevance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_cmd) {
      sim::GeneratorConfig g = gen_config.empty() ? sim::GeneratorConfig{}
                                                  : generator_from_json(read_json(gen_config));
      g.seed = sim_seed;
      if (n_queries) g.n_queries = *n_queries;
      if (min_len) g.min_length = *min_len;
      if (max_len) g.max_length = *max_len;
      if (n_features) g.features = *n_features;
      g.validate();
      const sim::GeneratedCorpus gc = sim::gen_sessions(g);
      const sim::GapStats gaps = sim::measure_gaps(gc.sessions);
      std::cerr << "click_offset " << gc.calibration.click_offset << " conv_offset "
                << gc.calibration.conv_offset << " click_gap " << gaps.mean_click_gap
                << " purchase_gap " << gaps.mean_purchase_gap << '\n';
      if (!sim_out.empty()) write_corpus(fs::path(sim_out), gc.sessions);
      if (!split_dir.empty()) {
        Splits s = split_corpus(gc.sessions, sim_seed);
        if (pbm_tau >= 0.0) s = biased_splits(s, pbm_eta, pbm_tau, label_fraction, sim_seed);
        fs::create_directories(split_dir);
        write_corpus(fs::path(split_dir) / "train.jsonl", s.train);
        write_corpus(fs::path(split_dir) / "valid.jsonl", s.valid);
        write_corpus(fs::path(split_dir) / "test.jsonl", s.test);
      }
      if (sim_out.empty() && split_dir.empty()) write_corpus(std::cout, gc.sessions);
      return 0;
    }

    if (*train_cmd) {
      const TrainConfig c = train_flags.resolve(train_seed);
      const Corpus tr = load(c.train_path, "training");
      const Corpus va = c.valid_path.empty() ? Corpus{} : read_corpus(fs::path(c.valid_path));
      const fs::path out = c.output_dir.empty() ? fs::path("run") : fs::path(c.output_dir);
      fs::create_directories(out);
      std::optional<Checkpoint> resume;
      if (!resume_path.empty()) resume = load_checkpoint(resume_path);
      TrainHooks hooks;
      hooks.on_epoch = [&](const EpochLog& e, const Checkpoint& ck) {
        std::cerr << "epoch " << e.epoch << " loss " << e.train_loss;
        if (e.valid_cvr_auc) std::cerr << " valid_cvr_auc " << *e.valid_cvr_auc;
        std::cerr << '\n';
        save_checkpoint(ck, out / "checkpoint.json");
        return true;
      };
      const TrainResult r = train(c, tr, va, resume ? &*resume : nullptr, hooks);
      save_checkpoint(r.checkpoint, out / "checkpoint.json");
      write_text(out / "config.json", to_json(c).dump(2) + "\n");
      std::ostringstream log;
      write_log_csv(log, r.log);
      write_text(out / "log.csv", log.str());
      if (!c.test_path.empty()) {
        const metrics::EvalReport rep =
            evaluate(r.model, read_corpus(fs::path(c.test_path)), Against::kLabels);
        write_text(out / "test_metrics.json", metrics::to_json(rep) + "\n");
        print_report(rep);
      }
      return 0;
    }

    if (*eval_cmd) {
      const Checkpoint ck = load_checkpoint(ckpt_path);
      const RankingModel m = use_last ? model_from_checkpoint(ck) : best_model(ck);
      const metrics::EvalReport rep =
          evaluate(m, read_corpus(fs::path(corpus_path)), parse_against(against));
      if (!eval_json.empty()) write_text(eval_json, metrics::to_json(rep) + "\n");
      if (!eval_csv.empty()) {
        std::ostringstream os;
        metrics::write_csv(os, rep);
        write_text(eval_csv, os.str());
      }
      print_report(rep);
      return 0;
    }

    if (*sweep_cmd) {
      const TrainConfig base = sweep_flags.resolve(std::nullopt);
      SweepSpec spec;
      spec.kind = parse_sweep_kind(kind);
      spec.grid = parse_list<double>(grid, parse_double);
      spec.seeds = parse_list<std::uint64_t>(seeds, parse_u64);
      spec.modes = parse_list<Mode>(modes, parse_mode);
      spec.eta = sweep_eta;
      spec.label_fraction = sweep_fraction;
      spec.against = parse_against(sweep_against);
      const Splits data{load(base.train_path, "training"), load(base.valid_path, "validation"),
                        load(base.test_path, "test")};
      const auto rows = sweep(spec, base, data);
      std::ostringstream os;
      write_sweep_csv(os, rows);
      if (sweep_out.empty()) {
        std::cout << os.str();
      } else {
        write_text(sweep_out, os.str());
      }
      return 0;
    }

    if (*gc_cmd) {
      const TrainConfig c = gc_flags.resolve(std::nullopt);
      const auto rows = gradcheck(c, gc_spec, parse_list<Mode>(gc_modes, parse_mode));
      bool ok = true;
      for (const GradcheckRow& r : rows) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << to_string(r.mode)
                  << " max_rel_error=" << r.max_relative_error;
        if (!r.pass) {
          std::cout << " worst=" << r.worst << " analytic=" << r.analytic
                    << " numeric=" << r.numeric;
        }
        std::cout << '\n';
        ok = ok && r.pass;
      }
      return ok ? 0 : 1;
    }

    if (*exp_cmd) {
      const Checkpoint ck = load_checkpoint(exp_ckpt);
      const RankingModel m = best_model(ck);
      const Corpus corpus = read_corpus(fs::path(exp_corpus));
      const Against a = parse_against(exp_against);
      const auto preds = predict_corpus(m, corpus);
      const metrics::EvalReport rep = report(preds, corpus, a);
      const fs::path dir(exp_dir);
      fs::create_directories(dir);
      write_text(dir / "metrics.json", metrics::to_json(rep) + "\n");
      std::ostringstream csv;
      metrics::write_csv(csv, rep);
      write_text(dir / "metrics.csv", csv.str());

      std::vector<std::string> names{"ctr_model", "cvr_model"};
      std::vector<std::vector<double>> curves{reranked_curve(preds, Objective::kCtr),
                                              reranked_curve(preds, Objective::kCvr)};
      if (a == Against::kTrueRelevance) {
        names.insert(names.end(), {"ctr_relevance", "cvr_relevance"});
        curves.push_back(relevance_curve(corpus, Objective::kCtr));
        curves.push_back(relevance_curve(corpus, Objective::kCvr));
      }
      std::ostringstream curve_csv;
      write_curves_csv(curve_csv, names, curves);
      write_text(dir / "rerank_curve.csv", curve_csv.str());
      print_report(rep);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
