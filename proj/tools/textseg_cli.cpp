// textseg command-line front end. Everything goes through the C API.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "textseg/textseg.h"

namespace {

struct Common {
  std::string out;
  uint64_t seed = 13;
  size_t jobs = 1;
  std::string oov = "zeros";
};

ts_oov_policy parse_oov(const std::string& name) { return name == "mean" ? TS_OOV_MEAN : TS_OOV_ZEROS; }

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// Runs a command, prints its report (or a per-document table for evaluate),
// and maps the status to the process exit code.
template <typename Fn>
int run(Fn&& fn, bool table = false) {
  char* report = nullptr;
  const ts_status status = fn(&report);
  if (report) {
    if (table) {
      const auto j = nlohmann::json::parse(report);
      std::printf("%-40s %6s %4s %8s\n", "document", "n", "k", "pk");
      for (const auto& d : j.at("documents")) {
        std::printf("%-40s %6zu %4zu %8.4f\n", d.at("id").get<std::string>().c_str(), d.at("n").get<size_t>(),
                    d.at("k").get<size_t>(), d.at("pk").get<double>());
      }
      for (const auto& s : j.at("skipped")) {
        std::printf("%-40s skipped (%s)\n", s.at("id").get<std::string>().c_str(),
                    s.at("reason").get<std::string>().c_str());
      }
      const auto& agg = j.at("aggregate_pk");
      if (agg.is_null()) {
        std::printf("aggregate_pk: n/a (%zu evaluated, %zu skipped)\n", j.at("evaluated").get<size_t>(),
                    j.at("skipped_count").get<size_t>());
      } else {
        std::printf("aggregate_pk: %.6f (%zu evaluated, %zu skipped)\n", agg.get<double>(),
                    j.at("evaluated").get<size_t>(), j.at("skipped_count").get<size_t>());
      }
    } else {
      std::cout << report << "\n";
    }
    ts_string_free(report);
  }
  if (status != TS_OK) {
    std::cerr << "textseg: " << ts_last_error() << "\n";
    return status == TS_ERR_INTERNAL ? 2 : static_cast<int>(status);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"textseg: supervised text segmentation toolkit"};
  app.set_version_flag("--version", std::string(ts_version()));
  app.require_subcommand(1);

  // build-corpus
  ts_build_corpus_options build;
  ts_build_corpus_defaults(&build);
  std::string build_in, build_out;
  auto* cmd_build = app.add_subcommand("build-corpus", "Parse, filter and label documents; write 80/10/10 splits");
  cmd_build->add_option("--in", build_in, "Directory of documents in the segment-separator format")->required();
  cmd_build->add_option("--out", build_out, "Output directory")->required();
  cmd_build->add_option("--seed", build.seed, "Split seed")->capture_default_str();
  size_t build_jobs = 1;
  cmd_build->add_option("--jobs", build_jobs, "Unused; accepted for uniformity");

  // stats
  ts_stats_options stats;
  ts_stats_defaults(&stats);
  std::string stats_corpus, stats_out;
  auto* cmd_stats = app.add_subcommand("stats", "Segment length and segments-per-document statistics");
  cmd_stats->add_option("corpus", stats_corpus, "Labeled corpus (.jsonl, .json or split manifest)")->required();
  cmd_stats->add_option("--out", stats_out, "Also write stats.json and a manifest here");

  // train
  ts_train_options tr;
  ts_train_defaults(&tr);
  std::string tr_train, tr_dev, tr_vectors, tr_init;
  Common tr_common;
  double tr_clip = 0.0;
  bool tr_no_shuffle = false, tr_raw = false;
  auto* cmd_train = app.add_subcommand("train", "Train the hierarchical BiLSTM segmenter with SGD");
  cmd_train->add_option("--train", tr_train, "Training corpus")->required();
  cmd_train->add_option("--dev", tr_dev, "Dev corpus for per-epoch loss and best.ckpt");
  cmd_train->add_option("--vectors", tr_vectors, "Word vectors in text format")->required();
  cmd_train->add_option("--out", tr_common.out, "Output directory")->required();
  cmd_train->add_option("--init", tr_init, "Start from this checkpoint");
  cmd_train->add_option("--h1", tr.h1, "Sentence encoder hidden size")->capture_default_str();
  cmd_train->add_option("--h2", tr.h2, "Sentence-level hidden size")->capture_default_str();
  cmd_train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  cmd_train->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  cmd_train->add_option("--clip", tr_clip, "Global gradient-norm clip (off when omitted)");
  cmd_train->add_option("--patience", tr.patience, "Early stopping patience on dev loss (0 = off)")
      ->capture_default_str();
  cmd_train->add_flag("--no-shuffle", tr_no_shuffle, "Keep corpus order every epoch");
  cmd_train->add_flag("--raw", tr_raw, "Skip the training transform (first-segment and list/code removal)");
  cmd_train->add_option("--seed", tr_common.seed, "Init and shuffle seed")->capture_default_str();
  cmd_train->add_option("--jobs", tr_common.jobs, "Threads for dev evaluation")->capture_default_str();
  cmd_train->add_option("--oov", tr_common.oov, "OOV policy")->check(CLI::IsMember({"zeros", "mean"}))
      ->capture_default_str();

  // tune
  ts_tune_options tu;
  ts_tune_defaults(&tu);
  std::string tu_model, tu_vectors, tu_dev;
  Common tu_common;
  auto* cmd_tune = app.add_subcommand("tune", "Pick the decoding threshold that minimizes dev Pk");
  cmd_tune->add_option("--model", tu_model, "Checkpoint")->required();
  cmd_tune->add_option("--vectors", tu_vectors, "Word vectors")->required();
  cmd_tune->add_option("--dev", tu_dev, "Dev corpus")->required();
  cmd_tune->add_option("--out", tu_common.out, "Output directory")->required();
  cmd_tune->add_option("--seed", tu_common.seed, "Unused; accepted for uniformity");
  cmd_tune->add_option("--jobs", tu_common.jobs, "Threads")->capture_default_str();
  cmd_tune->add_option("--oov", tu_common.oov, "OOV policy")->check(CLI::IsMember({"zeros", "mean"}));

  // predict
  ts_predict_options pr;
  ts_predict_defaults(&pr);
  std::string pr_model, pr_vectors, pr_corpus, pr_tau_file;
  std::optional<double> pr_tau;
  Common pr_common;
  auto* cmd_predict = app.add_subcommand("predict", "Segment documents with a trained model");
  cmd_predict->add_option("--model", pr_model, "Checkpoint")->required();
  cmd_predict->add_option("--vectors", pr_vectors, "Word vectors")->required();
  cmd_predict->add_option("--corpus", pr_corpus, "Documents to segment")->required();
  cmd_predict->add_option("--out", pr_common.out, "Output directory")->required();
  cmd_predict->add_option("--tau", pr_tau, "Decoding threshold");
  cmd_predict->add_option("--tau-file", pr_tau_file, "tau.json written by tune");
  cmd_predict->add_option("--seed", pr_common.seed, "Unused; accepted for uniformity");
  cmd_predict->add_option("--jobs", pr_common.jobs, "Threads")->capture_default_str();
  cmd_predict->add_option("--oov", pr_common.oov, "OOV policy")->check(CLI::IsMember({"zeros", "mean"}));

  // evaluate
  ts_evaluate_options ev;
  ts_evaluate_defaults(&ev);
  std::string ev_corpus, ev_pred, ev_model, ev_vectors, ev_tau_file, ev_baseline, ev_variant = "sentences";
  std::optional<double> ev_tau, ev_baseline_k;
  Common ev_common;
  auto* cmd_eval = app.add_subcommand("evaluate", "Pk of predictions, a model, or the random baseline");
  cmd_eval->add_option("--corpus", ev_corpus, "Reference corpus")->required();
  cmd_eval->add_option("--out", ev_common.out, "Output directory")->required();
  cmd_eval->add_option("--predictions", ev_pred, "predictions.jsonl to score");
  cmd_eval->add_option("--model", ev_model, "Checkpoint to run");
  cmd_eval->add_option("--vectors", ev_vectors, "Word vectors (with --model)");
  cmd_eval->add_option("--tau", ev_tau, "Decoding threshold (with --model)");
  cmd_eval->add_option("--tau-file", ev_tau_file, "tau.json (with --model)");
  cmd_eval->add_option("--baseline", ev_baseline, "Baseline segmenter")->check(CLI::IsMember({"random"}));
  cmd_eval->add_option("--baseline-k", ev_baseline_k, "Random baseline splits with probability 1/k");
  cmd_eval->add_option("--variant", ev_variant, "Pk window unit")->check(CLI::IsMember({"sentences", "words"}))
      ->capture_default_str();
  cmd_eval->add_option("--seed", ev_common.seed, "Baseline seed")->capture_default_str();
  cmd_eval->add_option("--jobs", ev_common.jobs, "Threads")->capture_default_str();
  cmd_eval->add_option("--oov", ev_common.oov, "OOV policy")->check(CLI::IsMember({"zeros", "mean"}));

  // gen-synth
  ts_gen_synth_options gs;
  ts_gen_synth_defaults(&gs);
  std::string gs_out;
  std::vector<size_t> gs_range;
  auto* cmd_gen = app.add_subcommand("gen-synth", "Generate a synthetic corpus of concatenated passages");
  cmd_gen->add_option("--out", gs_out, "Output directory")->required();
  cmd_gen->add_option("--docs", gs.docs, "Documents")->capture_default_str();
  cmd_gen->add_option("--segs-per-doc", gs.segs_per_doc, "Passages per document")->capture_default_str();
  cmd_gen->add_option("--seg-len", gs_range, "Passage length range LO HI (sentences)")->expected(2);
  cmd_gen->add_option("--sources", gs.sources, "Distinct passage sources")->capture_default_str();
  cmd_gen->add_option("--sentences-per-source", gs.sentences_per_source, "Pool size per source")
      ->capture_default_str();
  cmd_gen->add_option("--words-min", gs.words_min, "Minimum words per sentence")->capture_default_str();
  cmd_gen->add_option("--words-max", gs.words_max, "Maximum words per sentence")->capture_default_str();
  cmd_gen->add_option("--vocab", gs.vocab_per_source, "Vocabulary per source")->capture_default_str();
  cmd_gen->add_option("--dim", gs.dim, "Embedding dimension")->capture_default_str();
  cmd_gen->add_option("--seed", gs.seed, "Seed")->capture_default_str();
  size_t gen_jobs = 1;
  cmd_gen->add_option("--jobs", gen_jobs, "Unused; accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*cmd_build) {
    build.in_dir = build_in.c_str();
    build.out_dir = build_out.c_str();
    return run([&](char** r) { return ts_build_corpus(&build, r); });
  }
  if (*cmd_stats) {
    stats.corpus = stats_corpus.c_str();
    stats.out_dir = or_null(stats_out);
    return run([&](char** r) { return ts_stats(&stats, r); });
  }
  if (*cmd_train) {
    tr.train = tr_train.c_str();
    tr.dev = or_null(tr_dev);
    tr.vectors = tr_vectors.c_str();
    tr.out_dir = tr_common.out.c_str();
    tr.init_checkpoint = or_null(tr_init);
    tr.clip = tr_clip;
    tr.shuffle = tr_no_shuffle ? 0 : 1;
    tr.prepare = tr_raw ? 0 : 1;
    tr.seed = tr_common.seed;
    tr.jobs = tr_common.jobs;
    tr.oov = parse_oov(tr_common.oov);
    return run([&](char** r) { return ts_train(&tr, r); });
  }
  if (*cmd_tune) {
    tu.model = tu_model.c_str();
    tu.vectors = tu_vectors.c_str();
    tu.dev = tu_dev.c_str();
    tu.out_dir = tu_common.out.c_str();
    tu.jobs = tu_common.jobs;
    tu.oov = parse_oov(tu_common.oov);
    return run([&](char** r) { return ts_tune(&tu, r); });
  }
  if (*cmd_predict) {
    pr.model = pr_model.c_str();
    pr.vectors = pr_vectors.c_str();
    pr.corpus = pr_corpus.c_str();
    pr.out_dir = pr_common.out.c_str();
    pr.has_tau = pr_tau ? 1 : 0;
    pr.tau = pr_tau.value_or(0.0);
    pr.tau_file = or_null(pr_tau_file);
    pr.jobs = pr_common.jobs;
    pr.oov = parse_oov(pr_common.oov);
    return run([&](char** r) { return ts_predict(&pr, r); });
  }
  if (*cmd_eval) {
    ev.corpus = ev_corpus.c_str();
    ev.out_dir = ev_common.out.c_str();
    ev.predictions = or_null(ev_pred);
    ev.model = or_null(ev_model);
    ev.vectors = or_null(ev_vectors);
    ev.has_tau = ev_tau ? 1 : 0;
    ev.tau = ev_tau.value_or(0.0);
    ev.tau_file = or_null(ev_tau_file);
    ev.random_baseline = ev_baseline == "random" ? 1 : 0;
    ev.baseline_k = ev_baseline_k.value_or(0.0);
    ev.variant = ev_variant == "words" ? TS_PK_WORDS : TS_PK_SENTENCES;
    ev.seed = ev_common.seed;
    ev.jobs = ev_common.jobs;
    ev.oov = parse_oov(ev_common.oov);
    return run([&](char** r) { return ts_evaluate(&ev, r); }, true);
  }
  if (*cmd_gen) {
    gs.out_dir = gs_out.c_str();
    if (gs_range.size() == 2) {
      gs.seg_len_min = gs_range[0];
      gs.seg_len_max = gs_range[1];
    }
    return run([&](char** r) { return ts_gen_synth(&gs, r); });
  }
  return 1;
}
