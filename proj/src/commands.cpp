#include "textseg/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <unordered_map>

#include "textseg/checkpoint.hpp"
#include "textseg/corpus_io.hpp"
#include "textseg/error.hpp"
#include "textseg/infer.hpp"
#include "textseg/rng.hpp"

namespace textseg::commands {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string path_str(const fs::path& p) { return p.generic_string(); }

json opt_path(const std::optional<fs::path>& p) { return p ? json(path_str(*p)) : json(nullptr); }

json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Writes report.json and the run manifest next to the command's outputs.
void finish_run(const fs::path& out_dir, const std::string& command, const json& flags, const json& seeds,
                const json& inputs, const json& outputs, const json& report, Clock::time_point start) {
  write_text_file(out_dir / "report.json", pretty(report));
  json manifest{{"command", command},
                {"flags", flags},
                {"seeds", seeds},
                {"inputs", inputs},
                {"outputs", outputs},
                {"version", TEXTSEG_VERSION},
                {"wall_clock_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  write_text_file(out_dir / "manifest.json", pretty(manifest));
}

ModelParams load_model_for(const fs::path& path, const EmbeddingTable& table) {
  ModelParams params = load_checkpoint(path);
  if (params.config.d != table.dim()) {
    throw_data("DimensionMismatch", "checkpoint '" + path_str(path) + "' has d=" + std::to_string(params.config.d) +
                                        " but the vector file has dim=" + std::to_string(table.dim()));
  }
  return params;
}

double resolve_tau(const std::optional<double>& tau, const std::optional<fs::path>& tau_file) {
  if (tau) {
    if (!(*tau >= 0.0 && *tau <= 1.0)) throw_usage("BadTau", "tau must lie in [0, 1]");
    return *tau;
  }
  if (tau_file) return read_tau_file(*tau_file);
  throw_usage("MissingTau", "a threshold is required: pass --tau or --tau-file");
}

json history_json(const TrainHistory& h) {
  json dev = json::array();
  for (double v : h.dev_loss) dev.push_back(number_or_null(v));
  return json{{"train_loss", h.train_loss}, {"dev_loss", std::move(dev)}};
}

json stats_json(const CorpusStats& s) {
  return json{{"doc_count", s.doc_count},
              {"seg_len_mean", s.seg_len_mean},
              {"seg_len_std", s.seg_len_std},
              {"segs_per_doc_mean", s.segs_per_doc_mean},
              {"segs_per_doc_std", s.segs_per_doc_std}};
}

}  // namespace

double read_tau_file(const fs::path& path) {
  try {
    const auto j = json::parse(read_text_file(path));
    const double tau = j.at("tau").get<double>();
    if (!(tau >= 0.0 && tau <= 1.0)) throw_data("BadTau", "tau in '" + path_str(path) + "' is outside [0, 1]");
    return tau;
  } catch (const json::exception& e) {
    throw_data("BadTau", path_str(path) + ": " + e.what());
  }
}

CommandResult build_corpus(const BuildCorpusOptions& opts) {
  const auto start = Clock::now();
  if (!fs::is_directory(opts.in_dir)) throw_usage("NoInput", "input directory '" + path_str(opts.in_dir) + "' not found");

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(opts.in_dir)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), opts.in_dir));
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw_data("NoInputFiles", "no document files under '" + path_str(opts.in_dir) + "'");

  std::map<std::string, std::size_t> rejected;
  json rejected_docs = json::array();
  std::vector<std::string> accepted;
  for (const auto& rel : files) {
    const std::string id = path_str(rel);
    std::string reason;
    try {
      const auto raw = read_text_file(opts.in_dir / rel);
      const auto filtered = apply_filters(parse_document(raw, id));
      if (const auto* r = std::get_if<Rejected>(&filtered)) {
        reason = to_string(r->reason);
      } else {
        const auto labeled = to_labeled(std::get<Document>(filtered));
        const std::string record = "docs/" + id + ".json";
        write_text_file(opts.out_dir / record, to_json(labeled).dump() + "\n");
        accepted.push_back(record);
        continue;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Data) throw;
      reason = e.code();
    }
    ++rejected[reason];
    rejected_docs.push_back({{"id", id}, {"reason", reason}});
  }

  // Seeded 80/10/10 split; each list is sorted for stable diffs.
  std::vector<std::string> shuffled = accepted;
  Rng rng(opts.seed);
  rng.shuffle(shuffled);
  const std::size_t n = shuffled.size();
  const std::size_t n_train = (8 * n + 5) / 10;
  const std::size_t n_dev = (n - n_train + 1) / 2;
  std::vector<std::string> train(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::string> dev(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                               shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  std::vector<std::string> test(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), shuffled.end());
  for (auto* split : {&train, &dev, &test}) std::sort(split->begin(), split->end());
  write_manifest(opts.out_dir / "train.txt", train);
  write_manifest(opts.out_dir / "dev.txt", dev);
  write_manifest(opts.out_dir / "test.txt", test);

  json report{{"inputs", files.size()},
              {"accepted", accepted.size()},
              {"rejected", rejected.empty() ? json::object() : json(rejected)},
              {"rejected_documents", std::move(rejected_docs)},
              {"splits", {{"train", train.size()}, {"dev", dev.size()}, {"test", test.size()}}}};
  finish_run(opts.out_dir, "build-corpus",
             {{"in_dir", path_str(opts.in_dir)}, {"out", path_str(opts.out_dir)}, {"seed", opts.seed}},
             {{"split", opts.seed}}, {path_str(opts.in_dir)}, {"docs/", "train.txt", "dev.txt", "test.txt"}, report,
             start);
  return {report, accepted.empty() ? 2 : 0};
}

CommandResult stats(const StatsOptions& opts) {
  const auto start = Clock::now();
  const auto corpus = load_corpus(opts.corpus);
  json report = stats_json(corpus_stats(corpus));
  if (opts.out_dir) {
    write_text_file(*opts.out_dir / "stats.json", pretty(report));
    finish_run(*opts.out_dir, "stats", {{"corpus", path_str(opts.corpus)}, {"out", path_str(*opts.out_dir)}},
               json::object(), {path_str(opts.corpus)}, {"stats.json"}, report, start);
  }
  return {report, 0};
}

CommandResult train(const TrainOptions& opts) {
  const auto start = Clock::now();
  const auto table = load_vectors_file(path_str(opts.vectors), opts.oov);
  const auto raw = load_corpus(opts.train);

  std::vector<LabeledDocument> corpus;
  std::map<std::string, std::size_t> rejected;
  for (const auto& doc : raw) {
    if (opts.prepare) {
      auto prepared = prepare_training_doc(doc);
      if (const auto* r = std::get_if<Rejected>(&prepared)) {
        ++rejected[to_string(r->reason)];
        continue;
      }
      corpus.push_back(std::get<LabeledDocument>(std::move(prepared)));
    } else if (doc.size() < 2) {
      ++rejected["document_too_short"];
    } else {
      corpus.push_back(doc);
    }
  }
  const auto dev = opts.dev ? load_corpus(*opts.dev) : std::vector<LabeledDocument>{};

  ModelParams params;
  if (opts.init_checkpoint) {
    params = load_model_for(*opts.init_checkpoint, table);
  } else {
    ModelConfig cfg;
    cfg.d = table.dim();
    cfg.h1 = opts.h1;
    cfg.h2 = opts.h2;
    cfg.seed = opts.config.seed;
    params = init_params(cfg);
  }

  const auto& c = opts.config;
  json flags{{"train", path_str(opts.train)},
             {"dev", opt_path(opts.dev)},
             {"vectors", path_str(opts.vectors)},
             {"out", path_str(opts.out_dir)},
             {"init", opt_path(opts.init_checkpoint)},
             {"oov", to_string(opts.oov)},
             {"h1", params.config.h1},
             {"h2", params.config.h2},
             {"prepare", opts.prepare},
             {"lr", c.lr},
             {"epochs", c.epochs},
             {"clip", opt_number(c.clip)},
             {"shuffle", c.shuffle},
             {"patience", c.patience},
             {"seed", c.seed},
             {"jobs", c.jobs}};
  json outputs = {"model.ckpt", "history.json"};
  if (!dev.empty()) outputs.push_back("best.ckpt");

  auto on_epoch = [&](const EpochEvent& e) {
    if (e.improved) save_checkpoint(opts.out_dir / "best.ckpt", e.params);
  };

  TrainResult result;
  try {
    result = textseg::train(std::move(params), corpus, dev, table, opts.config, on_epoch);
  } catch (const TrainingDiverged& e) {
    save_checkpoint(opts.out_dir / "last_good.ckpt", e.last_good());
    write_text_file(opts.out_dir / "history.json", pretty(history_json(e.history())));
    json report{{"error", e.what()}, {"checkpoint", "last_good.ckpt"}, {"epochs_completed", e.history().epochs()}};
    finish_run(opts.out_dir, "train", flags, {{"init", c.seed}, {"shuffle", c.seed}}, {path_str(opts.train)},
               {"last_good.ckpt", "history.json"}, report, start);
    throw;
  }

  save_checkpoint(opts.out_dir / "model.ckpt", result.params);
  write_text_file(opts.out_dir / "history.json", pretty(history_json(result.history)));
  json report{{"config", flags},
              {"documents", corpus.size()},
              {"rejected", rejected.empty() ? json::object() : json(rejected)},
              {"dev_documents", dev.size()},
              {"parameters", result.params.parameter_count()},
              {"history", history_json(result.history)},
              {"epoch_seconds", result.history.epoch_seconds},
              {"stopped_early", result.history.stopped_early},
              {"final_train_loss", result.history.train_loss.empty() ? json(nullptr)
                                                                     : json(result.history.train_loss.back())},
              {"checkpoint", "model.ckpt"}};
  finish_run(opts.out_dir, "train", flags, {{"init", c.seed}, {"shuffle", c.seed}},
             {path_str(opts.train), path_str(opts.vectors)}, outputs, report, start);
  return {report, 0};
}

CommandResult tune(const TuneOptions& opts) {
  const auto start = Clock::now();
  const auto table = load_vectors_file(path_str(opts.vectors), opts.oov);
  const auto model = load_model_for(opts.model, table);
  const auto dev = load_corpus(opts.dev);
  const auto result = tune_threshold(model, dev, table, opts.jobs);
  json tau{{"tau", result.tau}, {"dev_pk", result.dev_pk}, {"grid", threshold_grid()}, {"grid_pk", result.grid_pk}};
  write_text_file(opts.out_dir / "tau.json", pretty(tau));
  json report{{"tau", result.tau}, {"dev_pk", result.dev_pk}, {"dev_documents", dev.size()}};
  finish_run(opts.out_dir, "tune",
             {{"model", path_str(opts.model)},
              {"vectors", path_str(opts.vectors)},
              {"dev", path_str(opts.dev)},
              {"out", path_str(opts.out_dir)},
              {"oov", to_string(opts.oov)},
              {"jobs", opts.jobs}},
             json::object(), {path_str(opts.model), path_str(opts.dev)}, {"tau.json"}, report, start);
  return {report, 0};
}

CommandResult predict(const PredictOptions& opts) {
  const auto start = Clock::now();
  const double tau = resolve_tau(opts.tau, opts.tau_file);
  const auto table = load_vectors_file(path_str(opts.vectors), opts.oov);
  const auto model = load_model_for(opts.model, table);
  const auto docs = load_corpus(opts.corpus);
  const auto probs = predict_corpus(model, docs, table, opts.jobs);

  std::vector<Prediction> predictions;
  predictions.reserve(docs.size());
  std::size_t segments = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Prediction p{docs[i].id, probs[i], greedy_decode(probs[i], tau)};
    segments += p.hypothesis.segment_sizes().size();
    predictions.push_back(std::move(p));
  }
  save_predictions(opts.out_dir / "predictions.jsonl", predictions);
  json report{{"tau", tau}, {"documents", docs.size()}, {"predicted_segments", segments}};
  finish_run(opts.out_dir, "predict",
             {{"model", path_str(opts.model)},
              {"vectors", path_str(opts.vectors)},
              {"corpus", path_str(opts.corpus)},
              {"out", path_str(opts.out_dir)},
              {"tau", opt_number(opts.tau)},
              {"tau_file", opt_path(opts.tau_file)},
              {"oov", to_string(opts.oov)},
              {"jobs", opts.jobs}},
             json::object(), {path_str(opts.model), path_str(opts.corpus)}, {"predictions.jsonl"}, report, start);
  return {report, 0};
}

CommandResult evaluate(const EvaluateOptions& opts) {
  const auto start = Clock::now();
  const int sources = (opts.predictions ? 1 : 0) + (opts.model ? 1 : 0) + (opts.random_baseline ? 1 : 0);
  if (sources != 1) {
    throw_usage("BadSegmenter", "choose exactly one of --predictions, --model, --baseline random");
  }
  const auto corpus = load_corpus(opts.corpus);
  if (corpus.empty()) throw_data("EmptyCorpus", "evaluation corpus is empty");

  Segmenter segmenter;
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::optional<EmbeddingTable> table;
  std::optional<ModelParams> model;
  std::unordered_map<std::string, Hypothesis> by_id;
  double k_avg = 0.0;
  std::string source;

  if (opts.predictions) {
    source = "predictions";
    for (auto& p : load_predictions(*opts.predictions)) by_id[p.id] = std::move(p.hypothesis);
    segmenter = [&](const LabeledDocument& doc, std::size_t) {
      const auto it = by_id.find(doc.id);
      if (it == by_id.end()) throw_data("MissingPrediction", "no prediction for document '" + doc.id + "'");
      if (it->second.boundaries.size() != doc.labels.size()) {
        throw_data("LengthMismatch", "prediction for '" + doc.id + "' covers " +
                                         std::to_string(it->second.sentence_count()) + " sentences, reference " +
                                         std::to_string(doc.size()));
      }
      return it->second;
    };
  } else if (opts.model) {
    source = "model";
    if (!opts.vectors) throw_usage("MissingVectors", "--model requires --vectors");
    tau = resolve_tau(opts.tau, opts.tau_file);
    table.emplace(load_vectors_file(path_str(*opts.vectors), opts.oov));
    model.emplace(load_model_for(*opts.model, *table));
    segmenter = [&](const LabeledDocument& doc, std::size_t) {
      return greedy_decode(predict_probs(*model, doc, *table), tau);
    };
  } else {
    source = "random_baseline";
    if (opts.baseline_k) {
      k_avg = *opts.baseline_k;
    } else {
      const auto s = corpus_stats(corpus);
      k_avg = s.seg_len_mean;
    }
    if (!(k_avg >= 1.0)) throw_usage("BadBaseline", "baseline k must be at least 1");
    segmenter = [&](const LabeledDocument& doc, std::size_t index) {
      return random_baseline(doc.size(), k_avg, mix_seed(opts.seed, index));
    };
  }

  EvalReport eval = evaluate_corpus(segmenter, corpus, opts.variant, opts.jobs);
  eval.tau = tau;
  json report = to_json(eval);
  report["segmenter"] = source;
  if (opts.random_baseline) report["baseline_k"] = k_avg;
  write_text_file(opts.out_dir / "eval.json", pretty(report));

  json inputs = {path_str(opts.corpus)};
  if (opts.predictions) inputs.push_back(path_str(*opts.predictions));
  if (opts.model) inputs.push_back(path_str(*opts.model));
  finish_run(opts.out_dir, "evaluate",
             {{"corpus", path_str(opts.corpus)},
              {"out", path_str(opts.out_dir)},
              {"predictions", opt_path(opts.predictions)},
              {"model", opt_path(opts.model)},
              {"vectors", opt_path(opts.vectors)},
              {"tau", opt_number(opts.tau)},
              {"tau_file", opt_path(opts.tau_file)},
              {"baseline", opts.random_baseline ? json("random") : json(nullptr)},
              {"baseline_k", opt_number(opts.baseline_k)},
              {"variant", to_string(opts.variant)},
              {"oov", to_string(opts.oov)},
              {"seed", opts.seed},
              {"jobs", opts.jobs}},
             {{"baseline", opts.seed}}, inputs, {"eval.json"}, report, start);
  return {report, 0};
}

std::string synthetic_word(std::size_t source, std::size_t index) {
  return "s" + std::to_string(source) + "w" + std::to_string(index);
}

PassagePool synthetic_pool(const GenSynthOptions& opts) {
  if (opts.words_min < 1 || opts.words_min > opts.words_max) {
    throw_usage("BadRange", "sentence word range must satisfy 1 <= min <= max");
  }
  if (opts.vocab_per_source < 1) throw_usage("BadRange", "vocab_per_source must be positive");
  Rng rng(mix_seed(opts.seed, 0));
  PassagePool pool;
  pool.sources.resize(opts.sources);
  for (std::size_t s = 0; s < opts.sources; ++s) {
    for (std::size_t i = 0; i < opts.sentences_per_source; ++i) {
      const auto len = rng.uniform_int(opts.words_min, opts.words_max);
      std::string text;
      for (std::uint64_t w = 0; w < len; ++w) {
        if (w > 0) text += ' ';
        text += synthetic_word(s, static_cast<std::size_t>(rng.uniform_int(0, opts.vocab_per_source - 1)));
      }
      text += '.';
      pool.sources[s].push_back(Sentence{std::move(text), {}, SentenceKind::Prose});
    }
  }
  return pool;
}

EmbeddingTable synthetic_vectors(const GenSynthOptions& opts) {
  if (opts.dim < 1) throw_usage("BadRange", "dim must be positive");
  EmbeddingTable table(opts.dim);
  std::vector<double> v(static_cast<std::size_t>(opts.dim));
  for (std::size_t s = 0; s < opts.sources; ++s) {
    std::fill(v.begin(), v.end(), 0.0);
    v[s % static_cast<std::size_t>(opts.dim)] = 1.0;
    for (std::size_t i = 0; i < opts.vocab_per_source; ++i) table.add(synthetic_word(s, i), v);
  }
  table.finalize();
  return table;
}

CommandResult gen_synth(const GenSynthOptions& opts) {
  const auto start = Clock::now();
  ChoiOptions choi;
  choi.docs = opts.docs;
  choi.segs_per_doc = opts.segs_per_doc;
  choi.seg_len_min = opts.seg_len_min;
  choi.seg_len_max = opts.seg_len_max;
  choi.seed = mix_seed(opts.seed, 1);
  const auto docs = generate_choi_style(synthetic_pool(opts), choi);
  const auto table = synthetic_vectors(opts);
  save_jsonl(opts.out_dir / "corpus.jsonl", docs);
  write_text_file(opts.out_dir / "vectors.txt", serialize_vectors(table));

  json flags{{"out", path_str(opts.out_dir)},
             {"docs", opts.docs},
             {"segs_per_doc", opts.segs_per_doc},
             {"seg_len_min", opts.seg_len_min},
             {"seg_len_max", opts.seg_len_max},
             {"sources", opts.sources},
             {"sentences_per_source", opts.sentences_per_source},
             {"words_min", opts.words_min},
             {"words_max", opts.words_max},
             {"vocab_per_source", opts.vocab_per_source},
             {"dim", opts.dim},
             {"seed", opts.seed}};
  json report{{"documents", docs.size()},
              {"vocabulary", table.size()},
              {"stats", docs.empty() ? json(nullptr) : stats_json(corpus_stats(docs))}};
  finish_run(opts.out_dir, "gen-synth", flags, {{"pool", mix_seed(opts.seed, 0)}, {"documents", choi.seed}},
             json::array(), {"corpus.jsonl", "vectors.txt"}, report, start);
  return {report, 0};
}

}  // namespace textseg::commands
