#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "textseg/embeddings.hpp"
#include "textseg/metrics.hpp"
#include "textseg/train.hpp"

// Reproducible end-to-end runs. Every command writes `report.json` and
// `manifest.json` into its output directory and returns the report.

namespace textseg::commands {

namespace fs = std::filesystem;

inline constexpr std::uint64_t kDefaultSeed = 13;

struct CommandResult {
  nlohmann::json report;
  /// 0 on success; 2 when the command ran but produced no usable output
  /// (e.g. every input document was rejected).
  int exit_code = 0;
};

struct BuildCorpusOptions {
  fs::path in_dir;
  fs::path out_dir;
  std::uint64_t seed = kDefaultSeed;
};

/// Parses every regular file under in_dir (sorted by relative path), filters
/// and labels it, writes `docs/<relative path>.json`, and an 80/10/10 seeded
/// split into train.txt, dev.txt and test.txt.
CommandResult build_corpus(const BuildCorpusOptions& opts);

struct StatsOptions {
  fs::path corpus;
  std::optional<fs::path> out_dir;
};

CommandResult stats(const StatsOptions& opts);

struct TrainOptions {
  fs::path train;
  std::optional<fs::path> dev;
  fs::path vectors;
  fs::path out_dir;
  std::optional<fs::path> init_checkpoint;
  OovPolicy oov = OovPolicy::Zeros;
  Index h1 = 128;
  Index h2 = 128;
  /// Apply the training transform (drop first segment, drop list/code).
  bool prepare = true;
  TrainConfig config;
};

/// Writes model.ckpt, history.json (losses only, bit-reproducible),
/// best.ckpt on dev improvement, and last_good.ckpt if training diverges.
CommandResult train(const TrainOptions& opts);

struct TuneOptions {
  fs::path model;
  fs::path vectors;
  fs::path dev;
  fs::path out_dir;
  OovPolicy oov = OovPolicy::Zeros;
  std::size_t jobs = 1;
};

/// Writes tau.json: {"tau", "dev_pk", "grid", "grid_pk"}.
CommandResult tune(const TuneOptions& opts);

struct PredictOptions {
  fs::path model;
  fs::path vectors;
  fs::path corpus;
  fs::path out_dir;
  std::optional<double> tau;
  std::optional<fs::path> tau_file;
  OovPolicy oov = OovPolicy::Zeros;
  std::size_t jobs = 1;
};

/// Writes predictions.jsonl.
CommandResult predict(const PredictOptions& opts);

struct EvaluateOptions {
  fs::path corpus;
  fs::path out_dir;
  std::optional<fs::path> predictions;
  std::optional<fs::path> model;
  std::optional<fs::path> vectors;
  std::optional<double> tau;
  std::optional<fs::path> tau_file;
  bool random_baseline = false;
  /// Boundary probability is 1 / baseline_k; defaults to the corpus mean
  /// reference segment length in sentences.
  std::optional<double> baseline_k;
  PkVariant variant = PkVariant::Sentences;
  OovPolicy oov = OovPolicy::Zeros;
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 1;
};

/// Exactly one segmenter source: predictions file, model + vectors, or the
/// random baseline. Writes eval.json.
CommandResult evaluate(const EvaluateOptions& opts);

struct GenSynthOptions {
  fs::path out_dir;
  std::size_t docs = 100;
  std::size_t segs_per_doc = 10;
  std::size_t seg_len_min = 3;
  std::size_t seg_len_max = 11;
  std::size_t sources = 10;
  std::size_t sentences_per_source = 200;
  std::size_t words_min = 4;
  std::size_t words_max = 8;
  std::size_t vocab_per_source = 20;
  /// Embedding width. Word vectors are one-hot at (source mod dim).
  Index dim = 10;
  std::uint64_t seed = kDefaultSeed;
};

/// Writes corpus.jsonl and vectors.txt. The vocabulary and vectors depend
/// only on sources/vocab_per_source/dim, so corpora generated with
/// different seeds share one vector file.
CommandResult gen_synth(const GenSynthOptions& opts);

/// Synthetic passage pool used by gen_synth; exposed for tests.
PassagePool synthetic_pool(const GenSynthOptions& opts);
std::string synthetic_word(std::size_t source, std::size_t index);
EmbeddingTable synthetic_vectors(const GenSynthOptions& opts);

/// Reads a tau.json written by tune.
double read_tau_file(const fs::path& path);

}  // namespace textseg::commands
