#include "textseg/textseg.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "textseg/checkpoint.hpp"
#include "textseg/commands.hpp"
#include "textseg/corpus.hpp"
#include "textseg/corpus_io.hpp"
#include "textseg/embeddings.hpp"
#include "textseg/error.hpp"
#include "textseg/infer.hpp"
#include "textseg/metrics.hpp"
#include "textseg/model.hpp"

struct ts_table {
  textseg::EmbeddingTable table;
};

struct ts_model {
  textseg::ModelParams params;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_code;

ts_status fail(ts_status status, std::string code, std::string message) {
  g_last_code = std::move(code);
  g_last_error = std::move(message);
  return status;
}

ts_status from_kind(textseg::ErrorKind kind) {
  switch (kind) {
    case textseg::ErrorKind::Usage: return TS_ERR_USAGE;
    case textseg::ErrorKind::Data: return TS_ERR_DATA;
    case textseg::ErrorKind::Numeric: return TS_ERR_NUMERIC;
  }
  return TS_ERR_INTERNAL;
}

template <typename Fn>
ts_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    g_last_code.clear();
    return fn();
  } catch (const textseg::Error& e) {
    return fail(from_kind(e.kind()), e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(TS_ERR_DATA, "FilesystemError", e.what());
  } catch (const std::bad_alloc&) {
    return fail(TS_ERR_INTERNAL, "OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return fail(TS_ERR_INTERNAL, "Internal", e.what());
  } catch (...) {
    return fail(TS_ERR_INTERNAL, "Internal", "unknown exception");
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) textseg::throw_usage("NullArgument", std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

std::filesystem::path req_path(const char* p, const char* name) {
  if (p == nullptr || *p == '\0') textseg::throw_usage("MissingArgument", std::string(name) + " is required");
  return p;
}

textseg::OovPolicy oov(ts_oov_policy p) {
  return p == TS_OOV_MEAN ? textseg::OovPolicy::Mean : textseg::OovPolicy::Zeros;
}

ts_status emit(const textseg::commands::CommandResult& result, char** report_out) {
  if (report_out) *report_out = dup_string(result.report.dump(2));
  if (result.exit_code != 0) {
    return fail(TS_ERR_DATA, "NoUsableOutput", "command produced no usable output; see report");
  }
  return TS_OK;
}

std::span<const std::uint8_t> flags(const uint8_t* p, size_t n) {
  return {p, n > 0 ? n - 1 : 0};
}

}  // namespace

extern "C" {

const char* ts_version(void) { return TEXTSEG_VERSION; }
const char* ts_last_error(void) { return g_last_error.c_str(); }
const char* ts_last_error_code(void) { return g_last_code.c_str(); }
void ts_string_free(char* s) { std::free(s); }

ts_status ts_table_load(const char* path, ts_oov_policy policy, ts_table** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ts_table{textseg::load_vectors_file(path, oov(policy))};
    return TS_OK;
  });
}

void ts_table_free(ts_table* table) { delete table; }

size_t ts_table_dim(const ts_table* table) { return table ? static_cast<size_t>(table->table.dim()) : 0; }

size_t ts_table_size(const ts_table* table) { return table ? table->table.size() : 0; }

ts_status ts_table_lookup(const ts_table* table, const char* token, double* out, size_t out_len) {
  return guarded([&] {
    require(table, "table");
    require(token, "token");
    require(out, "out");
    if (out_len != static_cast<size_t>(table->table.dim())) {
      textseg::throw_usage("ShapeMismatch", "output buffer must hold dim values");
    }
    const auto v = table->table.lookup(token);
    std::copy(v.data(), v.data() + v.size(), out);
    return TS_OK;
  });
}

ts_status ts_model_init(size_t d, size_t h1, size_t h2, uint64_t seed, ts_model** out) {
  return guarded([&] {
    require(out, "out");
    textseg::ModelConfig cfg;
    cfg.d = static_cast<textseg::Index>(d);
    cfg.h1 = static_cast<textseg::Index>(h1);
    cfg.h2 = static_cast<textseg::Index>(h2);
    cfg.seed = seed;
    *out = new ts_model{textseg::init_params(cfg)};
    return TS_OK;
  });
}

ts_status ts_model_load(const char* path, ts_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ts_model{textseg::load_checkpoint(path)};
    return TS_OK;
  });
}

ts_status ts_model_save(const ts_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    textseg::save_checkpoint(path, model->params);
    return TS_OK;
  });
}

void ts_model_free(ts_model* model) { delete model; }

ts_status ts_model_dims(const ts_model* model, size_t* d, size_t* h1, size_t* h2) {
  return guarded([&] {
    require(model, "model");
    const auto& c = model->params.config;
    if (d) *d = static_cast<size_t>(c.d);
    if (h1) *h1 = static_cast<size_t>(c.h1);
    if (h2) *h2 = static_cast<size_t>(c.h2);
    return TS_OK;
  });
}

ts_status ts_model_predict(const ts_model* model, const ts_table* table, const char* const* sentences, size_t n,
                           double* probs_out) {
  return guarded([&] {
    require(model, "model");
    require(table, "table");
    require(sentences, "sentences");
    require(probs_out, "probs_out");
    textseg::LabeledDocument doc;
    for (size_t i = 0; i < n; ++i) {
      require(sentences[i], "sentence");
      doc.sentences.push_back(textseg::Sentence{sentences[i], {}, textseg::SentenceKind::Prose});
    }
    const auto p = textseg::predict_probs(model->params, doc, table->table);
    std::copy(p.begin(), p.end(), probs_out);
    return TS_OK;
  });
}

ts_status ts_split_sentences(const char* text, char** json_out) {
  return guarded([&] {
    require(text, "text");
    require(json_out, "json_out");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : textseg::split_sentences(text)) arr.push_back(s.text);
    *json_out = dup_string(arr.dump());
    return TS_OK;
  });
}

ts_status ts_label_document(const char* raw, const char* id, char** json_out) {
  return guarded([&] {
    require(raw, "raw");
    require(json_out, "json_out");
    const auto filtered = textseg::apply_filters(textseg::parse_document(raw, id ? id : ""));
    if (const auto* r = std::get_if<textseg::Rejected>(&filtered)) {
      *json_out = dup_string(nlohmann::json{{"rejected", textseg::to_string(r->reason)}}.dump());
    } else {
      *json_out = dup_string(textseg::to_json(textseg::to_labeled(std::get<textseg::Document>(filtered))).dump());
    }
    return TS_OK;
  });
}

ts_status ts_greedy_decode(const double* probs, size_t count, double tau, uint8_t* boundaries_out) {
  return guarded([&] {
    if (count > 0) {
      require(probs, "probs");
      require(boundaries_out, "boundaries_out");
    }
    const auto h = textseg::greedy_decode({probs, count}, tau);
    std::copy(h.boundaries.begin(), h.boundaries.end(), boundaries_out);
    return TS_OK;
  });
}

ts_status ts_window_size(const size_t* segment_sizes, size_t count, size_t* k_out) {
  return guarded([&] {
    require(k_out, "k_out");
    if (count > 0) require(segment_sizes, "segment_sizes");
    *k_out = textseg::window_size({segment_sizes, count});
    return TS_OK;
  });
}

ts_status ts_pk_sentences(const uint8_t* ref, const uint8_t* hyp, size_t n, size_t k, double* pk_out) {
  return guarded([&] {
    require(pk_out, "pk_out");
    if (n > 1) {
      require(ref, "ref");
      require(hyp, "hyp");
    }
    *pk_out = textseg::pk_sentences(flags(ref, n), flags(hyp, n), k);
    return TS_OK;
  });
}

ts_status ts_pk_words(const uint8_t* ref, const uint8_t* hyp, const size_t* words_per_sentence, size_t n,
                      size_t k_words, double* pk_out) {
  return guarded([&] {
    require(pk_out, "pk_out");
    require(words_per_sentence, "words_per_sentence");
    if (n > 1) {
      require(ref, "ref");
      require(hyp, "hyp");
    }
    *pk_out = textseg::pk_words(flags(ref, n), flags(hyp, n), {words_per_sentence, n}, k_words);
    return TS_OK;
  });
}

ts_status ts_random_baseline(size_t n, double k_avg, uint64_t seed, uint8_t* boundaries_out) {
  return guarded([&] {
    if (n > 1) require(boundaries_out, "boundaries_out");
    const auto h = textseg::random_baseline(n, k_avg, seed);
    std::copy(h.boundaries.begin(), h.boundaries.end(), boundaries_out);
    return TS_OK;
  });
}

void ts_build_corpus_defaults(ts_build_corpus_options* o) {
  if (o) *o = ts_build_corpus_options{nullptr, nullptr, textseg::commands::kDefaultSeed};
}

void ts_stats_defaults(ts_stats_options* o) {
  if (o) *o = ts_stats_options{nullptr, nullptr};
}

void ts_train_defaults(ts_train_options* o) {
  if (!o) return;
  const textseg::commands::TrainOptions d;
  *o = ts_train_options{};
  o->oov = TS_OOV_ZEROS;
  o->h1 = static_cast<size_t>(d.h1);
  o->h2 = static_cast<size_t>(d.h2);
  o->prepare = d.prepare ? 1 : 0;
  o->lr = d.config.lr;
  o->epochs = d.config.epochs;
  o->clip = 0.0;
  o->shuffle = d.config.shuffle ? 1 : 0;
  o->patience = d.config.patience;
  o->seed = d.config.seed;
  o->jobs = d.config.jobs;
}

void ts_tune_defaults(ts_tune_options* o) {
  if (o) *o = ts_tune_options{nullptr, nullptr, nullptr, nullptr, TS_OOV_ZEROS, 1};
}

void ts_predict_defaults(ts_predict_options* o) {
  if (o) *o = ts_predict_options{nullptr, nullptr, nullptr, nullptr, 0, 0.0, nullptr, TS_OOV_ZEROS, 1};
}

void ts_evaluate_defaults(ts_evaluate_options* o) {
  if (!o) return;
  *o = ts_evaluate_options{};
  o->variant = TS_PK_SENTENCES;
  o->oov = TS_OOV_ZEROS;
  o->seed = textseg::commands::kDefaultSeed;
  o->jobs = 1;
}

void ts_gen_synth_defaults(ts_gen_synth_options* o) {
  if (!o) return;
  const textseg::commands::GenSynthOptions d;
  *o = ts_gen_synth_options{nullptr,      d.docs,        d.segs_per_doc,         d.seg_len_min,
                            d.seg_len_max, d.sources,    d.sentences_per_source, d.words_min,
                            d.words_max,  d.vocab_per_source, static_cast<size_t>(d.dim), d.seed};
}

ts_status ts_build_corpus(const ts_build_corpus_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::BuildCorpusOptions opts;
    opts.in_dir = req_path(o->in_dir, "in_dir");
    opts.out_dir = req_path(o->out_dir, "out_dir");
    opts.seed = o->seed;
    return emit(textseg::commands::build_corpus(opts), report_out);
  });
}

ts_status ts_stats(const ts_stats_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::StatsOptions opts;
    opts.corpus = req_path(o->corpus, "corpus");
    opts.out_dir = opt_path(o->out_dir);
    return emit(textseg::commands::stats(opts), report_out);
  });
}

ts_status ts_train(const ts_train_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::TrainOptions opts;
    opts.train = req_path(o->train, "train");
    opts.dev = opt_path(o->dev);
    opts.vectors = req_path(o->vectors, "vectors");
    opts.out_dir = req_path(o->out_dir, "out_dir");
    opts.init_checkpoint = opt_path(o->init_checkpoint);
    opts.oov = oov(o->oov);
    opts.h1 = static_cast<textseg::Index>(o->h1);
    opts.h2 = static_cast<textseg::Index>(o->h2);
    opts.prepare = o->prepare != 0;
    opts.config.lr = o->lr;
    opts.config.epochs = o->epochs;
    if (o->clip > 0.0) opts.config.clip = o->clip;
    opts.config.shuffle = o->shuffle != 0;
    opts.config.patience = o->patience;
    opts.config.seed = o->seed;
    opts.config.jobs = o->jobs;
    return emit(textseg::commands::train(opts), report_out);
  });
}

ts_status ts_tune(const ts_tune_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::TuneOptions opts;
    opts.model = req_path(o->model, "model");
    opts.vectors = req_path(o->vectors, "vectors");
    opts.dev = req_path(o->dev, "dev");
    opts.out_dir = req_path(o->out_dir, "out_dir");
    opts.oov = oov(o->oov);
    opts.jobs = o->jobs;
    return emit(textseg::commands::tune(opts), report_out);
  });
}

ts_status ts_predict(const ts_predict_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::PredictOptions opts;
    opts.model = req_path(o->model, "model");
    opts.vectors = req_path(o->vectors, "vectors");
    opts.corpus = req_path(o->corpus, "corpus");
    opts.out_dir = req_path(o->out_dir, "out_dir");
    if (o->has_tau) opts.tau = o->tau;
    opts.tau_file = opt_path(o->tau_file);
    opts.oov = oov(o->oov);
    opts.jobs = o->jobs;
    return emit(textseg::commands::predict(opts), report_out);
  });
}

ts_status ts_evaluate(const ts_evaluate_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::EvaluateOptions opts;
    opts.corpus = req_path(o->corpus, "corpus");
    opts.out_dir = req_path(o->out_dir, "out_dir");
    opts.predictions = opt_path(o->predictions);
    opts.model = opt_path(o->model);
    opts.vectors = opt_path(o->vectors);
    if (o->has_tau) opts.tau = o->tau;
    opts.tau_file = opt_path(o->tau_file);
    opts.random_baseline = o->random_baseline != 0;
    if (o->baseline_k > 0.0) opts.baseline_k = o->baseline_k;
    opts.variant = o->variant == TS_PK_WORDS ? textseg::PkVariant::Words : textseg::PkVariant::Sentences;
    opts.oov = oov(o->oov);
    opts.seed = o->seed;
    opts.jobs = o->jobs;
    return emit(textseg::commands::evaluate(opts), report_out);
  });
}

ts_status ts_gen_synth(const ts_gen_synth_options* o, char** report_out) {
  return guarded([&] {
    require(o, "options");
    textseg::commands::GenSynthOptions opts;
    opts.out_dir = req_path(o->out_dir, "out_dir");
    opts.docs = o->docs;
    opts.segs_per_doc = o->segs_per_doc;
    opts.seg_len_min = o->seg_len_min;
    opts.seg_len_max = o->seg_len_max;
    opts.sources = o->sources;
    opts.sentences_per_source = o->sentences_per_source;
    opts.words_min = o->words_min;
    opts.words_max = o->words_max;
    opts.vocab_per_source = o->vocab_per_source;
    opts.dim = static_cast<textseg::Index>(o->dim);
    opts.seed = o->seed;
    return emit(textseg::commands::gen_synth(opts), report_out);
  });
}

}  // extern "C"
