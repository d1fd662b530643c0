/*
 * textseg C API.
 *
 * All functions return a ts_status. On failure, ts_last_error() returns a
 * thread-local message ("<Code>: <detail>") that stays valid until the next
 * call on the same thread. Strings returned through `char**` out-parameters
 * are owned by the caller and released with ts_string_free().
 *
 * Handles (ts_table, ts_model) are opaque, immutable after creation, and
 * safe to share read-only between threads.
 */
#ifndef TEXTSEG_H
#define TEXTSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TEXTSEG_BUILDING_LIBRARY)
#    define TEXTSEG_API __declspec(dllexport)
#  else
#    define TEXTSEG_API __declspec(dllimport)
#  endif
#else
#  define TEXTSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_USAGE = 1,
  TS_ERR_DATA = 2,
  TS_ERR_NUMERIC = 3,
  TS_ERR_INTERNAL = 4
} ts_status;

typedef enum ts_oov_policy { TS_OOV_ZEROS = 0, TS_OOV_MEAN = 1 } ts_oov_policy;

typedef enum ts_pk_variant { TS_PK_SENTENCES = 0, TS_PK_WORDS = 1 } ts_pk_variant;

typedef struct ts_table ts_table;
typedef struct ts_model ts_model;

TEXTSEG_API const char* ts_version(void);
TEXTSEG_API const char* ts_last_error(void);
/* Stable error identifier of the last failure, e.g. "WindowTooLarge". */
TEXTSEG_API const char* ts_last_error_code(void);
TEXTSEG_API void ts_string_free(char* s);

/* ---- embedding tables ---------------------------------------------------- */

TEXTSEG_API ts_status ts_table_load(const char* path, ts_oov_policy policy, ts_table** out);
TEXTSEG_API void ts_table_free(ts_table* table);
TEXTSEG_API size_t ts_table_dim(const ts_table* table);
TEXTSEG_API size_t ts_table_size(const ts_table* table);
/* Writes dim values for `token` (exact, lowercase, then unknown vector). */
TEXTSEG_API ts_status ts_table_lookup(const ts_table* table, const char* token, double* out, size_t out_len);

/* ---- models -------------------------------------------------------------- */

TEXTSEG_API ts_status ts_model_init(size_t d, size_t h1, size_t h2, uint64_t seed, ts_model** out);
TEXTSEG_API ts_status ts_model_load(const char* path, ts_model** out);
TEXTSEG_API ts_status ts_model_save(const ts_model* model, const char* path);
TEXTSEG_API void ts_model_free(ts_model* model);
TEXTSEG_API ts_status ts_model_dims(const ts_model* model, size_t* d, size_t* h1, size_t* h2);

/*
 * Boundary probabilities for a document of n >= 2 sentences. `probs_out`
 * must hold n - 1 values; probs_out[i] is P(sentence i ends a segment).
 */
TEXTSEG_API ts_status ts_model_predict(const ts_model* model, const ts_table* table,
                                       const char* const* sentences, size_t n, double* probs_out);

/* ---- text processing ----------------------------------------------------- */

/* JSON array of sentence strings. */
TEXTSEG_API ts_status ts_split_sentences(const char* text, char** json_out);

/*
 * Parses a document in the segment-separator format, applies the corpus
 * filters and returns the labeled record as JSON. A filtered-out document
 * yields TS_OK with {"rejected": "<reason>"}.
 */
TEXTSEG_API ts_status ts_label_document(const char* raw, const char* id, char** json_out);

/* ---- decoding and metrics ------------------------------------------------ */

/* boundaries_out[i] = probs[i] > tau. */
TEXTSEG_API ts_status ts_greedy_decode(const double* probs, size_t count, double tau, uint8_t* boundaries_out);

TEXTSEG_API ts_status ts_window_size(const size_t* segment_sizes, size_t count, size_t* k_out);

/* ref/hyp hold n - 1 boundary flags each. */
TEXTSEG_API ts_status ts_pk_sentences(const uint8_t* ref, const uint8_t* hyp, size_t n, size_t k, double* pk_out);

TEXTSEG_API ts_status ts_pk_words(const uint8_t* ref, const uint8_t* hyp, const size_t* words_per_sentence,
                                  size_t n, size_t k_words, double* pk_out);

/* Writes n - 1 flags, each 1 with probability 1 / k_avg. */
TEXTSEG_API ts_status ts_random_baseline(size_t n, double k_avg, uint64_t seed, uint8_t* boundaries_out);

/* ---- commands ------------------------------------------------------------ */
/*
 * Each command writes its outputs, report.json and manifest.json under
 * out_dir and returns the report as JSON through `report_out` (may be NULL).
 * Optional path fields may be NULL. Call the matching *_defaults() first.
 * build-corpus returns TS_ERR_DATA (with the report) when every document
 * was rejected.
 */

typedef struct ts_build_corpus_options {
  const char* in_dir;
  const char* out_dir;
  uint64_t seed;
} ts_build_corpus_options;

typedef struct ts_stats_options {
  const char* corpus;
  const char* out_dir; /* optional */
} ts_stats_options;

typedef struct ts_train_options {
  const char* train;
  const char* dev;             /* optional */
  const char* vectors;
  const char* out_dir;
  const char* init_checkpoint; /* optional */
  ts_oov_policy oov;
  size_t h1;
  size_t h2;
  int prepare; /* drop first segment and list/code sentences */
  double lr;
  size_t epochs;
  double clip; /* <= 0 disables */
  int shuffle;
  size_t patience; /* 0 disables early stopping */
  uint64_t seed;
  size_t jobs;
} ts_train_options;

typedef struct ts_tune_options {
  const char* model;
  const char* vectors;
  const char* dev;
  const char* out_dir;
  ts_oov_policy oov;
  size_t jobs;
} ts_tune_options;

typedef struct ts_predict_options {
  const char* model;
  const char* vectors;
  const char* corpus;
  const char* out_dir;
  int has_tau;
  double tau;
  const char* tau_file; /* optional */
  ts_oov_policy oov;
  size_t jobs;
} ts_predict_options;

typedef struct ts_evaluate_options {
  const char* corpus;
  const char* out_dir;
  const char* predictions; /* one of predictions / model / random_baseline */
  const char* model;
  const char* vectors;
  int has_tau;
  double tau;
  const char* tau_file;
  int random_baseline;
  double baseline_k; /* <= 0: corpus mean segment length */
  ts_pk_variant variant;
  ts_oov_policy oov;
  uint64_t seed;
  size_t jobs;
} ts_evaluate_options;

typedef struct ts_gen_synth_options {
  const char* out_dir;
  size_t docs;
  size_t segs_per_doc;
  size_t seg_len_min;
  size_t seg_len_max;
  size_t sources;
  size_t sentences_per_source;
  size_t words_min;
  size_t words_max;
  size_t vocab_per_source;
  size_t dim;
  uint64_t seed;
} ts_gen_synth_options;

TEXTSEG_API void ts_build_corpus_defaults(ts_build_corpus_options* opts);
TEXTSEG_API void ts_stats_defaults(ts_stats_options* opts);
TEXTSEG_API void ts_train_defaults(ts_train_options* opts);
TEXTSEG_API void ts_tune_defaults(ts_tune_options* opts);
TEXTSEG_API void ts_predict_defaults(ts_predict_options* opts);
TEXTSEG_API void ts_evaluate_defaults(ts_evaluate_options* opts);
TEXTSEG_API void ts_gen_synth_defaults(ts_gen_synth_options* opts);

TEXTSEG_API ts_status ts_build_corpus(const ts_build_corpus_options* opts, char** report_out);
TEXTSEG_API ts_status ts_stats(const ts_stats_options* opts, char** report_out);
TEXTSEG_API ts_status ts_train(const ts_train_options* opts, char** report_out);
TEXTSEG_API ts_status ts_tune(const ts_tune_options* opts, char** report_out);
TEXTSEG_API ts_status ts_predict(const ts_predict_options* opts, char** report_out);
TEXTSEG_API ts_status ts_evaluate(const ts_evaluate_options* opts, char** report_out);
TEXTSEG_API ts_status ts_gen_synth(const ts_gen_synth_options* opts, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* TEXTSEG_H */
