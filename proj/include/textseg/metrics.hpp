#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textseg/corpus.hpp"

namespace textseg {

/// A segmentation of n sentences as n - 1 boundary flags; boundaries[i] == 1
/// starts a new segment after sentence i.
struct Hypothesis {
  std::vector<std::uint8_t> boundaries;

  std::size_t sentence_count() const { return boundaries.size() + 1; }
  std::vector<std::size_t> segment_sizes() const;

  bool operator==(const Hypothesis&) const = default;
};

/// Inverse of Hypothesis::segment_sizes.
Hypothesis hypothesis_from_sizes(std::span<const std::size_t> sizes);

enum class PkVariant { Sentences, Words };

PkVariant pk_variant_from_string(std::string_view name);
const char* to_string(PkVariant variant);

/// Half the mean reference segment size, rounded half up, at least 1.
std::size_t window_size(std::span<const std::size_t> ref_sizes);

/// Fraction of the n - k probe pairs (i, i + k) on which reference and
/// hypothesis disagree about "same segment". Throws WindowTooLarge when
/// k >= n, BadWindow when k == 0, LengthMismatch on differing n.
double pk_sentences(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> hyp, std::size_t k);

/// Word-level variant: every word inherits its sentence's segment and the
/// probe runs over word positions.
double pk_words(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> hyp,
                std::span<const std::size_t> words_per_sentence, std::size_t k_words);

/// Independent boundary after each of the n - 1 positions with probability
/// 1 / k_avg.
Hypothesis random_baseline(std::size_t n, double k_avg, std::uint64_t seed);

struct DocEval {
  std::string id;
  std::size_t n = 0;
  std::size_t k = 0;
  double pk = 0.0;
  double seconds = 0.0;
};

struct SkippedDoc {
  std::string id;
  std::size_t n = 0;
  std::size_t k = 0;
  std::string reason;
};

struct EvalReport {
  PkVariant variant = PkVariant::Sentences;
  /// NaN when the segmenter is not threshold-based.
  double tau = 0.0;
  std::vector<DocEval> docs;
  std::vector<SkippedDoc> skipped;
  /// Unweighted mean of docs[].pk; NaN when every document was skipped.
  double aggregate = 0.0;
};

/// Called with the document and its corpus index.
using Segmenter = std::function<Hypothesis(const LabeledDocument&, std::size_t)>;

/// Reference k per document; documents with k >= n (in the variant's unit)
/// are skipped and listed. Throws EmptyCorpus.
EvalReport evaluate_corpus(const Segmenter& segmenter, const std::vector<LabeledDocument>& corpus,
                           PkVariant variant, std::size_t jobs = 1);

/// Token counts per sentence, using the word tokenizer.
std::vector<std::size_t> words_per_sentence(const LabeledDocument& doc);

nlohmann::json to_json(const EvalReport& report);

}  // namespace textseg
