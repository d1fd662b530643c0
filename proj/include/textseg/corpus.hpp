#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace textseg {

enum class SentenceKind { Prose, ListItem, Code };

const char* to_string(SentenceKind kind);
SentenceKind sentence_kind_from_string(std::string_view name);

struct Sentence {
  std::string text;
  /// Filled lazily by the embeddings module; empty until then.
  std::vector<std::string> tokens;
  SentenceKind kind = SentenceKind::Prose;

  bool operator==(const Sentence&) const = default;
};

/// A titled section. `sentences` are the section's own body sentences, which
/// precede all of its children in document order.
struct Segment {
  int level = 1;
  std::string title;
  std::vector<Sentence> sentences;
  std::vector<Segment> children;

  /// Sentence count of this segment and all descendants.
  std::size_t subtree_sentence_count() const;
  /// Number of segments in this subtree, including this one.
  std::size_t subtree_segment_count() const;

  bool operator==(const Segment&) const = default;
};

struct Document {
  std::string id;
  std::vector<Segment> segments;

  std::size_t segment_count() const;
  bool operator==(const Document&) const = default;
};

/// Flat sentence sequence with top-level boundary labels. `labels[i] == 1`
/// when sentence i closes a top-level segment; the final sentence has no
/// label, so labels.size() == sentences.size() - 1 for non-empty documents.
struct LabeledDocument {
  std::string id;
  std::vector<Sentence> sentences;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> segment_sizes;

  std::size_t size() const { return sentences.size(); }
  bool operator==(const LabeledDocument&) const = default;
};

struct CorpusStats {
  std::size_t doc_count = 0;
  double seg_len_mean = 0.0;
  double seg_len_std = 0.0;
  double segs_per_doc_mean = 0.0;
  double segs_per_doc_std = 0.0;
};

enum class RejectReason {
  TooFewSegments,
  MostSegmentsFiltered,
};

const char* to_string(RejectReason reason);

struct Rejected {
  RejectReason reason;
  /// Segment counts (all levels) before and after single-sentence removal.
  std::size_t segments_before = 0;
  std::size_t segments_removed = 0;
};

using FilterResult = std::variant<Document, Rejected>;
using PrepareResult = std::variant<LabeledDocument, Rejected>;

/// Marker prefixes for non-prose body lines.
inline constexpr std::string_view kListPrefix = "***LIST***";
inline constexpr std::string_view kCodePrefix = "***CODE***";
inline constexpr std::string_view kSeparatorPrefix = "========";

/// Rule-based splitter. Breaks after '.', '!' or '?' (optionally followed by
/// closing quotes or brackets) when the next non-space character is an
/// uppercase letter, digit or opening quote, unless the word carrying the
/// period is a known abbreviation.
std::vector<Sentence> split_sentences(std::string_view text);

/// True when `word` (including its trailing period) is on the built-in
/// abbreviation list, e.g. "Dr." or "e.g.".
bool is_abbreviation(std::string_view word);

Document parse_document(std::string_view raw, std::string id);

/// Inverse of parse_document for documents whose sentences are already
/// split: one sentence per body line.
std::string serialize_document(const Document& doc);

/// Removes segments with fewer than two sentences in their subtree, then
/// rejects documents left with fewer than three top-level segments or that
/// lost more than half of their segments.
FilterResult apply_filters(const Document& doc);

LabeledDocument to_labeled(const Document& doc);

/// Builds a LabeledDocument from consecutive segments of sentences.
LabeledDocument make_labeled(std::string id, std::vector<std::vector<Sentence>> segments);

/// Checks the labels/segment_sizes/sentences relationship; throws
/// Error(Data, "InvalidLabels") on violation.
void validate_labeled(const LabeledDocument& doc);

/// Training-time transform: drops the first top-level segment and all
/// list/code sentences.
PrepareResult prepare_training_doc(const LabeledDocument& doc);

/// Passage pool for synthetic document construction: one sentence list per
/// source. Passages are contiguous runs inside a single source.
struct PassagePool {
  std::vector<std::vector<Sentence>> sources;
};

struct ChoiOptions {
  std::size_t docs = 1;
  std::size_t segs_per_doc = 10;
  std::size_t seg_len_min = 3;
  std::size_t seg_len_max = 11;
  std::uint64_t seed = 13;
  std::string id_prefix = "synth";
};

/// Concatenates `segs_per_doc` random passages from distinct sources per
/// document. Throws Error(Data, "InsufficientPool") when fewer than
/// `segs_per_doc` sources can supply a passage.
std::vector<LabeledDocument> generate_choi_style(const PassagePool& pool, const ChoiOptions& opts);

/// Population mean/std of top-level segment lengths and segments per document.
CorpusStats corpus_stats(const std::vector<LabeledDocument>& corpus);

}  // namespace textseg
