#include "textseg/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "textseg/embeddings.hpp"
#include "textseg/error.hpp"
#include "textseg/parallel.hpp"
#include "textseg/rng.hpp"

namespace textseg {

namespace {

// Pk over explicit per-position segment ids.
double pk_over_ids(const std::vector<std::size_t>& ref_ids, const std::vector<std::size_t>& hyp_ids,
                   std::size_t k) {
  const std::size_t n = ref_ids.size();
  if (k == 0) throw_usage("BadWindow", "window size must be at least 1");
  if (k >= n) {
    throw_data("WindowTooLarge", "window " + std::to_string(k) + " needs more than " + std::to_string(n) +
                                     " positions");
  }
  std::size_t disagree = 0;
  for (std::size_t i = 0; i + k < n; ++i) {
    const bool same_ref = ref_ids[i] == ref_ids[i + k];
    const bool same_hyp = hyp_ids[i] == hyp_ids[i + k];
    disagree += same_ref != same_hyp;
  }
  return static_cast<double>(disagree) / static_cast<double>(n - k);
}

std::vector<std::size_t> sentence_ids(std::span<const std::uint8_t> boundaries) {
  std::vector<std::size_t> ids(boundaries.size() + 1, 0);
  for (std::size_t i = 0; i < boundaries.size(); ++i) ids[i + 1] = ids[i] + (boundaries[i] ? 1 : 0);
  return ids;
}

std::vector<std::size_t> word_ids(std::span<const std::uint8_t> boundaries,
                                  std::span<const std::size_t> words_per_sentence) {
  const auto sent = sentence_ids(boundaries);
  std::vector<std::size_t> ids;
  for (std::size_t s = 0; s < sent.size(); ++s) ids.insert(ids.end(), words_per_sentence[s], sent[s]);
  return ids;
}

void check_lengths(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> hyp) {
  if (ref.size() != hyp.size()) {
    throw_data("LengthMismatch", "reference has " + std::to_string(ref.size() + 1) + " sentences, hypothesis " +
                                     std::to_string(hyp.size() + 1));
  }
}

}  // namespace

std::vector<std::size_t> Hypothesis::segment_sizes() const {
  std::vector<std::size_t> sizes;
  std::size_t run = 0;
  for (auto b : boundaries) {
    ++run;
    if (b) {
      sizes.push_back(run);
      run = 0;
    }
  }
  sizes.push_back(run + 1);
  return sizes;
}

Hypothesis hypothesis_from_sizes(std::span<const std::size_t> sizes) {
  Hypothesis h;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (sizes[s] == 0) throw_data("InvalidLabels", "zero-length segment");
    h.boundaries.insert(h.boundaries.end(), sizes[s] - 1, 0);
    if (s + 1 < sizes.size()) h.boundaries.push_back(1);
  }
  return h;
}

PkVariant pk_variant_from_string(std::string_view name) {
  if (name == "sentences") return PkVariant::Sentences;
  if (name == "words") return PkVariant::Words;
  throw_usage("BadVariant", "unknown Pk variant '" + std::string(name) + "' (expected sentences|words)");
}

const char* to_string(PkVariant variant) {
  return variant == PkVariant::Words ? "words" : "sentences";
}

std::size_t window_size(std::span<const std::size_t> ref_sizes) {
  if (ref_sizes.empty()) throw_data("EmptySegmentation", "window size needs at least one segment");
  std::size_t total = 0;
  for (auto s : ref_sizes) total += s;
  const std::size_t count = ref_sizes.size();
  // round_half_up(total / (2 * count)) in integer arithmetic.
  const std::size_t k = (total + count) / (2 * count);
  return k < 1 ? 1 : k;
}

double pk_sentences(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> hyp, std::size_t k) {
  check_lengths(ref, hyp);
  return pk_over_ids(sentence_ids(ref), sentence_ids(hyp), k);
}

double pk_words(std::span<const std::uint8_t> ref, std::span<const std::uint8_t> hyp,
                std::span<const std::size_t> words_per_sentence, std::size_t k_words) {
  check_lengths(ref, hyp);
  if (words_per_sentence.size() != ref.size() + 1) {
    throw_data("LengthMismatch", "word counts given for " + std::to_string(words_per_sentence.size()) +
                                     " sentences, expected " + std::to_string(ref.size() + 1));
  }
  return pk_over_ids(word_ids(ref, words_per_sentence), word_ids(hyp, words_per_sentence), k_words);
}

Hypothesis random_baseline(std::size_t n, double k_avg, std::uint64_t seed) {
  if (!(k_avg >= 1.0)) throw_usage("BadBaseline", "random baseline needs k_avg >= 1");
  Rng rng(seed);
  Hypothesis h;
  h.boundaries.resize(n > 0 ? n - 1 : 0);
  for (auto& b : h.boundaries) b = rng.bernoulli(1.0 / k_avg) ? 1 : 0;
  return h;
}

std::vector<std::size_t> words_per_sentence(const LabeledDocument& doc) {
  std::vector<std::size_t> counts;
  counts.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) counts.push_back(s.tokens.empty() ? tokenize(s.text).size() : s.tokens.size());
  return counts;
}

EvalReport evaluate_corpus(const Segmenter& segmenter, const std::vector<LabeledDocument>& corpus,
                           PkVariant variant, std::size_t jobs) {
  if (corpus.empty()) throw_data("EmptyCorpus", "evaluation corpus is empty");

  struct Slot {
    DocEval eval;
    std::optional<SkippedDoc> skipped;
  };
  std::vector<Slot> slots(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const auto& doc = corpus[i];
    const auto start = std::chrono::steady_clock::now();
    auto& slot = slots[i];
    slot.eval.id = doc.id;
    slot.eval.n = doc.size();

    std::vector<std::size_t> counts;
    std::size_t positions = doc.size();
    std::vector<std::size_t> unit_sizes = doc.segment_sizes;
    if (variant == PkVariant::Words) {
      counts = words_per_sentence(doc);
      positions = 0;
      for (auto c : counts) positions += c;
      unit_sizes.clear();
      std::size_t offset = 0;
      for (auto size : doc.segment_sizes) {
        std::size_t words = 0;
        for (std::size_t s = offset; s < offset + size; ++s) words += counts[s];
        unit_sizes.push_back(words);
        offset += size;
      }
    }
    const std::size_t k = unit_sizes.empty() ? 1 : window_size(unit_sizes);
    slot.eval.k = k;
    if (k >= positions) {
      slot.skipped = SkippedDoc{doc.id, positions, k, "window_too_large"};
      return;
    }
    const Hypothesis hyp = segmenter(doc, i);
    slot.eval.pk = variant == PkVariant::Words ? pk_words(doc.labels, hyp.boundaries, counts, k)
                                               : pk_sentences(doc.labels, hyp.boundaries, k);
    slot.eval.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  EvalReport report;
  report.variant = variant;
  report.tau = std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (auto& slot : slots) {
    if (slot.skipped) {
      report.skipped.push_back(std::move(*slot.skipped));
    } else {
      sum += slot.eval.pk;
      report.docs.push_back(std::move(slot.eval));
    }
  }
  report.aggregate = report.docs.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : sum / static_cast<double>(report.docs.size());
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  using nlohmann::json;
  auto number_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json docs = json::array();
  for (const auto& d : report.docs) {
    docs.push_back({{"id", d.id}, {"n", d.n}, {"k", d.k}, {"pk", d.pk}, {"seconds", d.seconds}});
  }
  json skipped = json::array();
  for (const auto& s : report.skipped) {
    skipped.push_back({{"id", s.id}, {"n", s.n}, {"k", s.k}, {"reason", s.reason}});
  }
  return json{{"variant", to_string(report.variant)},
              {"tau", number_or_null(report.tau)},
              {"aggregate_pk", number_or_null(report.aggregate)},
              {"evaluated", report.docs.size()},
              {"skipped_count", report.skipped.size()},
              {"documents", std::move(docs)},
              {"skipped", std::move(skipped)}};
}

}  // namespace textseg
