#include "textseg/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "textseg/error.hpp"
#include "textseg/rng.hpp"

namespace textseg {

namespace {

constexpr std::array<std::string_view, 11> kAbbreviations = {
    "Mr.", "Mrs.", "Dr.", "Prof.", "St.", "etc.", "e.g.", "i.e.", "vs.", "Fig.", "No.",
};

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

bool starts_sentence(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isupper(u) || std::isdigit(u) || c == '"' || c == '\'';
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Word containing position `dot`, from the preceding whitespace up to and
// including the dot, with leading opening brackets/quotes removed.
std::string_view word_ending_at(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string_view word = text.substr(b, dot - b + 1);
  while (!word.empty() && (word.front() == '(' || word.front() == '[' ||
                           word.front() == '"' || word.front() == '\'')) {
    word.remove_prefix(1);
  }
  return word;
}

void push_sentence(std::vector<Sentence>& out, std::string_view piece, SentenceKind kind) {
  const auto t = trim(piece);
  if (!t.empty()) out.push_back(Sentence{std::string(t), {}, kind});
}

std::vector<Sentence> split_with_kind(std::string_view text, SentenceKind kind) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    const std::size_t term = i;
    std::size_t j = i + 1;
    while (j < text.size() && (is_terminator(text[j]) || is_closer(text[j]))) ++j;
    if (j >= text.size() || !is_space(text[j])) {
      i = j;
      continue;
    }
    std::size_t k = j;
    while (k < text.size() && is_space(text[k])) ++k;
    if (k >= text.size() || !starts_sentence(text[k])) {
      i = k;
      continue;
    }
    if (text[term] == '.' && j == term + 1 && is_abbreviation(word_ending_at(text, term))) {
      i = k;
      continue;
    }
    push_sentence(out, text.substr(start, j - start), kind);
    start = k;
    i = k;
  }
  if (start < text.size()) push_sentence(out, text.substr(start), kind);
  return out;
}

struct SeparatorLine {
  int level;
  std::string title;
};

SeparatorLine parse_separator(std::string_view line, std::size_t line_no) {
  auto malformed = [&](const std::string& why) -> SeparatorLine {
    throw_data("MalformedSeparator",
               "line " + std::to_string(line_no) + ": " + why + ": '" + std::string(line) + "'");
  };
  std::string_view rest = line.substr(kSeparatorPrefix.size());
  if (rest.empty() || rest.front() != ',') return malformed("expected ',' after separator");
  rest.remove_prefix(1);
  const auto comma = rest.find(',');
  if (comma == std::string_view::npos) return malformed("missing ',' after level");
  const std::string_view level_text = rest.substr(0, comma);
  int level = 0;
  const auto [ptr, ec] = std::from_chars(level_text.data(), level_text.data() + level_text.size(), level);
  if (level_text.empty() || ec != std::errc() || ptr != level_text.data() + level_text.size() ||
      level < 1) {
    return malformed("level must be a positive integer");
  }
  std::string_view title = rest.substr(comma + 1);
  if (!title.empty() && title.back() == '.') title.remove_suffix(1);
  return SeparatorLine{level, std::string(title)};
}

std::optional<Segment> filter_segment(const Segment& seg) {
  Segment kept{seg.level, seg.title, seg.sentences, {}};
  for (const auto& child : seg.children) {
    if (auto c = filter_segment(child)) kept.children.push_back(std::move(*c));
  }
  if (kept.subtree_sentence_count() < 2) return std::nullopt;
  return kept;
}

void collect_sentences(const Segment& seg, std::vector<Sentence>& out) {
  out.insert(out.end(), seg.sentences.begin(), seg.sentences.end());
  for (const auto& child : seg.children) collect_sentences(child, out);
}

void serialize_segment(const Segment& seg, std::string& out) {
  out += kSeparatorPrefix;
  out += ',';
  out += std::to_string(seg.level);
  out += ',';
  out += seg.title;
  out += ".\n";
  for (const auto& s : seg.sentences) {
    if (s.kind == SentenceKind::ListItem) out += kListPrefix;
    if (s.kind == SentenceKind::Code) out += kCodePrefix;
    out += s.text;
    out += '\n';
  }
  for (const auto& child : seg.children) serialize_segment(child, out);
}

}  // namespace

const char* to_string(SentenceKind kind) {
  switch (kind) {
    case SentenceKind::Prose: return "prose";
    case SentenceKind::ListItem: return "list_item";
    case SentenceKind::Code: return "code";
  }
  return "prose";
}

SentenceKind sentence_kind_from_string(std::string_view name) {
  if (name == "prose") return SentenceKind::Prose;
  if (name == "list_item") return SentenceKind::ListItem;
  if (name == "code") return SentenceKind::Code;
  throw_data("BadSentenceKind", "unknown sentence kind '" + std::string(name) + "'");
}

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::TooFewSegments: return "too_few_segments";
    case RejectReason::MostSegmentsFiltered: return "most_segments_filtered";
  }
  return "unknown";
}

std::size_t Segment::subtree_sentence_count() const {
  std::size_t n = sentences.size();
  for (const auto& c : children) n += c.subtree_sentence_count();
  return n;
}

std::size_t Segment::subtree_segment_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.subtree_segment_count();
  return n;
}

std::size_t Document::segment_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.subtree_segment_count();
  return n;
}

bool is_abbreviation(std::string_view word) {
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

std::vector<Sentence> split_sentences(std::string_view text) {
  return split_with_kind(text, SentenceKind::Prose);
}

Document parse_document(std::string_view raw, std::string id) {
  Document doc{std::move(id), {}};
  // Open segments, outermost first. Closed segments are moved into their
  // parent (or the document) when popped.
  std::vector<Segment> open;
  auto close_top = [&]() {
    Segment done = std::move(open.back());
    open.pop_back();
    if (open.empty()) {
      doc.segments.push_back(std::move(done));
    } else {
      open.back().children.push_back(std::move(done));
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto eol = raw.find('\n', pos);
    if (eol == std::string_view::npos) eol = raw.size();
    std::string_view line = raw.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto content = trim(line);
    if (content.empty()) continue;

    if (content.starts_with(kSeparatorPrefix)) {
      auto sep = parse_separator(content, line_no);
      while (!open.empty() && open.back().level >= sep.level) close_top();
      const int parent_level = open.empty() ? 0 : open.back().level;
      if (sep.level > parent_level + 1) {
        throw_data("LevelJump", "line " + std::to_string(line_no) + ": level " +
                                    std::to_string(sep.level) + " under level " +
                                    std::to_string(parent_level));
      }
      open.push_back(Segment{sep.level, std::move(sep.title), {}, {}});
      continue;
    }

    if (open.empty()) open.push_back(Segment{1, "", {}, {}});
    SentenceKind kind = SentenceKind::Prose;
    std::string_view body = content;
    if (body.starts_with(kListPrefix)) {
      kind = SentenceKind::ListItem;
      body.remove_prefix(kListPrefix.size());
    } else if (body.starts_with(kCodePrefix)) {
      kind = SentenceKind::Code;
      body.remove_prefix(kCodePrefix.size());
    }
    auto sentences = split_with_kind(body, kind);
    auto& target = open.back().sentences;
    target.insert(target.end(), std::make_move_iterator(sentences.begin()),
                  std::make_move_iterator(sentences.end()));
  }
  while (!open.empty()) close_top();
  return doc;
}

std::string serialize_document(const Document& doc) {
  std::string out;
  for (const auto& seg : doc.segments) serialize_segment(seg, out);
  return out;
}

FilterResult apply_filters(const Document& doc) {
  Document kept{doc.id, {}};
  for (const auto& seg : doc.segments) {
    if (auto s = filter_segment(seg)) kept.segments.push_back(std::move(*s));
  }
  const std::size_t before = doc.segment_count();
  const std::size_t removed = before - kept.segment_count();
  if (2 * removed > before) {
    return Rejected{RejectReason::MostSegmentsFiltered, before, removed};
  }
  if (kept.segments.size() < 3) {
    return Rejected{RejectReason::TooFewSegments, before, removed};
  }
  return kept;
}

LabeledDocument make_labeled(std::string id, std::vector<std::vector<Sentence>> segments) {
  LabeledDocument out;
  out.id = std::move(id);
  for (auto& seg : segments) {
    if (seg.empty()) continue;
    out.segment_sizes.push_back(seg.size());
    for (auto& s : seg) out.sentences.push_back(std::move(s));
  }
  if (!out.sentences.empty()) {
    out.labels.assign(out.sentences.size() - 1, 0);
    std::size_t end = 0;
    for (std::size_t i = 0; i + 1 < out.segment_sizes.size(); ++i) {
      end += out.segment_sizes[i];
      out.labels[end - 1] = 1;
    }
  }
  return out;
}

LabeledDocument to_labeled(const Document& doc) {
  std::vector<std::vector<Sentence>> groups;
  groups.reserve(doc.segments.size());
  for (const auto& seg : doc.segments) {
    std::vector<Sentence> flat;
    collect_sentences(seg, flat);
    groups.push_back(std::move(flat));
  }
  return make_labeled(doc.id, std::move(groups));
}

void validate_labeled(const LabeledDocument& doc) {
  auto fail = [&](const std::string& why) {
    throw_data("InvalidLabels", "document '" + doc.id + "': " + why);
  };
  const std::size_t n = doc.sentences.size();
  if (n == 0) {
    if (!doc.labels.empty() || !doc.segment_sizes.empty()) fail("labels on an empty document");
    return;
  }
  if (doc.labels.size() != n - 1) fail("expected " + std::to_string(n - 1) + " labels");
  std::size_t total = 0;
  for (auto s : doc.segment_sizes) {
    if (s == 0) fail("zero-length segment");
    total += s;
  }
  if (total != n) fail("segment sizes do not sum to the sentence count");
  std::size_t end = 0;
  for (std::size_t i = 0; i < doc.segment_sizes.size(); ++i) {
    const std::size_t begin = end;
    end += doc.segment_sizes[i];
    for (std::size_t j = begin; j + 1 < end; ++j) {
      if (doc.labels[j] != 0) fail("boundary inside a segment");
    }
    if (end < n && doc.labels[end - 1] != 1) fail("missing boundary label");
  }
}

PrepareResult prepare_training_doc(const LabeledDocument& doc) {
  std::vector<std::vector<Sentence>> groups;
  std::size_t offset = 0;
  for (std::size_t seg = 0; seg < doc.segment_sizes.size(); ++seg) {
    const std::size_t size = doc.segment_sizes[seg];
    if (seg > 0) {
      std::vector<Sentence> kept;
      for (std::size_t i = offset; i < offset + size; ++i) {
        if (doc.sentences[i].kind == SentenceKind::Prose) kept.push_back(doc.sentences[i]);
      }
      if (!kept.empty()) groups.push_back(std::move(kept));
    }
    offset += size;
  }
  if (groups.size() < 2) {
    return Rejected{RejectReason::TooFewSegments, doc.segment_sizes.size(),
                    doc.segment_sizes.size() - groups.size()};
  }
  return make_labeled(doc.id, std::move(groups));
}

std::vector<LabeledDocument> generate_choi_style(const PassagePool& pool, const ChoiOptions& opts) {
  if (opts.seg_len_min < 1 || opts.seg_len_min > opts.seg_len_max) {
    throw_usage("BadRange", "segment length range must satisfy 1 <= lo <= hi");
  }
  if (opts.segs_per_doc < 1) throw_usage("BadRange", "segs_per_doc must be positive");
  std::vector<std::size_t> eligible;
  for (std::size_t s = 0; s < pool.sources.size(); ++s) {
    if (pool.sources[s].size() >= opts.seg_len_max) eligible.push_back(s);
  }
  if (eligible.size() < opts.segs_per_doc) {
    throw_data("InsufficientPool", std::to_string(eligible.size()) + " sources hold at least " +
                                       std::to_string(opts.seg_len_max) + " sentences; " +
                                       std::to_string(opts.segs_per_doc) + " required");
  }

  Rng rng(opts.seed);
  std::vector<LabeledDocument> docs;
  docs.reserve(opts.docs);
  for (std::size_t d = 0; d < opts.docs; ++d) {
    // Partial Fisher-Yates: the first segs_per_doc entries become the sample.
    std::vector<std::size_t> order = eligible;
    for (std::size_t i = 0; i < opts.segs_per_doc; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i, order.size() - 1));
      std::swap(order[i], order[j]);
    }
    std::vector<std::vector<Sentence>> passages;
    for (std::size_t i = 0; i < opts.segs_per_doc; ++i) {
      const auto& source = pool.sources[order[i]];
      const auto len = static_cast<std::size_t>(rng.uniform_int(opts.seg_len_min, opts.seg_len_max));
      const auto start = static_cast<std::size_t>(rng.uniform_int(0, source.size() - len));
      passages.emplace_back(source.begin() + static_cast<std::ptrdiff_t>(start),
                            source.begin() + static_cast<std::ptrdiff_t>(start + len));
    }
    std::string id = std::to_string(d);
    id.insert(0, id.size() < 5 ? 5 - id.size() : 0, '0');
    docs.push_back(make_labeled(opts.id_prefix + "_" + id, std::move(passages)));
  }
  return docs;
}

CorpusStats corpus_stats(const std::vector<LabeledDocument>& corpus) {
  if (corpus.empty()) throw_data("EmptyCorpus", "cannot compute statistics of an empty corpus");
  auto mean_std = [](const std::vector<double>& xs) {
    if (xs.empty()) return std::pair{0.0, 0.0};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(sq / static_cast<double>(xs.size()))};
  };
  std::vector<double> seg_lens;
  std::vector<double> segs_per_doc;
  for (const auto& doc : corpus) {
    segs_per_doc.push_back(static_cast<double>(doc.segment_sizes.size()));
    for (auto s : doc.segment_sizes) seg_lens.push_back(static_cast<double>(s));
  }
  CorpusStats stats;
  stats.doc_count = corpus.size();
  std::tie(stats.seg_len_mean, stats.seg_len_std) = mean_std(seg_lens);
  std::tie(stats.segs_per_doc_mean, stats.segs_per_doc_std) = mean_std(segs_per_doc);
  return stats;
}

}  // namespace textseg
