#include "textseg/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "textseg/corpus.hpp"
#include "textseg/error.hpp"

namespace textseg {

namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

OovPolicy oov_policy_from_string(std::string_view name) {
  if (name == "zeros") return OovPolicy::Zeros;
  if (name == "mean") return OovPolicy::Mean;
  throw_usage("BadOovPolicy", "unknown OOV policy '" + std::string(name) + "' (expected zeros|mean)");
}

const char* to_string(OovPolicy policy) {
  return policy == OovPolicy::Mean ? "mean" : "zeros";
}

EmbeddingTable::EmbeddingTable(Index dim, OovPolicy policy)
    : dim_(dim), policy_(policy), unk_(Vector::Zero(dim)) {
  if (dim < 1) throw_data("BadHeader", "embedding dimension must be positive");
}

void EmbeddingTable::add(std::string token, std::span<const double> values) {
  if (static_cast<Index>(values.size()) != dim_) {
    throw_data("DimensionMismatch", "token '" + token + "' has " + std::to_string(values.size()) +
                                        " values, expected " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw_data("NonFiniteValue", "token '" + token + "'");
  }
  if (index_.count(token) != 0) throw_data("DuplicateToken", "token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  values_.insert(values_.end(), values.begin(), values.end());
}

void EmbeddingTable::finalize() {
  unk_ = Vector::Zero(dim_);
  if (policy_ == OovPolicy::Mean && !tokens_.empty()) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) unk_ += Eigen::Map<const Vector>(row(i), dim_);
    unk_ /= static_cast<double>(tokens_.size());
  }
}

bool EmbeddingTable::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

Eigen::Map<const Vector> EmbeddingTable::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) it = index_.find(lowercase(token));
  if (it == index_.end()) return unk();
  return {row(it->second), dim_};
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  return dim_ == other.dim_ && policy_ == other.policy_ && tokens_ == other.tokens_ &&
         values_ == other.values_ && unk_ == other.unk_;
}

EmbeddingTable load_vectors(std::istream& in, OovPolicy policy) {
  std::string line;
  if (!std::getline(in, line)) throw_data("BadHeader", "missing '<count> <dim>' header");
  const auto header = split_ws(line);
  std::size_t count = 0;
  Index dim = 0;
  auto parse_uint = [](std::string_view s, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  if (header.size() != 2 || !parse_uint(header[0], count) || !parse_uint(header[1], dim) || dim < 1) {
    throw_data("BadHeader", "expected '<count> <dim>', got '" + line + "'");
  }

  EmbeddingTable table(dim, policy);
  std::vector<double> values(static_cast<std::size_t>(dim));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (static_cast<Index>(fields.size()) != dim + 1) {
      throw_data("DimensionMismatch", where + ": " + std::to_string(fields.size() - 1) +
                                          " values, expected " + std::to_string(dim));
    }
    for (Index k = 0; k < dim; ++k) {
      const auto f = fields[static_cast<std::size_t>(k) + 1];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ptr != f.data() + f.size() || (ec != std::errc() && ec != std::errc::result_out_of_range)) {
        throw_data("BadValue", where + ": cannot parse '" + std::string(f) + "'");
      }
      if (ec == std::errc::result_out_of_range || !std::isfinite(v)) {
        throw_data("NonFiniteValue", where + ": '" + std::string(f) + "'");
      }
      values[static_cast<std::size_t>(k)] = v;
    }
    if (table.contains(fields[0])) {
      throw_data("DuplicateToken", where + ": token '" + std::string(fields[0]) + "'");
    }
    table.add(std::string(fields[0]), values);
  }
  if (table.size() != count) {
    throw_data("CountMismatch", "header declares " + std::to_string(count) + " entries, found " +
                                    std::to_string(table.size()));
  }
  table.finalize();
  return table;
}

EmbeddingTable load_vectors_file(const std::string& path, OovPolicy policy) {
  std::ifstream in(path);
  if (!in) throw_data("Unreadable", "cannot open vector file '" + path + "'");
  return load_vectors(in, policy);
}

std::string serialize_vectors(const EmbeddingTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  char buf[32];
  for (const auto& token : table.tokens()) {
    out += token;
    const auto v = table.lookup(token);
    for (Index k = 0; k < table.dim(); ++k) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v[k]);
      out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto word : split_ws(text)) {
    std::size_t b = 0;
    while (b < word.size() && is_punct(word[b]) && !is_abbreviation(word.substr(b))) {
      out.emplace_back(1, word[b]);
      ++b;
    }
    word.remove_prefix(b);
    std::vector<std::string> trailing;
    while (!word.empty() && is_punct(word.back()) && !is_abbreviation(word)) {
      trailing.emplace_back(1, word.back());
      word.remove_suffix(1);
    }
    if (!word.empty()) out.emplace_back(word);
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

Tensor2 embed_sentence(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  if (tokens.empty()) {
    Tensor2 m(1, table.dim());
    m.row(0) = table.unk().transpose();
    return m;
  }
  Tensor2 m(static_cast<Index>(tokens.size()), table.dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    m.row(static_cast<Index>(t)) = table.lookup(tokens[t]).transpose();
  }
  return m;
}

}  // namespace textseg
