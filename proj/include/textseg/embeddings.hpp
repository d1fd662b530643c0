#pragma once

#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textseg/tensor.hpp"

namespace textseg {

/// Vector used for tokens missing from the table.
enum class OovPolicy {
  Zeros,
  Mean,
};

OovPolicy oov_policy_from_string(std::string_view name);
const char* to_string(OovPolicy policy);

/// Frozen token -> vector map. Immutable after loading; safe for concurrent
/// lookups.
class EmbeddingTable {
 public:
  EmbeddingTable(Index dim, OovPolicy policy = OovPolicy::Zeros);

  Index dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  OovPolicy oov_policy() const { return policy_; }

  /// Appends an entry. Throws DuplicateToken / DimensionMismatch /
  /// NonFiniteValue.
  void add(std::string token, std::span<const double> values);

  /// Recomputes the unknown-token vector from the current entries and policy.
  void finalize();

  bool contains(std::string_view token) const;

  /// Exact match, then lowercase match, then the unknown vector.
  Eigen::Map<const Vector> lookup(std::string_view token) const;

  Eigen::Map<const Vector> unk() const { return {unk_.data(), dim_}; }

  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const EmbeddingTable& other) const;

 private:
  const double* row(std::size_t index) const { return values_.data() + index * static_cast<std::size_t>(dim_); }

  Index dim_;
  OovPolicy policy_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
  Vector unk_;
};

/// Text vector format: header "<count> <dim>", then "<token> <v1> ... <vdim>"
/// per line. Errors: BadHeader, DimensionMismatch, NonFiniteValue,
/// DuplicateToken, CountMismatch.
EmbeddingTable load_vectors(std::istream& in, OovPolicy policy = OovPolicy::Zeros);
EmbeddingTable load_vectors_file(const std::string& path, OovPolicy policy = OovPolicy::Zeros);

/// Writes the text format with shortest round-trip decimal values.
std::string serialize_vectors(const EmbeddingTable& table);

/// Whitespace split, with leading and trailing punctuation peeled into
/// one-character tokens. Words on the abbreviation list stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// One row per token; an empty token list yields the single row [unk].
Tensor2 embed_sentence(const std::vector<std::string>& tokens, const EmbeddingTable& table);

}  // namespace textseg
