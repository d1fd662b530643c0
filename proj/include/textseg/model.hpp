#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "textseg/corpus.hpp"
#include "textseg/embeddings.hpp"
#include "textseg/nn.hpp"

namespace textseg {

/// Softmax component holding P(sentence ends a segment); component 0 is
/// "continues". Stored in checkpoints.
inline constexpr int kBoundaryIndex = 1;

inline constexpr std::size_t kDefaultTokenCap = 256;

struct ModelConfig {
  Index d = 8;
  Index h1 = 128;
  Index h2 = 128;
  std::uint64_t seed = 13;
  std::size_t encoder_layers = 2;
  std::size_t predictor_layers = 2;
  std::size_t token_cap = kDefaultTokenCap;

  bool operator==(const ModelConfig&) const = default;
};

/// Sentence encoder (word BiLSTM + max pooling) feeding a sentence-level
/// BiLSTM and a per-sentence 2-way dense layer: d -> 2h1 -> 2h2 -> 2.
struct ModelParams {
  ModelConfig config;
  nn::BiLstmParams encoder;
  nn::BiLstmParams predictor;
  nn::DenseParams output;

  ModelParams() = default;
  /// Zero-valued parameters with the shapes implied by `cfg`. Throws
  /// Error(Usage, "InvalidConfig") on a non-positive size.
  explicit ModelParams(const ModelConfig& cfg);

  std::vector<nn::ParamBlock> blocks();
  std::vector<nn::ConstParamBlock> blocks() const;

  ModelParams zeros_like() const { return ModelParams(config); }
  std::size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;
};

/// Seeded initialization; identical configs give identical parameters.
ModelParams init_params(const ModelConfig& cfg);

/// Per-sentence embedded word sequences, each at least one row.
struct EmbeddedDocument {
  std::vector<Tensor2> sentences;
};

/// Tokenizes each sentence, truncates to `token_cap` tokens and looks up
/// the vectors. Existing Sentence::tokens are reused when present.
EmbeddedDocument embed_document(const LabeledDocument& doc, const EmbeddingTable& table,
                                std::size_t token_cap = kDefaultTokenCap);

/// Max-pooled top-layer encoder output, length 2h1.
Vector encode_sentence(const ModelParams& params, const Tensor2& vectors);

/// Everything the backward pass needs from one document's forward pass.
struct ForwardTape {
  std::vector<nn::BiLstmCache> sentence_caches;
  std::vector<std::vector<Index>> pool_argmax;
  std::vector<Index> sentence_lengths;
  Tensor2 sentence_embeddings;  // n x 2h1
  nn::BiLstmCache predictor_cache;
  Tensor2 predictor_out;        // n x 2h2
  Tensor2 logits;               // (n-1) x 2
  Tensor2 softmax;              // (n-1) x 2
  std::vector<std::uint8_t> labels;
  double loss = 0.0;

  std::vector<double> boundary_probs() const;
};

/// Runs the full model. With labels (length n - 1) the tape also carries
/// the document loss. Throws DocumentTooShort when n < 2.
ForwardTape forward(const ModelParams& params, const EmbeddedDocument& doc,
                    std::span<const std::uint8_t> labels = {});

/// Exact reverse-mode gradient of tape.loss. Does not modify the tape.
/// Throws NonFiniteGradient.
ModelParams backward(const ModelParams& params, const ForwardTape& tape);

/// p_i = P(sentence i ends a segment), i = 0..n-2.
std::vector<double> predict_probs(const ModelParams& params, const EmbeddedDocument& doc);
std::vector<double> predict_probs(const ModelParams& params, const LabeledDocument& doc,
                                  const EmbeddingTable& table);

}  // namespace textseg
