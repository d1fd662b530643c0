#include "textseg/model.hpp"

#include <cmath>
#include <utility>

#include "textseg/error.hpp"
#include "textseg/train.hpp"

namespace textseg {

ModelParams::ModelParams(const ModelConfig& cfg) : config(cfg) {
  if (cfg.d < 1 || cfg.h1 < 1 || cfg.h2 < 1 || cfg.encoder_layers < 1 || cfg.predictor_layers < 1 ||
      cfg.token_cap < 1) {
    throw_usage("InvalidConfig", "model dimensions, layer counts and token cap must be positive");
  }
  encoder = nn::BiLstmParams(cfg.d, cfg.h1, cfg.encoder_layers);
  predictor = nn::BiLstmParams(2 * cfg.h1, cfg.h2, cfg.predictor_layers);
  output = nn::DenseParams(2 * cfg.h2, 2);
}

std::vector<nn::ParamBlock> ModelParams::blocks() {
  std::vector<nn::ParamBlock> out;
  nn::append_blocks(encoder, "encoder", out);
  nn::append_blocks(predictor, "predictor", out);
  nn::append_blocks(output, "output", out);
  return out;
}

std::vector<nn::ConstParamBlock> ModelParams::blocks() const {
  std::vector<nn::ConstParamBlock> out;
  nn::append_blocks(encoder, "encoder", out);
  nn::append_blocks(predictor, "predictor", out);
  nn::append_blocks(output, "output", out);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += static_cast<std::size_t>(b.size());
  return n;
}

ModelParams init_params(const ModelConfig& cfg) {
  ModelParams p(cfg);
  Rng rng(cfg.seed);
  for (auto* net : {&p.encoder, &p.predictor}) {
    for (auto& layer : net->layers) {
      nn::init_lstm(layer.forward, rng);
      nn::init_lstm(layer.backward, rng);
    }
  }
  nn::init_uniform(p.output.W, rng);
  p.output.b.setZero();
  return p;
}

EmbeddedDocument embed_document(const LabeledDocument& doc, const EmbeddingTable& table,
                                std::size_t token_cap) {
  EmbeddedDocument out;
  out.sentences.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) {
    std::vector<std::string> tokens = s.tokens.empty() ? tokenize(s.text) : s.tokens;
    if (tokens.size() > token_cap) tokens.resize(token_cap);
    out.sentences.push_back(embed_sentence(tokens, table));
  }
  return out;
}

Vector encode_sentence(const ModelParams& params, const Tensor2& vectors) {
  return nn::max_pool_time(nn::bilstm_forward(params.encoder, vectors));
}

std::vector<double> ForwardTape::boundary_probs() const {
  std::vector<double> p(static_cast<std::size_t>(softmax.rows()));
  for (Index i = 0; i < softmax.rows(); ++i) p[static_cast<std::size_t>(i)] = softmax(i, kBoundaryIndex);
  return p;
}

ForwardTape forward(const ModelParams& params, const EmbeddedDocument& doc,
                    std::span<const std::uint8_t> labels) {
  const auto n = static_cast<Index>(doc.sentences.size());
  if (n < 2) throw_data("DocumentTooShort", "segmentation needs at least two sentences");
  if (!labels.empty() && static_cast<Index>(labels.size()) != n - 1) {
    throw_data("LengthMismatch", "expected " + std::to_string(n - 1) + " labels, got " +
                                     std::to_string(labels.size()));
  }

  ForwardTape tape;
  tape.sentence_caches.resize(static_cast<std::size_t>(n));
  tape.pool_argmax.resize(static_cast<std::size_t>(n));
  tape.sentence_lengths.resize(static_cast<std::size_t>(n));
  tape.sentence_embeddings.resize(n, params.encoder.output_size());
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto& words = doc.sentences[k];
    const Tensor2 states = nn::bilstm_forward(params.encoder, words, &tape.sentence_caches[k]);
    tape.sentence_embeddings.row(i) = nn::max_pool_time(states, &tape.pool_argmax[k]).transpose();
    tape.sentence_lengths[k] = words.rows();
  }

  tape.predictor_out = nn::bilstm_forward(params.predictor, tape.sentence_embeddings, &tape.predictor_cache);

  // The last sentence's output is dropped: it has no boundary decision.
  tape.logits.resize(n - 1, 2);
  tape.softmax.resize(n - 1, 2);
  for (Index i = 0; i + 1 < n; ++i) {
    const Vector z = nn::dense_forward(params.output.W, params.output.b, tape.predictor_out.row(i).transpose());
    tape.logits.row(i) = z.transpose();
    tape.softmax.row(i) = nn::softmax2(Eigen::Vector2d(z[0], z[1])).transpose();
  }
  require_finite(tape.softmax, "NonFiniteActivation", "output probabilities");

  if (!labels.empty()) {
    tape.labels.assign(labels.begin(), labels.end());
    tape.loss = doc_loss(tape.boundary_probs(), tape.labels);
  }
  return tape;
}

ModelParams backward(const ModelParams& params, const ForwardTape& tape) {
  ModelParams grad = params.zeros_like();
  const Index n = tape.sentence_embeddings.rows();
  if (tape.labels.empty()) return grad;

  // Fused softmax + cross-entropy: dJ/dz = softmax - onehot(y).
  Tensor2 d_pred = Tensor2::Zero(n, params.predictor.output_size());
  for (Index i = 0; i + 1 < n; ++i) {
    Vector dz = tape.softmax.row(i).transpose();
    dz[tape.labels[static_cast<std::size_t>(i)] ? kBoundaryIndex : 1 - kBoundaryIndex] -= 1.0;
    d_pred.row(i) = nn::dense_backward(params.output.W, tape.predictor_out.row(i).transpose(), dz, grad.output)
                        .transpose();
  }

  const Tensor2 d_emb = nn::bilstm_backward(params.predictor, tape.predictor_cache, d_pred, grad.predictor);

  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Tensor2 d_states =
        nn::max_pool_backward(d_emb.row(i).transpose(), tape.pool_argmax[k], tape.sentence_lengths[k]);
    // Input gradients are discarded: the embeddings are frozen.
    nn::bilstm_backward(params.encoder, tape.sentence_caches[k], d_states, grad.encoder);
  }

  for (const auto& b : std::as_const(grad).blocks()) {
    for (double v : b.values()) {
      if (!std::isfinite(v)) throw_numeric("NonFiniteGradient", "gradient block '" + b.name + "'");
    }
  }
  return grad;
}

std::vector<double> predict_probs(const ModelParams& params, const EmbeddedDocument& doc) {
  return forward(params, doc).boundary_probs();
}

std::vector<double> predict_probs(const ModelParams& params, const LabeledDocument& doc,
                                  const EmbeddingTable& table) {
  if (table.dim() != params.config.d) {
    throw_data("DimensionMismatch", "model expects d=" + std::to_string(params.config.d) +
                                        " but the embedding table has dim=" + std::to_string(table.dim()));
  }
  return predict_probs(params, embed_document(doc, table, params.config.token_cap));
}

}  // namespace textseg
