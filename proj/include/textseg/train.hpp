#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "textseg/corpus.hpp"
#include "textseg/embeddings.hpp"
#include "textseg/error.hpp"
#include "textseg/model.hpp"

namespace textseg {

inline constexpr double kProbClamp = 1e-12;

/// Summed binary cross-entropy over the n - 1 boundary decisions, with
/// probabilities clamped to [1e-12, 1 - 1e-12]. Throws LengthMismatch.
double doc_loss(std::span<const double> p, std::span<const std::uint8_t> y);

struct TrainConfig {
  double lr = 0.1;
  std::size_t epochs = 10;
  std::optional<double> clip;
  std::uint64_t seed = 13;
  bool shuffle = true;
  /// Stop after this many epochs without dev-loss improvement; 0 disables.
  std::size_t patience = 0;
  std::size_t jobs = 1;
};

/// dev_loss holds NaN for epochs run without a dev set.
struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> dev_loss;
  std::vector<double> epoch_seconds;
  bool stopped_early = false;

  std::size_t epochs() const { return train_loss.size(); }
};

struct EpochEvent {
  std::size_t epoch;  // 1-based
  const ModelParams& params;
  double train_loss;
  double dev_loss;
  /// True when the dev loss is the best so far.
  bool improved;
};

using EpochCallback = std::function<void(const EpochEvent&)>;

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

/// Raised when a loss or gradient turns non-finite. Carries the parameters
/// from the end of the last completed epoch.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, ModelParams last_good, TrainHistory history);

  const ModelParams& last_good() const { return last_good_; }
  const TrainHistory& history() const { return history_; }

 private:
  ModelParams last_good_;
  TrainHistory history_;
};

/// Mean document loss over `docs`.
double mean_loss(const ModelParams& params, const std::vector<EmbeddedDocument>& docs,
                 const std::vector<LabeledDocument>& labeled, std::size_t jobs = 1);

/// One SGD step per document, `cfg.epochs` passes. Deterministic for a
/// fixed config. Throws EmptyCorpus, DocumentTooShort, TrainingDiverged.
TrainResult train(ModelParams params, const std::vector<LabeledDocument>& corpus,
                  const std::vector<LabeledDocument>& dev, const EmbeddingTable& table,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace textseg
