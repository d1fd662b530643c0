#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "textseg/corpus.hpp"
#include "textseg/embeddings.hpp"
#include "textseg/metrics.hpp"
#include "textseg/model.hpp"

namespace textseg {

/// boundaries[i] = 1 iff p[i] > tau.
Hypothesis greedy_decode(std::span<const double> p, double tau);

/// {0.00, 0.01, ..., 1.00}, computed as i / 100.
std::vector<double> threshold_grid();

struct TuneResult {
  double tau = 0.0;
  double dev_pk = 0.0;
  /// Mean dev Pk at each grid point, aligned with the grid.
  std::vector<double> grid_pk;
};

/// Picks the smallest grid threshold minimizing the corpus-mean
/// sentence-level Pk. `probs[i]` belongs to `dev[i]`. Documents whose window
/// does not fit are left out of every mean. Throws EmptyDev.
TuneResult tune_threshold_from_probs(const std::vector<std::vector<double>>& probs,
                                     const std::vector<LabeledDocument>& dev, std::span<const double> grid);

TuneResult tune_threshold(const ModelParams& model, const std::vector<LabeledDocument>& dev,
                          const EmbeddingTable& table, std::size_t jobs = 1);

/// Boundary probabilities for each document; documents with fewer than two
/// sentences get an empty vector.
std::vector<std::vector<double>> predict_corpus(const ModelParams& model, const std::vector<LabeledDocument>& docs,
                                                const EmbeddingTable& table, std::size_t jobs = 1);

/// One predicted document: {"id", "segment_sizes", "boundaries", "probabilities"}.
struct Prediction {
  std::string id;
  std::vector<double> probabilities;
  Hypothesis hypothesis;
};

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

/// JSON lines, one Prediction per line.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

}  // namespace textseg
