#include "textseg/infer.hpp"

#include <limits>
#include <sstream>

#include "textseg/corpus_io.hpp"
#include "textseg/error.hpp"
#include "textseg/parallel.hpp"

namespace textseg {

Hypothesis greedy_decode(std::span<const double> p, double tau) {
  Hypothesis h;
  h.boundaries.reserve(p.size());
  for (double v : p) h.boundaries.push_back(v > tau ? 1 : 0);
  return h;
}

std::vector<double> threshold_grid() {
  std::vector<double> grid;
  grid.reserve(101);
  for (int i = 0; i <= 100; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

TuneResult tune_threshold_from_probs(const std::vector<std::vector<double>>& probs,
                                     const std::vector<LabeledDocument>& dev, std::span<const double> grid) {
  if (dev.empty()) throw_data("EmptyDev", "threshold tuning needs a non-empty dev set");
  if (grid.empty()) throw_usage("EmptyGrid", "threshold grid is empty");
  if (probs.size() != dev.size()) throw_data("LengthMismatch", "one probability vector per dev document required");

  std::vector<std::size_t> usable;
  std::vector<std::size_t> windows(dev.size(), 0);
  for (std::size_t d = 0; d < dev.size(); ++d) {
    if (dev[d].size() < 2) continue;
    windows[d] = window_size(dev[d].segment_sizes);
    if (windows[d] < dev[d].size()) usable.push_back(d);
  }
  if (usable.empty()) throw_data("NoEvaluableDocuments", "every dev document is shorter than its Pk window");

  TuneResult result;
  result.dev_pk = std::numeric_limits<double>::infinity();
  for (double tau : grid) {
    double sum = 0.0;
    for (auto d : usable) sum += pk_sentences(dev[d].labels, greedy_decode(probs[d], tau).boundaries, windows[d]);
    const double mean = sum / static_cast<double>(usable.size());
    result.grid_pk.push_back(mean);
    if (mean < result.dev_pk) {
      result.dev_pk = mean;
      result.tau = tau;
    }
  }
  return result;
}

std::vector<std::vector<double>> predict_corpus(const ModelParams& model, const std::vector<LabeledDocument>& docs,
                                                const EmbeddingTable& table, std::size_t jobs) {
  std::vector<std::vector<double>> probs(docs.size());
  parallel_for(docs.size(), jobs, [&](std::size_t i) {
    if (docs[i].size() >= 2) probs[i] = predict_probs(model, docs[i], table);
  });
  return probs;
}

TuneResult tune_threshold(const ModelParams& model, const std::vector<LabeledDocument>& dev,
                          const EmbeddingTable& table, std::size_t jobs) {
  if (dev.empty()) throw_data("EmptyDev", "threshold tuning needs a non-empty dev set");
  const auto grid = threshold_grid();
  return tune_threshold_from_probs(predict_corpus(model, dev, table, jobs), dev, grid);
}

nlohmann::json to_json(const Prediction& p) {
  nlohmann::json boundaries = nlohmann::json::array();
  for (auto b : p.hypothesis.boundaries) boundaries.push_back(static_cast<int>(b));
  return {{"id", p.id},
          {"segment_sizes", p.hypothesis.segment_sizes()},
          {"boundaries", std::move(boundaries)},
          {"probabilities", p.probabilities}};
}

Prediction prediction_from_json(const nlohmann::json& j) {
  try {
    Prediction p;
    p.id = j.at("id").get<std::string>();
    if (j.contains("probabilities")) p.probabilities = j.at("probabilities").get<std::vector<double>>();
    if (j.contains("boundaries")) {
      for (const auto& b : j.at("boundaries")) p.hypothesis.boundaries.push_back(b.get<int>() != 0 ? 1 : 0);
    } else {
      const auto sizes = j.at("segment_sizes").get<std::vector<std::size_t>>();
      p.hypothesis = hypothesis_from_sizes(sizes);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw_data("InvalidPrediction", e.what());
  }
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Prediction> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw_data("InvalidPrediction", path.string() + ": " + e.what());
    }
  }
  return out;
}

void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += to_json(p).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace textseg
