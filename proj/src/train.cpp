#include "textseg/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "textseg/parallel.hpp"
#include "textseg/rng.hpp"

namespace textseg {

double doc_loss(std::span<const double> p, std::span<const std::uint8_t> y) {
  if (p.size() != y.size()) {
    throw_data("LengthMismatch", std::to_string(p.size()) + " probabilities vs " + std::to_string(y.size()) +
                                     " labels");
  }
  double j = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    j -= y[i] ? std::log(q) : std::log(1.0 - q);
  }
  return j;
}

TrainingDiverged::TrainingDiverged(const std::string& message, ModelParams last_good, TrainHistory history)
    : Error(ErrorKind::Numeric, "NonFiniteLoss", message),
      last_good_(std::move(last_good)),
      history_(std::move(history)) {}

double mean_loss(const ModelParams& params, const std::vector<EmbeddedDocument>& docs,
                 const std::vector<LabeledDocument>& labeled, std::size_t jobs) {
  if (docs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> losses(docs.size());
  parallel_for(docs.size(), jobs, [&](std::size_t i) {
    losses[i] = forward(params, docs[i], labeled[i].labels).loss;
  });
  // Summed in index order so the result is independent of `jobs`.
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(docs.size());
}

TrainResult train(ModelParams params, const std::vector<LabeledDocument>& corpus,
                  const std::vector<LabeledDocument>& dev, const EmbeddingTable& table,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (corpus.empty()) throw_data("EmptyCorpus", "training corpus is empty");
  if (!(cfg.lr > 0.0)) throw_usage("BadConfig", "learning rate must be positive");
  if (cfg.clip && !(*cfg.clip > 0.0)) throw_usage("BadConfig", "clip must be positive");
  if (table.dim() != params.config.d) {
    throw_data("DimensionMismatch", "model expects d=" + std::to_string(params.config.d) +
                                        " but the embedding table has dim=" + std::to_string(table.dim()));
  }
  for (const auto& doc : corpus) {
    if (doc.size() < 2) throw_data("DocumentTooShort", "training document '" + doc.id + "' has fewer than 2 sentences");
  }

  auto embed_all = [&](const std::vector<LabeledDocument>& docs) {
    std::vector<EmbeddedDocument> out(docs.size());
    parallel_for(docs.size(), cfg.jobs, [&](std::size_t i) {
      out[i] = embed_document(docs[i], table, params.config.token_cap);
    });
    return out;
  };
  const auto train_docs = embed_all(corpus);
  const auto dev_docs = embed_all(dev);

  TrainHistory history;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  ModelParams last_good = params;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.shuffle) rng.shuffle(order);
    double total = 0.0;
    for (auto idx : order) {
      ForwardTape tape;
      try {
        tape = forward(params, train_docs[idx], corpus[idx].labels);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numeric) throw;
        throw TrainingDiverged(e.what(), std::move(last_good), std::move(history));
      }
      if (!std::isfinite(tape.loss)) {
        throw TrainingDiverged("non-finite loss on document '" + corpus[idx].id + "' in epoch " +
                                   std::to_string(epoch),
                               std::move(last_good), std::move(history));
      }
      total += tape.loss;
      ModelParams grad = [&] {
        try {
          return backward(params, tape);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Numeric) throw;
          throw TrainingDiverged(e.what(), std::move(last_good), std::move(history));
        }
      }();
      nn::sgd_step(params.blocks(), std::as_const(grad).blocks(), cfg.lr, cfg.clip);
    }
    const double train_loss = total / static_cast<double>(corpus.size());
    double dev_loss = 0.0;
    try {
      dev_loss = mean_loss(params, dev_docs, dev, cfg.jobs);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric) throw;
      throw TrainingDiverged(e.what(), std::move(last_good), std::move(history));
    }
    if (!dev.empty() && !std::isfinite(dev_loss)) {
      throw TrainingDiverged("non-finite dev loss in epoch " + std::to_string(epoch), std::move(last_good),
                             std::move(history));
    }
    const bool improved = !dev.empty() && dev_loss < best_dev;
    if (improved) {
      best_dev = dev_loss;
      since_best = 0;
    } else {
      ++since_best;
    }

    history.train_loss.push_back(train_loss);
    history.dev_loss.push_back(dev_loss);
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    last_good = params;
    if (on_epoch) on_epoch(EpochEvent{epoch, params, train_loss, dev_loss, improved});

    if (cfg.patience > 0 && !dev.empty() && since_best >= cfg.patience) {
      history.stopped_early = true;
      break;
    }
  }
  return {std::move(params), std::move(history)};
}

}  // namespace textseg
