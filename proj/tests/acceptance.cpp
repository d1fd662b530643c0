// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Usage: acceptance <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "textseg/checkpoint.hpp"
#include "textseg/commands.hpp"
#include "textseg/corpus_io.hpp"
#include "textseg/infer.hpp"
#include "textseg/metrics.hpp"
#include "textseg/model.hpp"
#include "textseg/nn.hpp"
#include "textseg/train.hpp"

using namespace textseg;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using Flags = std::vector<std::uint8_t>;

namespace {

const fs::path kFixtures = TEXTSEG_FIXTURES;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path fresh(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Generator settings shared by the synthetic experiments.
commands::GenSynthOptions synth_options(const fs::path& out, std::size_t docs, std::uint64_t seed) {
  commands::GenSynthOptions g;
  g.out_dir = out;
  g.docs = docs;
  g.segs_per_doc = 3;
  g.seg_len_min = 2;
  g.seg_len_max = 4;
  g.sources = 8;
  g.dim = 8;
  g.seed = seed;
  return g;
}

commands::TrainOptions synth_training(const fs::path& data, const fs::path& out, std::size_t epochs, Index h = 8,
                                      std::optional<double> clip = 5.0) {
  commands::TrainOptions t;
  t.train = data / "corpus.jsonl";
  t.vectors = data / "vectors.txt";
  t.out_dir = out;
  t.h1 = h;
  t.h2 = h;
  t.prepare = false;
  t.config.lr = 0.5;
  t.config.clip = clip;
  t.config.epochs = epochs;
  return t;
}

LabeledDocument from_words(const std::vector<std::vector<std::string>>& segments, const std::string& id) {
  std::vector<std::vector<Sentence>> groups;
  for (const auto& seg : segments) {
    std::vector<Sentence> g;
    for (const auto& s : seg) g.push_back(Sentence{s, {}, SentenceKind::Prose});
    groups.push_back(std::move(g));
  }
  return make_labeled(id, std::move(groups));
}

Outcome pk_oracle() {
  const auto start = Clock::now();
  Rng rng(2718);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 12));
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, n - 1));
    Flags ref(n - 1);
    Flags hyp(n - 1);
    const double pr = rng.uniform01();
    const double ph = rng.uniform01();
    for (auto& b : ref) b = rng.bernoulli(pr);
    for (auto& b : hyp) b = rng.bernoulli(ph);
    worst = std::max(worst, std::abs(pk_sentences(ref, hyp, k) - oracle::pk(ref, hyp, k)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-12 && secs < 5.0, fmt("200 triples, max |diff| %.3g, %.3f s", worst, secs)};
}

Outcome hand_cases() {
  const Flags ref{0, 1, 0};
  const std::vector<std::size_t> words{2, 2};
  const bool ok = pk_sentences(ref, Flags{0, 0, 0}, 1) == 1.0 / 3.0 &&
                  pk_sentences(ref, Flags{1, 1, 1}, 1) == 2.0 / 3.0 && pk_sentences(ref, ref, 1) == 0.0 &&
                  pk_words(Flags{1}, Flags{0}, words, 1) == 1.0 / 3.0 &&
                  pk_words(Flags{1}, Flags{1}, words, 1) == 0.0 &&
                  window_size(std::vector<std::size_t>{2, 2}) == 1 &&
                  window_size(std::vector<std::size_t>{13, 14}) == 7;
  return {ok, "sentence 1/3, 2/3 and word 1/3 cases"};
}

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  EmbeddingTable table(8);
  const char* vocab[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int i = 0; i < 8; ++i) {
    std::vector<double> v(8, 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    table.add(vocab[i], v);
  }
  table.finalize();
  ModelConfig cfg;
  cfg.d = 8;
  cfg.h1 = 4;
  cfg.h2 = 4;
  auto params = init_params(cfg);
  const auto doc = from_words({{"a b c.", "b c a d."}, {"e f g h."}}, "toy");
  const auto embedded = embed_document(doc, table, params.config.token_cap);
  const auto grad = backward(params, forward(params, embedded, doc.labels));
  auto blocks = params.blocks();
  const auto grads = std::as_const(grad).blocks();
  nn::GradCheckOptions opts;
  opts.eps = 1e-5;
  opts.tol = 1e-4;
  opts.max_coords = 300;
  opts.floor = 1e-6;
  const auto r = nn::grad_check([&] { return forward(params, embedded, doc.labels).loss; }, blocks, grads, opts);
  const double secs = seconds_since(start);
  return {r.passed && r.checked >= 200 && secs < 30.0,
          fmt("%zu coordinates, max rel error %.3g, %.2f s", r.checked, r.max_rel_error, secs)};
}

Outcome overfit(const fs::path& work) {
  const auto start = Clock::now();
  const auto data = fresh(work / "c4_data");
  commands::gen_synth(synth_options(data, 10, 41));
  const auto model = fresh(work / "c4_model");
  commands::train(synth_training(data, model, 500, 4, std::nullopt));
  const auto loss = read_json(model / "history.json")["train_loss"].get<std::vector<double>>();
  const auto hit = std::find_if(loss.begin(), loss.end(), [](double v) { return v < 0.05; });

  commands::EvaluateOptions e;
  e.corpus = data / "corpus.jsonl";
  e.out_dir = fresh(work / "c4_eval");
  e.model = model / "model.ckpt";
  e.vectors = data / "vectors.txt";
  e.tau = 0.5;
  const double pk = commands::evaluate(e).report["aggregate_pk"].get<double>();
  const double secs = seconds_since(start);
  const long epoch = hit == loss.end() ? -1 : static_cast<long>(hit - loss.begin()) + 1;
  return {hit != loss.end() && pk == 0.0 && secs < 120.0,
          fmt("loss < 0.05 at epoch %ld, final %.3g, train Pk %.4f, %.1f s", epoch, loss.back(), pk, secs)};
}

struct Generalization {
  Outcome outcome;
  fs::path model;
  fs::path dev;
  fs::path vectors;
};

Generalization generalization(const fs::path& work) {
  const auto start = Clock::now();
  const auto train_dir = fresh(work / "c5_train");
  const auto dev_dir = fresh(work / "c5_dev");
  const auto test_dir = fresh(work / "c5_test");
  commands::gen_synth(synth_options(train_dir, 100, 101));
  commands::gen_synth(synth_options(dev_dir, 20, 202));
  commands::gen_synth(synth_options(test_dir, 20, 303));
  const auto vectors = train_dir / "vectors.txt";

  std::set<std::string> seen;
  for (const auto& d : load_corpus(train_dir / "corpus.jsonl"))
    for (const auto& s : d.sentences) seen.insert(s.text);
  std::size_t overlap = 0;
  for (const auto& d : load_corpus(test_dir / "corpus.jsonl"))
    for (const auto& s : d.sentences) overlap += seen.count(s.text);

  const auto model_dir = fresh(work / "c5_model");
  auto t = synth_training(train_dir, model_dir, 150);
  commands::train(t);
  const auto model = model_dir / "model.ckpt";

  const auto tune_dir = fresh(work / "c5_tune");
  commands::tune({model, vectors, dev_dir / "corpus.jsonl", tune_dir});

  commands::EvaluateOptions e;
  e.corpus = test_dir / "corpus.jsonl";
  e.out_dir = fresh(work / "c5_eval_model");
  e.model = model;
  e.vectors = vectors;
  e.tau_file = tune_dir / "tau.json";
  const double model_pk = commands::evaluate(e).report["aggregate_pk"].get<double>();

  commands::EvaluateOptions b;
  b.corpus = e.corpus;
  b.out_dir = fresh(work / "c5_eval_baseline");
  b.random_baseline = true;
  b.seed = 7;
  const double base_pk = commands::evaluate(b).report["aggregate_pk"].get<double>();

  const double secs = seconds_since(start);
  const double tau = commands::read_tau_file(tune_dir / "tau.json");
  const bool ok =
      overlap == 0 && base_pk >= 0.40 && base_pk <= 0.60 && base_pk - model_pk >= 0.15 && secs < 600.0;
  return {{ok, fmt("model Pk %.4f (tau %.2f), baseline Pk %.4f, margin %.4f, %zu test sentences seen in training, "
                   "%.1f s",
                   model_pk, tau, base_pk, base_pk - model_pk, overlap, secs)},
          model,
          dev_dir / "corpus.jsonl",
          vectors};
}

Outcome tuning_identity(const Generalization& g) {
  const auto table = load_vectors_file(g.vectors.string());
  std::vector<std::pair<std::string, ModelParams>> models{{"trained", load_checkpoint(g.model)}};
  ModelConfig cfg;
  cfg.d = 8;
  cfg.h1 = 8;
  cfg.h2 = 8;
  cfg.seed = 99;
  models.emplace_back("untrained", init_params(cfg));
  const auto dev = load_corpus(g.dev);

  std::vector<std::vector<std::uint8_t>> labels;
  std::vector<std::vector<std::size_t>> sizes;
  for (const auto& d : dev) {
    labels.push_back(d.labels);
    sizes.push_back(d.segment_sizes);
  }
  bool ok = true;
  std::string detail;
  for (const auto& [name, params] : models) {
    const auto got = tune_threshold(params, dev, table);
    const auto want = oracle::sweep(predict_corpus(params, dev, table), labels, sizes);
    ok = ok && got.tau == want.tau && got.dev_pk == want.pk;
    detail += fmt("%s: tau %.2f/%.2f Pk %.6f/%.6f; ", name.c_str(), got.tau, want.tau, got.dev_pk, want.pk);
  }
  return {ok, detail + "library/sweep"};
}

Outcome determinism(const fs::path& work) {
  const auto data = fresh(work / "c7_data");
  commands::gen_synth(synth_options(data, 12, 5));
  bool ok = true;
  for (const char* run : {"c7_train_a", "c7_train_b"}) {
    auto t = synth_training(data, fresh(work / run), 5);
    t.dev = data / "corpus.jsonl";
    commands::train(t);
  }
  for (const char* f : {"model.ckpt", "history.json", "best.ckpt"})
    ok = ok && slurp(work / "c7_train_a" / f) == slurp(work / "c7_train_b" / f);
  const bool train_ok = ok;

  for (const char* run : {"c7_build_a", "c7_build_b"}) commands::build_corpus({kFixtures / "raw", fresh(work / run), 13});
  for (const char* f : {"train.txt", "dev.txt", "test.txt", "docs/nested.txt.json"})
    ok = ok && slurp(work / "c7_build_a" / f) == slurp(work / "c7_build_b" / f);
  return {ok, fmt("train outputs %s, build-corpus outputs %s", train_ok ? "identical" : "differ",
                  ok == train_ok ? "identical" : "differ")};
}

Outcome linear_runtime() {
  commands::GenSynthOptions g;
  g.sources = 10;
  g.words_min = 8;
  g.words_max = 8;
  g.dim = 16;
  const auto pool = commands::synthetic_pool(g);
  const auto table = commands::synthetic_vectors(g);
  ModelConfig cfg;
  cfg.d = 16;
  cfg.h1 = 32;
  cfg.h2 = 32;
  const auto params = init_params(cfg);

  auto docs = [&](std::size_t segs) {
    ChoiOptions c;
    c.docs = 25;
    c.segs_per_doc = segs;
    c.seg_len_min = 4;
    c.seg_len_max = 4;
    c.seed = 3;
    std::vector<EmbeddedDocument> out;
    for (const auto& doc : generate_choi_style(pool, c)) out.push_back(embed_document(doc, table));
    return out;
  };
  const auto short_docs = docs(5);
  const auto long_docs = docs(10);

  // Interleaved timing; each document keeps its fastest of several runs.
  auto time_one = [&](const EmbeddedDocument& d) {
    const auto t = Clock::now();
    volatile double sink = predict_probs(params, d).front();
    (void)sink;
    return seconds_since(t);
  };
  std::vector<double> best_short(short_docs.size(), 1e300);
  std::vector<double> best_long(long_docs.size(), 1e300);
  for (int rep = 0; rep < 7; ++rep) {
    for (std::size_t i = 0; i < short_docs.size(); ++i) {
      best_short[i] = std::min(best_short[i], time_one(short_docs[i]));
      best_long[i] = std::min(best_long[i], time_one(long_docs[i]));
    }
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const double t20 = median(best_short);
  const double t40 = median(best_long);
  const double ratio = t40 / t20;
  return {ratio <= 2.5, fmt("median %.3f ms (20 sentences) vs %.3f ms (40), ratio %.2f", t20 * 1e3, t40 * 1e3, ratio)};
}

Outcome corpus_rules(const fs::path& work) {
  const auto out = fresh(work / "c9_corpus");
  const auto r = commands::build_corpus({kFixtures / "raw", out, 13});
  bool ok = r.report["accepted"] == 4;
  std::size_t matched = 0;

  const auto rejected = read_json(kFixtures / "expected" / "rejected.json");
  for (const auto& d : r.report["rejected_documents"]) ok = ok && rejected[d["id"].get<std::string>()] == d["reason"];
  ok = ok && r.report["rejected_documents"].size() == rejected.size();

  std::istringstream expected(slurp(kFixtures / "expected" / "labeled.jsonl"));
  std::string line;
  while (std::getline(expected, line)) {
    const auto want = json::parse(line);
    const auto path = out / "docs" / (want["id"].get<std::string>() + ".json");
    if (!fs::exists(path)) {
      ok = false;
      continue;
    }
    const auto got = read_json(path);
    bool same = got["sentences"] == want["sentences"] && got["labels"] == want["labels"] &&
                got["segment_sizes"] == want["segment_sizes"];
    if (want.contains("kinds")) same = same && got["kinds"] == want["kinds"];
    ok = ok && same;
    matched += same;
  }

  const auto doc = load_corpus(out / "docs" / "training_transform.txt.json").at(0);
  const auto prepared = prepare_training_doc(doc);
  const auto want = read_json(kFixtures / "expected" / "prepared.json");
  bool transform_ok = false;
  if (const auto* p = std::get_if<LabeledDocument>(&prepared)) {
    json sentences = json::array();
    for (const auto& s : p->sentences) sentences.push_back(s.text);
    std::vector<int> labels(p->labels.begin(), p->labels.end());
    transform_ok = sentences == want["sentences"] && json(labels) == want["labels"] &&
                   json(p->segment_sizes) == want["segment_sizes"];
  }
  ok = ok && transform_ok;
  return {ok, fmt("%zu/4 labeled outputs, %zu rejections, training transform %s", matched,
                  r.report["rejected_documents"].size(), transform_ok ? "matches" : "differs")};
}

Outcome stats_sanity(const fs::path& work) {
  const auto data = fresh(work / "c10_data");
  commands::GenSynthOptions g;
  g.out_dir = data;
  g.docs = 50;
  g.segs_per_doc = 10;
  commands::gen_synth(g);
  const auto r = commands::stats({data / "corpus.jsonl", std::nullopt});
  const double mean = r.report["segs_per_doc_mean"].get<double>();
  return {mean == 10.0, fmt("segs_per_doc_mean %.17g over %d documents", mean, r.report["doc_count"].get<int>())};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "textseg_acceptance";
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report(1, "Pk oracle equivalence", pk_oracle);
  report(2, "hand-computed Pk cases", hand_cases);
  report(3, "gradient fidelity", gradient_fidelity);
  report(4, "overfit oracle", [&] { return overfit(work); });
  Generalization gen;
  report(5, "generalization over baseline", [&] {
    gen = generalization(work);
    return gen.outcome;
  });
  report(6, "threshold-tuning identity", [&] {
    if (gen.model.empty() || !fs::exists(gen.model)) return Outcome{false, "no trained model from criterion 5"};
    return tuning_identity(gen);
  });
  report(7, "determinism", [&] { return determinism(work); });
  report(8, "linear runtime", linear_runtime);
  report(9, "corpus rules", [&] { return corpus_rules(work); });
  report(10, "statistics sanity", [&] { return stats_sanity(work); });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
