#include "textseg/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "textseg/corpus_io.hpp"
#include "textseg/error.hpp"

namespace textseg {

namespace {

constexpr std::string_view kMagic = "TSEGCKPT";

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw_data("BadCheckpoint", "truncated checkpoint");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_bytes(const ModelParams& params) {
  const auto& c = params.config;
  Writer w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.d));
  w.u32(static_cast<std::uint32_t>(c.h1));
  w.u32(static_cast<std::uint32_t>(c.h2));
  w.u32(static_cast<std::uint32_t>(c.encoder_layers));
  w.u32(static_cast<std::uint32_t>(c.predictor_layers));
  w.u32(static_cast<std::uint32_t>(c.token_cap));
  w.u32(static_cast<std::uint32_t>(kBoundaryIndex));
  w.u64(c.seed);
  const auto blocks = params.blocks();
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.u32(static_cast<std::uint32_t>(b.name.size()));
    w.bytes(b.name);
    w.u32(static_cast<std::uint32_t>(b.rows));
    w.u32(static_cast<std::uint32_t>(b.cols));
    for (double v : b.values()) w.f64(v);
  }
  return w.take();
}

ModelParams parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(kMagic.size()) != kMagic) throw_data("BadCheckpoint", "not a checkpoint file (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw_data("BadCheckpoint", "unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.d = r.u32();
  cfg.h1 = r.u32();
  cfg.h2 = r.u32();
  cfg.encoder_layers = r.u32();
  cfg.predictor_layers = r.u32();
  cfg.token_cap = r.u32();
  const auto boundary_index = r.u32();
  cfg.seed = r.u64();
  if (boundary_index != static_cast<std::uint32_t>(kBoundaryIndex)) {
    throw_data("CheckpointMismatch", "checkpoint uses boundary index " + std::to_string(boundary_index));
  }
  ModelParams params = [&] {
    try {
      return ModelParams(cfg);
    } catch (const Error& e) {
      throw_data("CheckpointMismatch", e.what());
    }
  }();
  auto blocks = params.blocks();
  const auto count = r.u32();
  if (count != blocks.size()) {
    throw_data("CheckpointMismatch", "expected " + std::to_string(blocks.size()) + " parameter blocks, found " +
                                         std::to_string(count));
  }
  for (auto& b : blocks) {
    const auto name = r.bytes(r.u32());
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (name != b.name || rows != b.rows || cols != b.cols) {
      throw_data("CheckpointMismatch", "block '" + std::string(name) + "' " + std::to_string(rows) + "x" +
                                           std::to_string(cols) + " does not match expected '" + b.name + "' " +
                                           std::to_string(b.rows) + "x" + std::to_string(b.cols));
    }
    for (double& v : b.values()) v = r.f64();
  }
  if (!r.done()) throw_data("BadCheckpoint", "trailing bytes after the last block");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  write_text_file(path, checkpoint_bytes(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_text_file(path));
}

}  // namespace textseg
