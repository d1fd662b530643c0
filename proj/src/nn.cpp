#include "textseg/nn.hpp"

#include <algorithm>
#include <cmath>

#include "textseg/error.hpp"

namespace textseg {

void require_finite(const Tensor2& m, const char* code, const char* what) {
  if (!m.allFinite()) throw_numeric(code, std::string(what) + " contains a non-finite value");
}

void require_finite(const Vector& v, const char* code, const char* what) {
  if (!v.allFinite()) throw_numeric(code, std::string(what) + " contains a non-finite value");
}

}  // namespace textseg

namespace textseg::nn {

namespace {

Vector sigmoid(const Vector& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Vector tanh_v(const Vector& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

void shape_mismatch(const std::string& what, Index got, Index want) {
  throw_usage("ShapeMismatch", what + ": got " + std::to_string(got) + ", expected " + std::to_string(want));
}

void run_direction(const LstmCellParams& p, const Tensor2& xs, bool reverse, Tensor2& out, Index col,
                   std::vector<LstmStepCache>* caches) {
  const Index T = xs.rows();
  const Index h = p.hidden_size();
  Vector hs = Vector::Zero(h);
  Vector cs = Vector::Zero(h);
  if (caches) caches->assign(static_cast<std::size_t>(T), {});
  for (Index step = 0; step < T; ++step) {
    const Index t = reverse ? T - 1 - step : step;
    LstmStepCache* cache = caches ? &(*caches)[static_cast<std::size_t>(t)] : nullptr;
    auto next = lstm_cell_forward(p, xs.row(t).transpose(), hs, cs, cache);
    hs = std::move(next.h);
    cs = std::move(next.c);
    out.block(t, col, 1, h) = hs.transpose();
  }
}

void backprop_direction(const LstmCellParams& p, const std::vector<LstmStepCache>& caches,
                        const Tensor2& d_out, Index col, bool reverse, LstmCellParams& grad,
                        Tensor2& d_in) {
  const Index T = d_out.rows();
  const Index h = p.hidden_size();
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  Vector dx, dh_prev, dc_prev;
  // Visit timesteps in the reverse of the order the forward pass used.
  for (Index step = 0; step < T; ++step) {
    const Index t = reverse ? step : T - 1 - step;
    const Vector dh = d_out.block(t, col, 1, h).transpose() + dh_next;
    lstm_cell_backward(p, caches[static_cast<std::size_t>(t)], dh, dc_next, grad, dx, dh_prev, dc_prev);
    d_in.row(t) += dx.transpose();
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
}

template <typename Block, typename Cell>
void append_cell(Cell& p, const std::string& prefix, std::vector<Block>& out) {
  out.push_back({prefix + ".W", p.W.data(), p.W.rows(), p.W.cols()});
  out.push_back({prefix + ".U", p.U.data(), p.U.rows(), p.U.cols()});
  out.push_back({prefix + ".b", p.b.data(), p.b.size(), 1});
}

template <typename Block, typename BiLstm>
void append_bilstm(BiLstm& p, const std::string& prefix, std::vector<Block>& out) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    append_blocks(p.layers[l].forward, base + ".fwd", out);
    append_blocks(p.layers[l].backward, base + ".bwd", out);
  }
}

}  // namespace

LstmCellParams::LstmCellParams(Index input_size, Index hidden_size)
    : W(Tensor2::Zero(4 * hidden_size, input_size)),
      U(Tensor2::Zero(4 * hidden_size, hidden_size)),
      b(Vector::Zero(4 * hidden_size)) {}

LstmState lstm_cell_forward(const LstmCellParams& p, const Vector& x, const Vector& h_prev,
                            const Vector& c_prev, LstmStepCache* cache) {
  const Index h = p.hidden_size();
  if (x.size() != p.input_size()) shape_mismatch("LSTM input size", x.size(), p.input_size());
  if (h_prev.size() != h) shape_mismatch("LSTM hidden state size", h_prev.size(), h);
  if (c_prev.size() != h) shape_mismatch("LSTM cell state size", c_prev.size(), h);

  const Vector z = p.W * x + p.U * h_prev + p.b;
  Vector i = sigmoid(z.segment(0, h));
  Vector f = sigmoid(z.segment(h, h));
  Vector g = tanh_v(z.segment(2 * h, h));
  Vector o = sigmoid(z.segment(3 * h, h));
  LstmState next;
  next.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Vector tanh_c = tanh_v(next.c);
  next.h = o.cwiseProduct(tanh_c);
  if (!next.h.allFinite() || !next.c.allFinite()) {
    throw_numeric("NonFiniteActivation", "LSTM cell produced a non-finite state");
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

void lstm_cell_backward(const LstmCellParams& p, const LstmStepCache& c, const Vector& dh,
                        const Vector& dc, LstmCellParams& grad, Vector& dx, Vector& dh_prev,
                        Vector& dc_prev) {
  const Index h = p.hidden_size();
  const auto ones = Vector::Ones(h);
  const Vector d_o = dh.cwiseProduct(c.tanh_c);
  const Vector dc_total = dc + dh.cwiseProduct(c.o).cwiseProduct(ones - c.tanh_c.cwiseAbs2());

  Vector dz(4 * h);
  dz.segment(0, h) = dc_total.cwiseProduct(c.g).cwiseProduct(c.i.cwiseProduct(ones - c.i));
  dz.segment(h, h) = dc_total.cwiseProduct(c.c_prev).cwiseProduct(c.f.cwiseProduct(ones - c.f));
  dz.segment(2 * h, h) = dc_total.cwiseProduct(c.i).cwiseProduct(ones - c.g.cwiseAbs2());
  dz.segment(3 * h, h) = d_o.cwiseProduct(c.o.cwiseProduct(ones - c.o));

  grad.W.noalias() += dz * c.x.transpose();
  grad.U.noalias() += dz * c.h_prev.transpose();
  grad.b += dz;
  dx.noalias() = p.W.transpose() * dz;
  dh_prev.noalias() = p.U.transpose() * dz;
  dc_prev = dc_total.cwiseProduct(c.f);
}

BiLstmParams::BiLstmParams(Index input_size, Index hidden_size, std::size_t num_layers) {
  if (num_layers == 0) throw_usage("ShapeMismatch", "BiLSTM needs at least one layer");
  for (std::size_t l = 0; l < num_layers; ++l) {
    const Index in = l == 0 ? input_size : 2 * hidden_size;
    layers.push_back({LstmCellParams(in, hidden_size), LstmCellParams(in, hidden_size)});
  }
}

Tensor2 bilstm_forward(const BiLstmParams& p, const Tensor2& xs, BiLstmCache* cache) {
  if (xs.rows() < 1) throw_usage("ShapeMismatch", "BiLSTM input needs at least one timestep");
  if (xs.cols() != p.input_size()) shape_mismatch("BiLSTM input width", xs.cols(), p.input_size());
  if (cache) cache->layers.assign(p.layers.size(), {});
  Tensor2 input = xs;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    const Index h = layer.forward.hidden_size();
    Tensor2 out(input.rows(), 2 * h);
    auto* lc = cache ? &cache->layers[l] : nullptr;
    run_direction(layer.forward, input, false, out, 0, lc ? &lc->forward : nullptr);
    run_direction(layer.backward, input, true, out, h, lc ? &lc->backward : nullptr);
    if (lc) lc->input = std::move(input);
    input = std::move(out);
  }
  return input;
}

Tensor2 bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache, const Tensor2& d_out,
                        BiLstmParams& grad) {
  Tensor2 d = d_out;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const auto& layer = p.layers[l];
    const auto& lc = cache.layers[l];
    const Index h = layer.forward.hidden_size();
    Tensor2 d_in = Tensor2::Zero(lc.input.rows(), lc.input.cols());
    backprop_direction(layer.forward, lc.forward, d, 0, false, grad.layers[l].forward, d_in);
    backprop_direction(layer.backward, lc.backward, d, h, true, grad.layers[l].backward, d_in);
    d = std::move(d_in);
  }
  return d;
}

Vector max_pool_time(const Tensor2& m, std::vector<Index>* argmax) {
  if (m.rows() < 1) throw_usage("ShapeMismatch", "max pooling needs at least one row");
  Vector out = m.row(0).transpose();
  if (argmax) argmax->assign(static_cast<std::size_t>(m.cols()), 0);
  for (Index t = 1; t < m.rows(); ++t) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(t, j) > out[j]) {
        out[j] = m(t, j);
        if (argmax) (*argmax)[static_cast<std::size_t>(j)] = t;
      }
    }
  }
  return out;
}

Tensor2 max_pool_backward(const Vector& d_pooled, const std::vector<Index>& argmax, Index rows) {
  Tensor2 d = Tensor2::Zero(rows, d_pooled.size());
  for (Index j = 0; j < d_pooled.size(); ++j) d(argmax[static_cast<std::size_t>(j)], j) = d_pooled[j];
  return d;
}

Vector dense_forward(const Tensor2& W, const Vector& b, const Vector& x) {
  if (x.size() != W.cols()) shape_mismatch("dense input size", x.size(), W.cols());
  if (b.size() != W.rows()) shape_mismatch("dense bias size", b.size(), W.rows());
  return W * x + b;
}

Vector dense_backward(const Tensor2& W, const Vector& x, const Vector& dy, DenseParams& grad) {
  grad.W.noalias() += dy * x.transpose();
  grad.b += dy;
  return W.transpose() * dy;
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& v) {
  const double m = v.maxCoeff();
  const double e0 = std::exp(v[0] - m);
  const double e1 = std::exp(v[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

void append_blocks(LstmCellParams& p, const std::string& prefix, std::vector<ParamBlock>& out) {
  append_cell(p, prefix, out);
}
void append_blocks(const LstmCellParams& p, const std::string& prefix, std::vector<ConstParamBlock>& out) {
  append_cell(p, prefix, out);
}
void append_blocks(BiLstmParams& p, const std::string& prefix, std::vector<ParamBlock>& out) {
  append_bilstm(p, prefix, out);
}
void append_blocks(const BiLstmParams& p, const std::string& prefix, std::vector<ConstParamBlock>& out) {
  append_bilstm(p, prefix, out);
}
void append_blocks(DenseParams& p, const std::string& prefix, std::vector<ParamBlock>& out) {
  out.push_back({prefix + ".W", p.W.data(), p.W.rows(), p.W.cols()});
  out.push_back({prefix + ".b", p.b.data(), p.b.size(), 1});
}
void append_blocks(const DenseParams& p, const std::string& prefix, std::vector<ConstParamBlock>& out) {
  out.push_back({prefix + ".W", p.W.data(), p.W.rows(), p.W.cols()});
  out.push_back({prefix + ".b", p.b.data(), p.b.size(), 1});
}

void init_uniform(Tensor2& m, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-r, r);
  }
}

void init_lstm(LstmCellParams& p, Rng& rng) {
  init_uniform(p.W, rng);
  init_uniform(p.U, rng);
  const Index h = p.hidden_size();
  p.b.setZero();
  p.b.segment(h, h).setConstant(1.0);
}

double global_norm(std::span<const ConstParamBlock> grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.values()) sq += v * v;
  }
  return std::sqrt(sq);
}

double sgd_step(std::span<const ParamBlock> params, std::span<const ConstParamBlock> grads, double lr,
                std::optional<double> clip) {
  if (params.size() != grads.size()) {
    shape_mismatch("gradient block count", static_cast<Index>(grads.size()), static_cast<Index>(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].rows != grads[k].rows || params[k].cols != grads[k].cols) {
      throw_usage("ShapeMismatch", "gradient block '" + grads[k].name + "' does not match '" +
                                       params[k].name + "'");
    }
  }
  const double norm = global_norm(grads);
  double scale = lr;
  if (clip && norm > *clip) scale = lr * (*clip / norm);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].values();
    auto g = grads[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * g[i];
  }
  return norm;
}

GradCheckReport grad_check(const std::function<double()>& loss, std::span<const ParamBlock> params,
                           std::span<const ConstParamBlock> analytic, const GradCheckOptions& opts) {
  if (params.size() != analytic.size()) {
    shape_mismatch("gradient block count", static_cast<Index>(analytic.size()), static_cast<Index>(params.size()));
  }
  // Flat (block, index) coordinate list.
  std::vector<std::pair<std::size_t, Index>> coords;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Index i = 0; i < params[k].size(); ++i) coords.emplace_back(k, i);
  }
  if (opts.max_coords != 0 && opts.max_coords < coords.size()) {
    Rng rng(opts.seed);
    rng.shuffle(coords);
    coords.resize(opts.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  for (const auto& [k, i] : coords) {
    double& p = params[k].data[i];
    const double saved = p;
    p = saved + opts.eps;
    const double up = loss();
    p = saved - opts.eps;
    const double down = loss();
    p = saved;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double a = analytic[k].data[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.checked;
    if (rel > report.max_rel_error || report.checked == 1) {
      report.max_rel_error = rel;
      report.worst_block = params[k].name;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.max_rel_error < opts.tol;
  return report;
}

}  // namespace textseg::nn
