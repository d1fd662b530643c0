#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "textseg/rng.hpp"
#include "textseg/tensor.hpp"

namespace textseg::nn {

/// Forget-gate LSTM without peepholes. Gate rows are stacked in the order
/// [input, forget, cell, output], each block `hidden` rows tall.
struct LstmCellParams {
  Tensor2 W;  // 4h x d
  Tensor2 U;  // 4h x h
  Vector b;   // 4h

  LstmCellParams() = default;
  LstmCellParams(Index input_size, Index hidden_size);

  Index input_size() const { return W.cols(); }
  Index hidden_size() const { return U.cols(); }

  bool operator==(const LstmCellParams& o) const { return W == o.W && U == o.U && b == o.b; }
};

struct LstmState {
  Vector h;
  Vector c;
};

/// Values saved by a forward step for the backward pass.
struct LstmStepCache {
  Vector x, h_prev, c_prev;
  Vector i, f, g, o;
  Vector tanh_c;
};

LstmState lstm_cell_forward(const LstmCellParams& p, const Vector& x, const Vector& h_prev,
                            const Vector& c_prev, LstmStepCache* cache = nullptr);

/// Accumulates parameter gradients into `grad` and writes input/state
/// gradients. `dh` and `dc` are the loss gradients w.r.t. this step's outputs.
void lstm_cell_backward(const LstmCellParams& p, const LstmStepCache& cache, const Vector& dh,
                        const Vector& dc, LstmCellParams& grad, Vector& dx, Vector& dh_prev,
                        Vector& dc_prev);

struct BiLstmLayer {
  LstmCellParams forward;
  LstmCellParams backward;

  bool operator==(const BiLstmLayer&) const = default;
};

/// Stacked bidirectional LSTM. Layer l > 0 consumes the 2h-wide
/// concatenated output of layer l - 1.
struct BiLstmParams {
  std::vector<BiLstmLayer> layers;

  BiLstmParams() = default;
  BiLstmParams(Index input_size, Index hidden_size, std::size_t num_layers = 2);

  Index input_size() const { return layers.front().forward.input_size(); }
  Index hidden_size() const { return layers.front().forward.hidden_size(); }
  Index output_size() const { return 2 * hidden_size(); }

  bool operator==(const BiLstmParams&) const = default;
};

struct BiLstmCache {
  struct Layer {
    Tensor2 input;
    std::vector<LstmStepCache> forward;
    std::vector<LstmStepCache> backward;
  };
  std::vector<Layer> layers;
};

/// T x d input to T x 2h output; row t is [forward h_t, backward h_t].
/// Both directions start from zero states.
Tensor2 bilstm_forward(const BiLstmParams& p, const Tensor2& xs, BiLstmCache* cache = nullptr);

/// Returns the gradient w.r.t. the T x d input and accumulates into `grad`.
Tensor2 bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache, const Tensor2& d_out,
                        BiLstmParams& grad);

/// Componentwise maximum over rows. `argmax`, when given, receives the first
/// row index attaining each maximum.
Vector max_pool_time(const Tensor2& m, std::vector<Index>* argmax = nullptr);

/// Scatters `d_pooled` back to the argmax rows of a T x q input.
Tensor2 max_pool_backward(const Vector& d_pooled, const std::vector<Index>& argmax, Index rows);

struct DenseParams {
  Tensor2 W;  // out x in
  Vector b;   // out

  DenseParams() = default;
  DenseParams(Index in, Index out) : W(Tensor2::Zero(out, in)), b(Vector::Zero(out)) {}

  bool operator==(const DenseParams& o) const { return W == o.W && b == o.b; }
};

Vector dense_forward(const Tensor2& W, const Vector& b, const Vector& x);

/// Accumulates dW += dy x^T, db += dy; returns dx = W^T dy.
Vector dense_backward(const Tensor2& W, const Vector& x, const Vector& dy, DenseParams& grad);

/// Two-way softmax with max subtraction.
Eigen::Vector2d softmax2(const Eigen::Vector2d& v);

/// Named view of one parameter array.
template <typename T>
struct BasicParamBlock {
  std::string name;
  T* data;
  Index rows;
  Index cols;

  Index size() const { return rows * cols; }
  std::span<T> values() const { return {data, static_cast<std::size_t>(size())}; }
};

using ParamBlock = BasicParamBlock<double>;
using ConstParamBlock = BasicParamBlock<const double>;

void append_blocks(LstmCellParams& p, const std::string& prefix, std::vector<ParamBlock>& out);
void append_blocks(const LstmCellParams& p, const std::string& prefix, std::vector<ConstParamBlock>& out);
void append_blocks(BiLstmParams& p, const std::string& prefix, std::vector<ParamBlock>& out);
void append_blocks(const BiLstmParams& p, const std::string& prefix, std::vector<ConstParamBlock>& out);
void append_blocks(DenseParams& p, const std::string& prefix, std::vector<ParamBlock>& out);
void append_blocks(const DenseParams& p, const std::string& prefix, std::vector<ConstParamBlock>& out);

/// Uniform(-r, r) with r = sqrt(6 / (rows + cols)), drawn row-major.
void init_uniform(Tensor2& m, Rng& rng);

/// Weight init for every matrix; biases zero except the forget gate (1.0).
void init_lstm(LstmCellParams& p, Rng& rng);

double global_norm(std::span<const ConstParamBlock> grads);

/// p <- p - lr * g, after rescaling g to global L2 norm `clip` when it is
/// larger. Returns the pre-clipping norm. Throws ShapeMismatch when the
/// block lists are not congruent.
double sgd_step(std::span<const ParamBlock> params, std::span<const ConstParamBlock> grads, double lr,
                std::optional<double> clip = std::nullopt);

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  /// 0 checks every coordinate; otherwise a seeded uniform sample.
  std::size_t max_coords = 0;
  std::uint64_t seed = 13;
  /// Denominator floor for the relative error.
  double floor = 1e-8;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_block;
  Index worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

/// Compares `analytic` against central differences of `loss`, perturbing
/// `params` in place (restored afterwards). Relative error is
/// |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const std::function<double()>& loss, std::span<const ParamBlock> params,
                           std::span<const ConstParamBlock> analytic, const GradCheckOptions& opts = {});

}  // namespace textseg::nn
