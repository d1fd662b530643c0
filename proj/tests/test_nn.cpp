#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "textseg/error.hpp"
#include "textseg/nn.hpp"

using namespace textseg;
using namespace textseg::nn;

namespace {

void randomize(LstmCellParams& p, Rng& rng, double scale = 0.5) {
  p.W = testutil::random_matrix(p.W.rows(), p.W.cols(), rng, scale);
  p.U = testutil::random_matrix(p.U.rows(), p.U.cols(), rng, scale);
  p.b = testutil::random_vector(p.b.size(), rng, scale);
}

void randomize(BiLstmParams& p, Rng& rng) {
  for (auto& l : p.layers) {
    randomize(l.forward, rng);
    randomize(l.backward, rng);
  }
}

}  // namespace

TEST_CASE("lstm cell with zero parameters stays at zero") {
  LstmCellParams p(3, 2);
  Rng rng(1);
  const auto s = lstm_cell_forward(p, testutil::random_vector(3, rng), Vector::Zero(2), Vector::Zero(2));
  CHECK(s.h.isZero(0.0));
  CHECK(s.c.isZero(0.0));
}

TEST_CASE("scalar lstm cell with zero weights halves the carried cell state") {
  LstmCellParams p(2, 1);
  Vector c_prev(1);
  c_prev << 1.0;
  for (double x0 : {-3.0, 0.0, 7.5}) {
    Vector x(2);
    x << x0, 1.0;
    const auto s = lstm_cell_forward(p, x, Vector::Zero(1), c_prev);
    CHECK(s.c[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.h[0] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
    CHECK(s.h[0] == doctest::Approx(0.231059).epsilon(1e-6));
  }
}

TEST_CASE("lstm cell rejects mismatched shapes") {
  LstmCellParams p(3, 2);
  CHECK_THROWS_AS(lstm_cell_forward(p, Vector::Zero(4), Vector::Zero(2), Vector::Zero(2)), Error);
  CHECK_THROWS_AS(lstm_cell_forward(p, Vector::Zero(3), Vector::Zero(1), Vector::Zero(2)), Error);
}

TEST_CASE("lstm cell gradients match central differences") {
  Rng rng(7);
  LstmCellParams p(3, 2);
  randomize(p, rng);
  const Vector x = testutil::random_vector(3, rng);
  const Vector h0 = testutil::random_vector(2, rng);
  const Vector c0 = testutil::random_vector(2, rng);
  const Vector wh = testutil::random_vector(2, rng);
  const Vector wc = testutil::random_vector(2, rng);
  auto loss = [&] {
    const auto s = lstm_cell_forward(p, x, h0, c0);
    return wh.dot(s.h) + wc.dot(s.c);
  };

  LstmStepCache cache;
  lstm_cell_forward(p, x, h0, c0, &cache);
  LstmCellParams grad(3, 2);
  Vector dx, dh_prev, dc_prev;
  lstm_cell_backward(p, cache, wh, wc, grad, dx, dh_prev, dc_prev);

  std::vector<ParamBlock> params;
  append_blocks(p, "cell", params);
  std::vector<ConstParamBlock> grads;
  append_blocks(std::as_const(grad), "cell", grads);
  const auto report = grad_check(loss, params, grads, {.eps = 1e-5, .tol = 1e-4});
  INFO(report.worst_block << "[" << report.worst_index << "] rel " << report.max_rel_error);
  CHECK(report.passed);
  CHECK(report.checked == static_cast<std::size_t>(4 * 2 * 3 + 4 * 2 * 2 + 4 * 2));

  // Input and state gradients.
  Vector xv = x, hv = h0, cv = c0;
  auto loss_with = [&](const Vector& xx, const Vector& hh, const Vector& cc) {
    const auto s = lstm_cell_forward(p, xx, hh, cc);
    return wh.dot(s.h) + wc.dot(s.c);
  };
  for (Index i = 0; i < 3; ++i) {
    Vector up = xv, down = xv;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    CHECK(dx[i] == doctest::Approx((loss_with(up, hv, cv) - loss_with(down, hv, cv)) / 2e-5).epsilon(1e-6));
  }
  for (Index i = 0; i < 2; ++i) {
    Vector up = hv, down = hv;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    CHECK(dh_prev[i] == doctest::Approx((loss_with(xv, up, cv) - loss_with(xv, down, cv)) / 2e-5).epsilon(1e-6));
    Vector cu = cv, cd = cv;
    cu[i] += 1e-5;
    cd[i] -= 1e-5;
    CHECK(dc_prev[i] == doctest::Approx((loss_with(xv, hv, cu) - loss_with(xv, hv, cd)) / 2e-5).epsilon(1e-6));
  }
}

TEST_CASE("bilstm with one timestep concatenates two independent cells") {
  Rng rng(3);
  BiLstmParams p(4, 3, 1);
  randomize(p, rng);
  const Tensor2 xs = testutil::random_matrix(1, 4, rng);
  const Tensor2 out = bilstm_forward(p, xs);
  REQUIRE(out.rows() == 1);
  REQUIRE(out.cols() == 6);
  const Vector x = xs.row(0).transpose();
  const auto f = lstm_cell_forward(p.layers[0].forward, x, Vector::Zero(3), Vector::Zero(3));
  const auto b = lstm_cell_forward(p.layers[0].backward, x, Vector::Zero(3), Vector::Zero(3));
  CHECK((out.block(0, 0, 1, 3).transpose() - f.h).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.block(0, 3, 1, 3).transpose() - b.h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bilstm with zero parameters outputs zeros") {
  Rng rng(4);
  BiLstmParams p(5, 3);
  const Tensor2 out = bilstm_forward(p, testutil::random_matrix(6, 5, rng, 10.0));
  CHECK(out.rows() == 6);
  CHECK(out.cols() == 6);
  CHECK(out.isZero(0.0));
}

TEST_CASE("reversing the input swaps direction blocks when both directions share weights") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    BiLstmParams p(3, 2, 1);
    randomize(p.layers[0].forward, rng);
    p.layers[0].backward = p.layers[0].forward;
    const Tensor2 xs = testutil::random_matrix(3, 3, rng);
    const Tensor2 reversed = xs.colwise().reverse();
    const Tensor2 a = bilstm_forward(p, xs);
    const Tensor2 b = bilstm_forward(p, reversed);
    for (Index t = 0; t < 3; ++t) {
      CHECK((a.block(t, 0, 1, 2) - b.block(2 - t, 2, 1, 2)).cwiseAbs().maxCoeff() < 1e-15);
      CHECK((a.block(t, 2, 1, 2) - b.block(2 - t, 0, 1, 2)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("bilstm rejects empty sequences and wrong widths") {
  BiLstmParams p(3, 2);
  CHECK_THROWS_AS(bilstm_forward(p, Tensor2(0, 3)), Error);
  CHECK_THROWS_AS(bilstm_forward(p, Tensor2::Zero(2, 4)), Error);
}

TEST_CASE("two-layer bilstm gradients match central differences for T up to 4") {
  for (Index T = 1; T <= 4; ++T) {
    CAPTURE(T);
    Rng rng(100 + static_cast<std::uint64_t>(T));
    BiLstmParams p(3, 2, 2);
    randomize(p, rng);
    Tensor2 xs = testutil::random_matrix(T, 3, rng);
    const Tensor2 weights = testutil::random_matrix(T, 4, rng);
    auto loss = [&] { return bilstm_forward(p, xs).cwiseProduct(weights).sum(); };

    BiLstmCache cache;
    bilstm_forward(p, xs, &cache);
    BiLstmParams grad(3, 2, 2);
    const Tensor2 dx = bilstm_backward(p, cache, weights, grad);

    std::vector<ParamBlock> params;
    append_blocks(p, "bilstm", params);
    std::vector<ConstParamBlock> grads;
    append_blocks(std::as_const(grad), "bilstm", grads);
    const auto report = grad_check(loss, params, grads);
    INFO(report.worst_block << "[" << report.worst_index << "] rel " << report.max_rel_error);
    CHECK(report.passed);

    std::vector<ParamBlock> inputs{{"x", xs.data(), xs.rows(), xs.cols()}};
    std::vector<ConstParamBlock> input_grads{{"x", dx.data(), dx.rows(), dx.cols()}};
    CHECK(grad_check(loss, inputs, input_grads).passed);
  }
}

TEST_CASE("max pooling over time") {
  Tensor2 m(2, 2);
  m << 1, 5, 3, 2;
  std::vector<Index> argmax;
  const Vector pooled = max_pool_time(m, &argmax);
  CHECK(pooled[0] == 3.0);
  CHECK(pooled[1] == 5.0);
  CHECK(argmax == std::vector<Index>{1, 0});

  Tensor2 single(1, 3);
  single << -1, 0, 2;
  CHECK(max_pool_time(single) == Vector(single.row(0).transpose()));

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor2 x = testutil::random_matrix(5, 4, rng);
    const Vector p = max_pool_time(x);
    for (Index t = 0; t < 5; ++t) CHECK((p - x.row(t).transpose()).minCoeff() >= 0.0);
    Tensor2 permuted = x;
    for (Index t = 4; t > 0; --t) permuted.row(t).swap(permuted.row(static_cast<Index>(rng.uniform_int(0, t))));
    CHECK(max_pool_time(permuted) == p);
  }
}

TEST_CASE("max pooling routes gradient to the argmax rows") {
  Tensor2 m(3, 2);
  m << 1, 9, 4, 2, 4, 3;
  std::vector<Index> argmax;
  max_pool_time(m, &argmax);
  Vector d(2);
  d << 0.5, -2.0;
  const Tensor2 g = max_pool_backward(d, argmax, 3);
  Tensor2 expected = Tensor2::Zero(3, 2);
  expected(1, 0) = 0.5;  // first of the tied maxima
  expected(0, 1) = -2.0;
  CHECK(g == expected);
}

TEST_CASE("dense layer") {
  Tensor2 I = Tensor2::Identity(2, 2);
  Vector b = Vector::Zero(2);
  Vector x(2);
  x << 0.3, -1.7;
  CHECK(dense_forward(I, b, x) == x);

  Rng rng(5);
  const Tensor2 W = testutil::random_matrix(2, 6, rng);
  const Vector bias = testutil::random_vector(2, rng);
  CHECK(dense_forward(W, bias, Vector::Zero(6)) == bias);
  CHECK_THROWS_AS(dense_forward(W, bias, Vector::Zero(5)), Error);
}

TEST_CASE("dense gradients match central differences within 1e-6") {
  Rng rng(21);
  DenseParams p(6, 2);
  p.W = testutil::random_matrix(2, 6, rng);
  p.b = testutil::random_vector(2, rng);
  const Vector x = testutil::random_vector(6, rng);
  const Vector w = testutil::random_vector(2, rng);
  auto loss = [&] {
    const Vector y = dense_forward(p.W, p.b, x);
    return w.dot(y) + 0.5 * y.squaredNorm();
  };
  DenseParams grad(6, 2);
  const Vector y = dense_forward(p.W, p.b, x);
  dense_backward(p.W, x, w + y, grad);
  std::vector<ParamBlock> params;
  append_blocks(p, "dense", params);
  std::vector<ConstParamBlock> grads;
  append_blocks(std::as_const(grad), "dense", grads);
  const auto report = grad_check(loss, params, grads, {.eps = 1e-5, .tol = 1e-6});
  INFO(report.max_rel_error);
  CHECK(report.passed);
}

TEST_CASE("softmax2") {
  const auto half = softmax2({0.0, 0.0});
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);
  const auto thirds = softmax2({std::log(2.0), 0.0});
  CHECK(thirds[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(thirds[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector2d v(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const double c = rng.uniform(-100, 100);
    const auto p = softmax2(v);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() > 0.0);
    const auto shifted = softmax2(v + Eigen::Vector2d(c, c));
    CHECK((shifted - p).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Large logits do not overflow.
  const auto big = softmax2({1000.0, 999.0});
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("sgd step") {
  double p = 1.0;
  const double g = 2.0;
  std::vector<ParamBlock> params{{"p", &p, 1, 1}};
  std::vector<ConstParamBlock> grads{{"p", &g, 1, 1}};
  sgd_step(params, grads, 0.0);
  CHECK(p == 1.0);
  sgd_step(params, grads, 0.1);
  CHECK(p == doctest::Approx(0.8).epsilon(1e-15));

  // Global norm 10 clipped to 1 scales every component by 1/10.
  double q[2] = {1.0, 1.0};
  const double gq[2] = {6.0, 8.0};
  std::vector<ParamBlock> qp{{"q", q, 2, 1}};
  std::vector<ConstParamBlock> qg{{"q", gq, 2, 1}};
  const double norm = sgd_step(qp, qg, 0.5, 1.0);
  CHECK(norm == doctest::Approx(10.0));
  CHECK(q[0] == doctest::Approx(1.0 - 0.5 * 0.6));
  CHECK(q[1] == doctest::Approx(1.0 - 0.5 * 0.8));

  // Clip above the norm leaves the step unchanged.
  double r = 0.0;
  const double gr = 3.0;
  std::vector<ParamBlock> rp{{"r", &r, 1, 1}};
  std::vector<ConstParamBlock> rg{{"r", &gr, 1, 1}};
  sgd_step(rp, rg, 1.0, 5.0);
  CHECK(r == -3.0);
}

TEST_CASE("sgd step rejects incongruent gradients") {
  double p[2] = {0, 0};
  const double g[3] = {1, 1, 1};
  std::vector<ParamBlock> params{{"p", p, 2, 1}};
  std::vector<ConstParamBlock> grads{{"p", g, 3, 1}};
  CHECK_THROWS_AS(sgd_step(params, grads, 0.1), Error);
  std::vector<ConstParamBlock> none;
  CHECK_THROWS_AS(sgd_step(params, none, 0.1), Error);
}

TEST_CASE("sgd strictly decreases a convex quadratic until the gradient vanishes") {
  Rng rng(2);
  Vector p = testutil::random_vector(5, rng, 3.0);
  const Vector target = testutil::random_vector(5, rng);
  const Vector curvature = (testutil::random_vector(5, rng).array().abs() + 0.5).matrix();
  auto f = [&] { return 0.5 * (p - target).cwiseAbs2().cwiseProduct(curvature).sum(); };
  double prev = f();
  for (int step = 0; step < 200; ++step) {
    const Vector g = (p - target).cwiseProduct(curvature);
    if (g.norm() == 0.0) break;
    std::vector<ParamBlock> params{{"p", p.data(), 5, 1}};
    std::vector<ConstParamBlock> grads{{"g", g.data(), 5, 1}};
    sgd_step(params, grads, 0.3);
    const double now = f();
    if (prev > 1e-20) {
      CHECK(now < prev);
    } else {
      CHECK(now <= prev);
    }
    prev = now;
  }
  CHECK(prev < 1e-20);
}

TEST_CASE("gradient checker on closed forms") {
  double p = 3.0;
  const double analytic = 6.0;
  std::vector<ParamBlock> params{{"p", &p, 1, 1}};
  std::vector<ConstParamBlock> grads{{"p", &analytic, 1, 1}};
  const auto report = grad_check([&] { return p * p; }, params, grads, {.eps = 1e-5, .tol = 1e-9});
  CHECK(report.passed);
  CHECK(report.worst_numeric == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(p == 3.0);

  const double zero = 0.0;
  std::vector<ConstParamBlock> zero_grads{{"p", &zero, 1, 1}};
  const auto constant = grad_check([] { return 4.0; }, params, zero_grads);
  CHECK(constant.passed);
  CHECK(constant.worst_numeric == 0.0);
  CHECK(constant.max_rel_error == 0.0);

  // A wrong analytic gradient is caught.
  const double wrong = 5.0;
  std::vector<ConstParamBlock> wrong_grads{{"p", &wrong, 1, 1}};
  CHECK_FALSE(grad_check([&] { return p * p; }, params, wrong_grads).passed);
}

TEST_CASE("gradient checker samples the requested number of coordinates") {
  std::vector<double> p(50, 1.0);
  std::vector<double> g(50, 2.0);
  std::vector<ParamBlock> params{{"p", p.data(), 50, 1}};
  std::vector<ConstParamBlock> grads{{"g", g.data(), 50, 1}};
  auto f = [&] {
    double s = 0;
    for (double v : p) s += v * v;
    return s;
  };
  const auto report = grad_check(f, params, grads, {.max_coords = 7});
  CHECK(report.checked == 7);
  CHECK(report.passed);
}

TEST_CASE("forward passes are bit-identical across calls") {
  Rng rng(33);
  BiLstmParams p(4, 3);
  randomize(p, rng);
  const Tensor2 xs = testutil::random_matrix(7, 4, rng);
  const Tensor2 a = bilstm_forward(p, xs);
  const Tensor2 b = bilstm_forward(p, xs);
  CHECK(a == b);
}

TEST_CASE("initialization radius and forget-gate bias") {
  Rng rng(1);
  LstmCellParams p(4, 3);
  init_lstm(p, rng);
  const double rw = std::sqrt(6.0 / (12 + 4));
  const double ru = std::sqrt(6.0 / (12 + 3));
  CHECK(p.W.cwiseAbs().maxCoeff() < rw);
  CHECK(p.U.cwiseAbs().maxCoeff() < ru);
  CHECK(p.b.segment(0, 3).isZero(0.0));
  CHECK(p.b.segment(3, 3).isOnes(0.0));
  CHECK(p.b.segment(6, 6).isZero(0.0));
}
