#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "sedenet/nn.hpp"
#include "sedenet/prng.hpp"
#include "sedenet/tensor.hpp"
#include "testutil.hpp"

using namespace sedenet;
using testutil::conv2d_reference;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

Tensor avgpool2x(const Tensor& x) {
  const size_t n = x.dim(0), c = x.dim(1), h = x.dim(2) / 2, w = x.dim(3) / 2;
  Tensor out({n, c, h, w});
  for (size_t i = 0; i < n; ++i)
    for (size_t ch = 0; ch < c; ++ch)
      for (size_t y = 0; y < h; ++y)
        for (size_t xx = 0; xx < w; ++xx) {
          out(i, ch, y, xx) = 0.25f * (x(i, ch, 2 * y, 2 * xx) + x(i, ch, 2 * y, 2 * xx + 1) +
                                       x(i, ch, 2 * y + 1, 2 * xx) + x(i, ch, 2 * y + 1, 2 * xx + 1));
        }
  return out;
}

}  // namespace

TEST_CASE("row-major flat indexing round-trips") {
  Tensor t({2, 3, 4, 5});
  size_t expect = 0;
  for (size_t n = 0; n < 2; ++n)
    for (size_t c = 0; c < 3; ++c)
      for (size_t h = 0; h < 4; ++h)
        for (size_t w = 0; w < 5; ++w) {
          CHECK(t.flat(n, c, h, w) == expect);
          CHECK(t.flat(n, c, h, w) == ((n * 3 + c) * 4 + h) * 5 + w);
          ++expect;
        }
  CHECK(expect == t.size());
}

TEST_CASE("tensor shape validation") {
  CHECK_THROWS_AS(Tensor({2, 0, 3}), std::invalid_argument);
  Tensor empty;
  CHECK(empty.empty());
}

TEST_CASE("prng determinism and shuffle") {
  Prng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());

  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8}, v2 = v1;
  Prng s1(5), s2(5);
  s1.shuffle(v1);
  s2.shuffle(v2);
  CHECK(v1 == v2);
}

TEST_CASE("conv2d identity with 1x1 kronecker weight") {
  Prng rng(1);
  const Tensor input = random_tensor({2, 3, 5, 4}, rng);
  Tensor weight({3, 3, 1, 1});
  for (size_t o = 0; o < 3; ++o) weight(o, o, size_t{0}, size_t{0}) = 1.0f;
  const Tensor out = conv2d(input, weight, {3, 3, 1, 1, 1, 0});
  CHECK(max_abs_diff(out, input) == 0.0f);
}

TEST_CASE("conv2d all-ones 3x3 on constant input sums the window") {
  Tensor input({1, 1, 5, 5}, 2.0f);
  Tensor weight({1, 1, 3, 3}, 1.0f);
  const Tensor out = conv2d(input, weight, {1, 1, 3, 3, 1, 0});
  CHECK(out.shape() == std::vector<size_t>{1, 1, 3, 3});
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(18.0f));
}

TEST_CASE("conv2d matches the 6-loop reference on random shapes") {
  Prng rng(2);
  const struct {
    size_t n, ci, co, h, w, k, stride, pad;
  } cases[] = {
      {1, 1, 1, 5, 5, 3, 1, 0}, {2, 3, 4, 6, 5, 3, 1, 1}, {1, 2, 3, 7, 7, 1, 1, 0},
      {2, 4, 2, 8, 6, 3, 2, 1}, {1, 3, 5, 9, 9, 5, 2, 2}, {2, 2, 2, 4, 4, 2, 1, 0},
  };
  for (const auto& c : cases) {
    const Conv2dSpec spec{c.ci, c.co, c.k, c.k, c.stride, c.pad};
    const Tensor input = random_tensor({c.n, c.ci, c.h, c.w}, rng);
    const Tensor weight = random_tensor({c.co, c.ci, c.k, c.k}, rng);
    const Tensor got = conv2d(input, weight, spec);
    const Tensor want = conv2d_reference(input, weight, spec);
    CHECK(max_abs_diff(got, want) <= 2e-5f);
  }
}

TEST_CASE("stride-2 output extent obeys the floor formula exhaustively") {
  for (size_t h = 1; h <= 9; ++h) {
    for (size_t w = 1; w <= 9; ++w) {
      const size_t pad = 1, k = 3;
      const size_t oh = (h + 2 * pad - k) / 2 + 1;
      const size_t ow = (w + 2 * pad - k) / 2 + 1;
      Tensor input({1, 1, h, w}, 1.0f);
      Tensor weight({1, 1, k, k}, 1.0f);
      const Tensor out = conv2d(input, weight, {1, 1, k, k, 2, pad});
      CHECK(out.dim(2) == oh);
      CHECK(out.dim(3) == ow);
    }
  }
}

TEST_CASE("conv2d rejects inconsistent shapes and empty outputs") {
  Tensor input({1, 2, 4, 4});
  Tensor weight({3, 2, 3, 3});
  CHECK_THROWS_AS(conv2d(input, weight, Conv2dSpec{99, 3, 3, 3, 1, 1}),
                  std::invalid_argument);
  Tensor small({1, 1, 2, 2});
  Tensor big_kernel({1, 1, 5, 5});
  CHECK_THROWS_AS(conv2d(small, big_kernel, Conv2dSpec{1, 1, 5, 5, 1, 0}),
                  std::invalid_argument);
}

TEST_CASE("conv2d_backward zero grad_out gives zero gradients, scalar chain rule") {
  Prng rng(3);
  const Tensor input = random_tensor({1, 2, 4, 4}, rng);
  const Tensor weight = random_tensor({2, 2, 3, 3}, rng);
  const Conv2dSpec spec{2, 2, 3, 3, 1, 1};
  const Tensor zero_go({1, 2, 4, 4});
  const Conv2dGrads g = conv2d_backward(input, weight, zero_go, spec);
  for (size_t i = 0; i < g.grad_input.size(); ++i) CHECK(g.grad_input[i] == 0.0f);
  for (size_t i = 0; i < g.grad_weight.size(); ++i) CHECK(g.grad_weight[i] == 0.0f);

  Tensor sin({1, 1, 1, 1});
  sin(size_t{0}, size_t{0}, size_t{0}, size_t{0}) = 3.0f;
  Tensor sw({1, 1, 1, 1});
  sw(size_t{0}, size_t{0}, size_t{0}, size_t{0}) = -2.0f;
  Tensor sgo({1, 1, 1, 1});
  sgo(size_t{0}, size_t{0}, size_t{0}, size_t{0}) = 0.5f;
  const Conv2dGrads sg = conv2d_backward(sin, sw, sgo, Conv2dSpec{1, 1, 1, 1, 1, 0});
  CHECK(sg.grad_weight[0] == doctest::Approx(1.5f));
  CHECK(sg.grad_input[0] == doctest::Approx(-1.0f));
}

TEST_CASE("conv2d_backward matches finite differences") {
  Prng rng(4);
  const Conv2dSpec spec{3, 2, 3, 3, 2, 1};
  const Tensor input = random_tensor({2, 3, 6, 5}, rng);
  const Tensor weight = random_tensor({2, 3, 3, 3}, rng, -0.5f, 0.5f);
  const Tensor out = conv2d(input, weight, spec);
  const Tensor coeffs = random_tensor(out.shape(), rng);

  Tensor grad_out(coeffs.shape());
  for (size_t i = 0; i < coeffs.size(); ++i) grad_out[i] = coeffs[i];
  const Conv2dGrads g = conv2d_backward(input, weight, grad_out, spec);

  const auto loss_wrt_input = [&](const Tensor& x) {
    return testutil::weighted_sum(conv2d(x, weight, spec), coeffs);
  };
  const auto loss_wrt_weight = [&](const Tensor& w) {
    return testutil::weighted_sum(conv2d(input, w, spec), coeffs);
  };
  CHECK(testutil::max_grad_rel_error(loss_wrt_input, input, g.grad_input, rng, 40) <= 1e-2);
  CHECK(testutil::max_grad_rel_error(loss_wrt_weight, weight, g.grad_weight, rng, 40) <= 1e-2);
}

TEST_CASE("batchnorm forward basics") {
  Prng rng(5);
  const size_t n = 4, c = 3, h = 5, w = 5;
  Tensor gamma({c}, 1.0f), beta({c}, 0.0f);
  Tensor rmean({c}, 0.0f), rvar({c}, 1.0f);

  // Already zero-mean unit-var data passes through nearly unchanged.
  Tensor input({n, c, h, w});
  for (size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0, sq = 0.0;
    std::vector<float> vals(n * h * w);
    for (auto& v : vals) {
      v = rng.uniform_float(-1.7f, 1.7f);
      sum += v;
    }
    const double mean = sum / vals.size();
    for (auto& v : vals) {
      v = static_cast<float>(v - mean);
      sq += static_cast<double>(v) * v;
    }
    const double std = std::sqrt(sq / vals.size());
    size_t i = 0;
    for (size_t b2 = 0; b2 < n; ++b2)
      for (size_t y = 0; y < h; ++y)
        for (size_t x = 0; x < w; ++x) input(b2, ch, y, x) = static_cast<float>(vals[i++] / std);
  }
  const Tensor out =
      batchnorm_forward(input, gamma, beta, rmean, rvar, BnMode::kTrain, 0.1f, 1e-5f, nullptr);
  CHECK(max_abs_diff(out, input) <= 1e-5f);

  // gamma=0, beta=5 pins the output at 5.
  Tensor gamma0({c}, 0.0f), beta5({c}, 5.0f);
  const Tensor out5 =
      batchnorm_forward(input, gamma0, beta5, rmean, rvar, BnMode::kTrain, 0.1f, 1e-5f, nullptr);
  for (size_t i = 0; i < out5.size(); ++i) CHECK(out5[i] == 5.0f);
}

TEST_CASE("batchnorm train-mode statistics") {
  Prng rng(6);
  const Tensor input = random_tensor({2, 3, 6, 6}, rng, -3.0f, 2.0f);
  Tensor gamma({3}, 1.0f), beta({3}, 0.0f), rmean({3}, 0.0f), rvar({3}, 1.0f);
  const Tensor out =
      batchnorm_forward(input, gamma, beta, rmean, rvar, BnMode::kTrain, 0.1f, 1e-5f, nullptr);
  const size_t per = 2 * 6 * 6;
  for (size_t ch = 0; ch < 3; ++ch) {
    double sum = 0.0, sq = 0.0;
    for (size_t i = 0; i < 2; ++i)
      for (size_t y = 0; y < 6; ++y)
        for (size_t x = 0; x < 6; ++x) {
          const double v = out(i, ch, y, x);
          sum += v;
          sq += v * v;
        }
    const double mean = sum / per;
    const double var = sq / per - mean * mean;
    CHECK(std::fabs(mean) <= 1e-5);
    CHECK(var >= 1.0 - 1e-3);
    CHECK(var <= 1.0 + 1e-3);
  }
}

TEST_CASE("batchnorm rejects bad arguments") {
  Tensor input({1, 2, 2, 2});
  Tensor gamma({2}), beta({2}), rmean({2}), rvar({2});
  CHECK_THROWS_AS(batchnorm_forward(input, gamma, beta, rmean, rvar, BnMode::kTrain, 0.1f,
                                    0.0f, nullptr),
                  std::invalid_argument);
  Tensor bad_gamma({3});
  CHECK_THROWS_AS(batchnorm_forward(input, bad_gamma, beta, rmean, rvar, BnMode::kTrain,
                                    0.1f, 1e-5f, nullptr),
                  std::invalid_argument);
}

TEST_CASE("batchnorm backward: definition checks and finite differences") {
  Prng rng(7);
  const Tensor input = random_tensor({2, 3, 4, 4}, rng);
  Tensor gamma = random_tensor({3}, rng, 0.5f, 1.5f);
  Tensor beta = random_tensor({3}, rng, -0.5f, 0.5f);

  const auto run_forward = [&](const Tensor& x, const Tensor& g, const Tensor& b,
                               BnCache* cache) {
    Tensor rm({3}, 0.0f), rv({3}, 1.0f);  // fresh stats keep the call pure
    return batchnorm_forward(x, g, b, rm, rv, BnMode::kTrain, 0.1f, 1e-5f, cache);
  };

  BnCache cache;
  const Tensor out = run_forward(input, gamma, beta, &cache);

  Tensor zero_go(out.shape());
  const BnGrads gz = batchnorm_backward(cache, zero_go);
  for (size_t i = 0; i < gz.grad_input.size(); ++i) CHECK(gz.grad_input[i] == 0.0f);

  const Tensor coeffs = random_tensor(out.shape(), rng);
  const BnGrads g = batchnorm_backward(cache, coeffs);

  // grad_beta is the plain per-channel sum of grad_out.
  for (size_t ch = 0; ch < 3; ++ch) {
    double sum = 0.0;
    for (size_t i = 0; i < 2; ++i)
      for (size_t y = 0; y < 4; ++y)
        for (size_t x = 0; x < 4; ++x) sum += coeffs(i, ch, y, x);
    CHECK(g.grad_beta[ch] == doctest::Approx(sum).epsilon(1e-4));
  }

  const auto loss_wrt_input = [&](const Tensor& x) {
    return testutil::weighted_sum(run_forward(x, gamma, beta, nullptr), coeffs);
  };
  const auto loss_wrt_gamma = [&](const Tensor& gm) {
    return testutil::weighted_sum(run_forward(input, gm, beta, nullptr), coeffs);
  };
  const auto loss_wrt_beta = [&](const Tensor& bt) {
    return testutil::weighted_sum(run_forward(input, gamma, bt, nullptr), coeffs);
  };
  // A wider step keeps f32 forward noise out of the quotient; the loss is
  // nearly affine in each argument so truncation stays negligible.
  CHECK(testutil::max_grad_rel_error(loss_wrt_input, input, g.grad_input, rng, 40, 1e-2f) <= 1e-2);
  CHECK(testutil::max_grad_rel_error(loss_wrt_gamma, gamma, g.grad_gamma, rng, 3, 1e-2f) <= 1e-2);
  CHECK(testutil::max_grad_rel_error(loss_wrt_beta, beta, g.grad_beta, rng, 3, 1e-2f) <= 1e-2);

  CHECK_THROWS_AS(batchnorm_backward(BnCache{}, coeffs), std::invalid_argument);
}

TEST_CASE("relu and its gradient") {
  Tensor x({3});
  x[0] = -1.0f;
  x[1] = 0.0f;
  x[2] = 2.0f;
  const Tensor y = relu(x);
  CHECK(y[0] == 0.0f);
  CHECK(y[1] == 0.0f);
  CHECK(y[2] == 2.0f);

  Tensor go({3}, 1.0f);
  const Tensor gx = relu_backward(x, go);
  CHECK(gx[0] == 0.0f);
  CHECK(gx[1] == 0.0f);  // the tie at exactly zero passes nothing
  CHECK(gx[2] == 1.0f);

  Prng rng(8);
  const Tensor r = random_tensor({2, 3, 4, 4}, rng);
  Tensor neg(r.shape());
  for (size_t i = 0; i < r.size(); ++i) neg[i] = -r[i];
  const Tensor a = relu(r), b = relu(neg);
  for (size_t i = 0; i < r.size(); ++i) CHECK(a[i] + b[i] == doctest::Approx(std::fabs(r[i])));
}

TEST_CASE("upsample2x forward, backward, and avgpool composition") {
  Tensor x({1, 1, 2, 2});
  x(size_t{0}, size_t{0}, size_t{0}, size_t{0}) = 1.0f;
  x(size_t{0}, size_t{0}, size_t{0}, size_t{1}) = 2.0f;
  x(size_t{0}, size_t{0}, size_t{1}, size_t{0}) = 3.0f;
  x(size_t{0}, size_t{0}, size_t{1}, size_t{1}) = 4.0f;
  const Tensor up = upsample2x(x);
  CHECK(up.shape() == std::vector<size_t>{1, 1, 4, 4});
  const float want[4][4] = {{1, 1, 2, 2}, {1, 1, 2, 2}, {3, 3, 4, 4}, {3, 3, 4, 4}};
  for (size_t y = 0; y < 4; ++y)
    for (size_t xx = 0; xx < 4; ++xx) CHECK(up(size_t{0}, size_t{0}, y, xx) == want[y][xx]);

  const Tensor ones({1, 1, 4, 4}, 1.0f);
  const Tensor g = upsample2x_backward(ones);
  for (size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 4.0f);

  Prng rng(9);
  const Tensor r = random_tensor({2, 3, 5, 6}, rng);
  CHECK(max_abs_diff(avgpool2x(upsample2x(r)), r) == 0.0f);
}

TEST_CASE("finiteness guard") {
  Tensor t({4}, 1.0f);
  CHECK(all_finite(t));
  t[2] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(all_finite(t));
  CHECK_THROWS_AS(require_finite(t, "test tensor"), std::runtime_error);
}
