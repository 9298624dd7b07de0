// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "trimlp/layers.hpp"

using namespace trimlp;
using testing::random_tensor;

namespace {

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("embed returns zero rows at pad positions") {
  std::mt19937_64 rng(1);
  const auto table = random_tensor(Shape{4, 3}, rng);
  const std::vector<ItemId> ids{0, 0, 3};
  const auto x = embed<double>(ids, table);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(x(0, c) == 0.0);
    CHECK(x(1, c) == 0.0);
    CHECK(x(2, c) == table(3, c));
  }
  const std::vector<ItemId> pads(5, 0);
  const auto z = embed<double>(pads, table);
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("embed rejects ids beyond the vocabulary") {
  const Tensor<double> table(Shape{4, 2});
  const std::vector<ItemId> ids{1, 4};
  CHECK_THROWS_AS(embed<double>(ids, table), VocabularyError);
  const std::vector<ItemId> neg{-1};
  CHECK_THROWS_AS(embed<double>(neg, table), VocabularyError);
}

TEST_CASE("embed gradient of sum(output): pad row zero, used row ones") {
  std::mt19937_64 rng(2);
  auto table = random_tensor(Shape{4, 3}, rng);
  const std::vector<ItemId> ids{0, 0, 3};
  const Tensor<double> ones(Shape{3, 3}, 1.0);
  Tensor<double> grad(table.shape());
  embed_backward<double>(ids, ones, grad);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(grad(0, c) == 0.0);
    CHECK(grad(3, c) == 1.0);
  }
  auto loss = [&] {
    const auto x = embed<double>(ids, table);
    double s = 0.0;
    for (double v : x.values()) s += v;
    return s;
  };
  const GradCheckEntry entries[] = {{"table", &table, &grad}};
  CHECK(gradient_check(loss, entries).max_rel_error < 1e-9);
}

TEST_CASE("layer norm of a constant vector is near zero") {
  const Tensor<double> x(Shape{1, 4}, 5.0);
  const LayerNormParams<double> p{Tensor<double>(Shape{4}, 1.0), Tensor<double>(Shape{4})};
  const auto y = layer_norm(x, p, 1e-5);
  for (double v : y.values()) CHECK(std::abs(v) < 1e-2);
}

TEST_CASE("layer norm of [1, -1] matches hand evaluation") {
  const Tensor<double> x(Shape{1, 2}, {1.0, -1.0});
  const LayerNormParams<double> p{Tensor<double>(Shape{2}, 1.0), Tensor<double>(Shape{2})};
  const auto y = layer_norm(x, p, 1e-5);
  CHECK(y[0] == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-12));
  CHECK(y[0] == doctest::Approx(0.999995).epsilon(1e-6));
  CHECK(y[1] == doctest::Approx(-0.999995).epsilon(1e-6));
}

TEST_CASE("layer norm with zero scale broadcasts the bias") {
  std::mt19937_64 rng(3);
  const auto x = random_tensor(Shape{3, 4}, rng);
  const Tensor<double> b(Shape{4}, {1, 2, 3, 4});
  const auto y = layer_norm(x, LayerNormParams<double>{Tensor<double>(Shape{4}), b}, 1e-5);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(y(r, c) == b[c]);
}

TEST_CASE("layer norm property: zero mean, unit population std") {
  std::mt19937_64 rng(4);
  const LayerNormParams<double> p{Tensor<double>(Shape{16}, 1.0), Tensor<double>(Shape{16})};
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor(Shape{2, 16}, rng, -10, 10);
    const auto y = layer_norm(x, p, 1e-5);
    for (std::size_t r = 0; r < 2; ++r) {
      double mean = 0.0, var = 0.0;
      for (double v : y.row(r)) mean += v;
      mean /= 16;
      for (double v : y.row(r)) var += (v - mean) * (v - mean);
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(std::sqrt(var / 16) - 1.0) < 1e-3);
    }
  }
}

TEST_CASE("layer norm matches the oracle and passes a gradient check") {
  std::mt19937_64 rng(5);
  auto x = random_tensor(Shape{3, 5}, rng);
  LayerNormParams<double> p{random_tensor(Shape{5}, rng), random_tensor(Shape{5}, rng)};
  const auto y = layer_norm(x, p, 1e-5);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto want = oracle::layer_norm_row(
        {x.row(r).begin(), x.row(r).end()},
        {p.alpha.values().begin(), p.alpha.values().end()},
        {p.beta.values().begin(), p.beta.values().end()}, 1e-5);
    for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(y(r, c) - want[c]) < 1e-12);
  }
  const auto w = random_tensor(Shape{3, 5}, rng);
  LayerNormCache<double> cache;
  (void)layer_norm(x, p, 1e-5, &cache);
  LayerNormParams<double> g{Tensor<double>(Shape{5}), Tensor<double>(Shape{5})};
  const auto dx = layer_norm_backward(w, p, cache, g);
  auto loss = [&] { return dot(layer_norm(x, p, 1e-5), w); };
  const GradCheckEntry entries[] = {
      {"x", &x, &dx}, {"alpha", &p.alpha, &g.alpha}, {"beta", &p.beta, &g.beta}};
  CHECK(gradient_check(loss, entries).max_rel_error < 1e-4);
}

TEST_CASE("gelu reference values") {
  CHECK(gelu(0.0) == 0.0);
  // 1 * Phi(1), Phi from the complementary error function.
  CHECK(gelu(1.0) == doctest::Approx(0.5 * std::erfc(-1.0 / std::sqrt(2.0))).epsilon(1e-12));
  CHECK(gelu(1.0) == doctest::Approx(0.841345).epsilon(1e-6));
  CHECK(std::abs(gelu(-10.0)) < 1e-8);
  CHECK(std::abs(gelu(-10.0f)) < 1e-8f);
}

TEST_CASE("gelu is monotone on a grid above its minimum") {
  double prev = gelu(-0.75);
  for (double x = -0.74; x <= 10.0; x += 0.01) {
    const double y = gelu(x);
    CHECK(y >= prev);
    prev = y;
  }
}

TEST_CASE("dropout: rate zero and eval mode are bitwise identities") {
  std::mt19937_64 rng(6);
  const auto x = random_tensor(Shape{4, 4}, rng);
  Rng r(1);
  CHECK(dropout(x, 0.0, true, &r) == x);
  CHECK(dropout(x, 0.5, false, &r) == x);
  CHECK(dropout(x, 0.9, false, nullptr) == x);
}

TEST_CASE("dropout at rate 0.5 keeps the mean") {
  const Tensor<double> x(Shape{100000}, 1.0);
  Rng r(123);
  const auto y = dropout(x, 0.5, true, &r);
  double sum = 0.0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == 2.0));
    sum += v;
  }
  const double mean = sum / 100000.0;
  CHECK(mean >= 0.98);
  CHECK(mean <= 1.02);
}

TEST_CASE("dropout rejects rates at or above one") {
  Rng r(1);
  const Tensor<double> x(Shape{2}, 1.0);
  CHECK_THROWS_AS(dropout(x, 1.0, true, &r), ConfigError);
  CHECK_THROWS_AS(validate_dropout_rate(1.5), ConfigError);
  CHECK_THROWS_AS(validate_dropout_rate(-0.1), ConfigError);
}

TEST_CASE("ffn with zero weights returns the output bias on every row") {
  const std::size_t d = 3;
  FfnParams<double> p{Tensor<double>(Shape{d, 4 * d}), Tensor<double>(Shape{4 * d}),
                      Tensor<double>(Shape{4 * d, d}), Tensor<double>(Shape{d}, {1, -2, 3})};
  std::mt19937_64 rng(7);
  const auto y = ffn(random_tensor(Shape{5, d}, rng), p);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < d; ++c) CHECK(y(r, c) == p.b2[c]);
}

TEST_CASE("ffn is position-wise") {
  std::mt19937_64 rng(8);
  const std::size_t d = 4;
  FfnParams<double> p{random_tensor(Shape{d, 4 * d}, rng), random_tensor(Shape{4 * d}, rng),
                      random_tensor(Shape{4 * d, d}, rng), random_tensor(Shape{d}, rng)};
  auto x = random_tensor(Shape{5, d}, rng);
  const auto before = ffn(x, p);
  x(2, 1) += 0.5;
  const auto after = ffn(x, p);
  for (std::size_t r = 0; r < 5; ++r) {
    if (r == 2) continue;
    CHECK(testing::bitwise_rows_equal(before, after, r, r + 1));
  }
  CHECK_FALSE(testing::bitwise_rows_equal(before, after, 2, 3));
}

TEST_CASE("ffn matches the composed matmul/gelu oracle") {
  std::mt19937_64 rng(9);
  const std::size_t d = 3;
  FfnParams<double> p{random_tensor(Shape{d, 4 * d}, rng), random_tensor(Shape{4 * d}, rng),
                      random_tensor(Shape{4 * d, d}, rng), random_tensor(Shape{d}, rng)};
  const auto x = random_tensor(Shape{4, d}, rng);
  auto h = oracle::matmul(testing::to_mat(x), testing::to_mat(p.w1));
  for (auto& row : h)
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = oracle::gelu(row[c] + p.b1[c]);
  auto want = oracle::matmul(h, testing::to_mat(p.w2));
  for (auto& row : want)
    for (std::size_t c = 0; c < d; ++c) row[c] += p.b2[c];
  CHECK(testing::max_abs_diff(ffn(x, p), want) < 1e-6);
}

TEST_CASE("ffn shape mismatch is a dimension error") {
  FfnParams<double> p{Tensor<double>(Shape{3, 12}), Tensor<double>(Shape{12}),
                      Tensor<double>(Shape{12, 3}), Tensor<double>(Shape{3})};
  CHECK_THROWS_AS(ffn(Tensor<double>(Shape{2, 4}), p), DimensionError);
}

TEST_CASE("ffn backward passes a gradient check, with replayed dropout") {
  std::mt19937_64 rng(10);
  const std::size_t d = 2;
  FfnParams<double> p{random_tensor(Shape{d, 4 * d}, rng), random_tensor(Shape{4 * d}, rng),
                      random_tensor(Shape{4 * d, d}, rng), random_tensor(Shape{d}, rng)};
  auto x = random_tensor(Shape{3, d}, rng);
  const auto w = random_tensor(Shape{3, d}, rng);
  for (double rate : {0.0, 0.5}) {
    auto run = [&](FfnCache<double>* cache) {
      Rng r(99);
      return ffn(x, p, DropoutContext{rate, rate > 0, &r}, cache);
    };
    FfnCache<double> cache;
    (void)run(&cache);
    FfnParams<double> g{Tensor<double>(p.w1.shape()), Tensor<double>(p.b1.shape()),
                        Tensor<double>(p.w2.shape()), Tensor<double>(p.b2.shape())};
    const auto dx = ffn_backward(w, p, cache, g);
    auto loss = [&] { return dot(run(nullptr), w); };
    const GradCheckEntry entries[] = {{"x", &x, &dx},       {"w1", &p.w1, &g.w1},
                                      {"b1", &p.b1, &g.b1}, {"w2", &p.w2, &g.w2},
                                      {"b2", &p.b2, &g.b2}};
    CHECK(gradient_check(loss, entries).max_rel_error < 1e-4);
  }
}

}  // TEST_SUITE
