#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "voxtherm/error.hpp"
#include "voxtherm/optim.hpp"

using namespace voxtherm;

TEST_SUITE("optim") {

TEST_CASE("zero gradient without decay is a fixed point") {
  Rng rng(1);
  std::vector<Tensor<double>> p{vt_test::random_tensor({3, 4}, rng)};
  const auto before = p;
  AdamState<double> st;
  AdamConfig cfg;
  cfg.weight_decay = 0;
  for (int i = 0; i < 5; ++i) adam_step(p, {Tensor<double>({3, 4})}, st, cfg);
  CHECK(p == before);
}

TEST_CASE("first step moves each parameter by about lr") {
  std::vector<Tensor<double>> p{Tensor<double>({4}, std::vector<double>{0, 1, -1, 5})};
  const std::vector<Tensor<double>> g{Tensor<double>({4}, std::vector<double>{0.3, -2.0, 1e-3, 7.0})};
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0;
  adam_step(p, g, st, cfg);
  const double before[4] = {0, 1, -1, 5};
  for (std::size_t i = 0; i < 4; ++i) {
    // m_hat = g, v_hat = g^2 at t = 1.
    const double want = before[i] - cfg.lr * g[0][i] / (std::abs(g[0][i]) + cfg.eps);
    CHECK(p[0][i] == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::abs(p[0][i] - before[i]) == doctest::Approx(cfg.lr).epsilon(1e-4));
  }
}

TEST_CASE("decoupled weight decay") {
  std::vector<Tensor<double>> p{Tensor<double>({1}, 2.0)};
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  adam_step(p, {Tensor<double>({1})}, st, cfg);
  CHECK(p[0][0] == doctest::Approx(2.0 * (1 - 0.05)).epsilon(1e-15));
}

TEST_CASE("identical inputs give bit-identical parameters") {
  auto run = [] {
    Rng rng(42);
    std::vector<Tensor<float>> p{vt_test::random_tensor<float>({5, 5}, rng), vt_test::random_tensor<float>({7}, rng)};
    AdamState<float> st;
    for (int i = 0; i < 10; ++i) {
      std::vector<Tensor<float>> g{vt_test::random_tensor<float>({5, 5}, rng), vt_test::random_tensor<float>({7}, rng)};
      adam_step(p, g, st, AdamConfig{});
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("shape checks") {
  std::vector<Tensor<double>> p{Tensor<double>({2})};
  AdamState<double> st;
  CHECK_THROWS_AS(adam_step(p, {}, st, AdamConfig{}), ShapeMismatch);
  CHECK_THROWS_AS(adam_step(p, {Tensor<double>({3})}, st, AdamConfig{}), ShapeMismatch);
}

TEST_CASE("clipping") {
  std::vector<Tensor<double>> small{Tensor<double>({2}, std::vector<double>{0.3, 0.4})};
  CHECK(clip_grad_norm(small) == doctest::Approx(0.5));
  CHECK(small[0][0] == 0.3);
  CHECK(small[0][1] == 0.4);

  std::vector<Tensor<double>> g{Tensor<double>({2}, std::vector<double>{3, 4})};
  CHECK(clip_grad_norm(g) == doctest::Approx(5.0));
  CHECK(g[0][0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(g[0][1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(global_grad_norm(g) <= 1.0 + 1e-12);
}

TEST_CASE("clipped float gradients never exceed the bound") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Tensor<float>> g{vt_test::random_tensor<float>({17}, rng, -50, 50),
                                 vt_test::random_tensor<float>({3, 5}, rng, -1, 1)};
    const double before = global_grad_norm(g);
    CHECK(clip_grad_norm(g, 1.0) == before);
    CHECK(global_grad_norm(g) <= 1.0);
    CHECK(global_grad_norm(g) > 1.0 - 1e-5);
  }
}

TEST_CASE("plateau scheduler") {
  PlateauScheduler s(1.0, 0.5, 3, 0.1, 0.0);
  CHECK(s.step(1.0) == 1.0);
  CHECK(s.step(1.0) == 1.0);
  CHECK(s.step(1.0) == 1.0);
  CHECK(s.step(1.0) == 0.5);  // third epoch without improvement
  CHECK(s.step(0.5) == 0.5);
  double prev = s.lr();
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double lr = s.step(0.5 + rng.uniform());
    CHECK(lr <= prev);
    CHECK(lr >= 0.1);
    prev = lr;
  }
  CHECK(s.lr() == 0.1);
}

TEST_CASE("parameter sets") {
  ParameterSet<float> ps;
  ps.add("a", Tensor<float>({2, 3}));
  ps.add("b", Tensor<float>({4}));
  CHECK(ps.size() == 2);
  CHECK(ps.scalar_count() == 10);
  CHECK(ps.index_of("b") == 1);
  CHECK_THROWS_AS(ps.index_of("c"), MissingEntry);
}

}  // TEST_SUITE
