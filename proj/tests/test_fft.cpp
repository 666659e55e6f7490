#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>

#include "support.hpp"
#include "voxtherm/autodiff.hpp"
#include "voxtherm/error.hpp"
#include "voxtherm/fft.hpp"
#include "voxtherm/models.hpp"

using namespace voxtherm;
using cplx = std::complex<double>;

namespace {

std::vector<cplx> forward_full(const Tensor<double>& x, const fft::SpectrumLayout& l) {
  std::vector<cplx> out(l.bins());
  fft::forward(x.raw(), l, out.data());
  return out;
}

/// Identity mixing weights [M, c, c, 2].
Tensor<double> identity_weights(std::size_t modes, std::size_t c) {
  Tensor<double> w({modes, c, c, 2});
  for (std::size_t m = 0; m < modes; ++m)
    for (std::size_t o = 0; o < c; ++o) w[((m * c + o) * c + o) * 2] = 1.0;
  return w;
}

Tensor<double> spectral(const Tensor<double>& v, const Tensor<double>& w, std::array<std::size_t, 3> modes) {
  ad::Tape<double> tape;
  return Fno<double>::spectral_conv(tape.constant(v), tape.constant(w), modes).value();
}

std::size_t retained(std::array<std::size_t, 3> m) { return (2 * m[0] - 1) * (2 * m[1] - 1) * m[2]; }

}  // namespace

TEST_SUITE("fft") {

TEST_CASE("1-D transform matches the naive DFT") {
  Rng rng(1);
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u, 64u}) {
    std::vector<cplx> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto y = x;
    fft::transform(y.data(), n, false);
    for (std::size_t k = 0; k < n; ++k) {
      cplx acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += x[j] * std::polar(1.0, -2 * std::numbers::pi * double(k * j) / n);
      CHECK(std::abs(acc - y[k]) < 1e-12 * n);
    }
    fft::transform(y.data(), n, true);
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(y[j] / double(n) - x[j]) < 1e-14 * n);
  }
  CHECK(fft::is_power_of_two(32));
  CHECK_FALSE(fft::is_power_of_two(24));
}

TEST_CASE("real 3-D transform agrees with the full complex DFT on stored bins") {
  Rng rng(2);
  const std::size_t D = 4, H = 8, W = 8;
  const auto x = vt_test::random_tensor({D, H, W}, rng);
  const auto l = fft::SpectrumLayout::full(D, H, W);
  CHECK(l.bins() == D * H * (W / 2 + 1));
  const auto half = forward_full(x, l);
  const auto full = vt_test::dft3(x.raw(), D, H, W);
  // Hermitian completion of the stored half reproduces every full bin.
  for (std::size_t kd = 0; kd < D; ++kd)
    for (std::size_t kh = 0; kh < H; ++kh)
      for (std::size_t kw = 0; kw < W; ++kw) {
        cplx v;
        if (kw <= W / 2) {
          v = half[(kd * H + kh) * (W / 2 + 1) + kw];
        } else {
          v = std::conj(half[(((D - kd) % D) * H + (H - kh) % H) * (W / 2 + 1) + (W - kw)]);
        }
        CHECK(std::abs(v - full[(kd * H + kh) * W + kw]) < 1e-10);
      }
}

TEST_CASE("inverse after forward is the identity") {
  Rng rng(3);
  const std::size_t D = 16, H = 8, W = 16;
  const auto x = vt_test::random_tensor({D, H, W}, rng);
  const auto l = fft::SpectrumLayout::full(D, H, W);
  const auto X = forward_full(x, l);
  Tensor<double> y({D, H, W});
  fft::inverse(X.data(), l, y.raw(), 1.0 / double(D * H * W), true);
  CHECK(vt_test::max_abs_diff(x, y) < 1e-10);
}

TEST_CASE("Parseval with half-spectrum multiplicity") {
  Rng rng(4);
  const std::size_t D = 8, H = 4, W = 16;
  const auto x = vt_test::random_tensor({D, H, W}, rng);
  const auto l = fft::SpectrumLayout::full(D, H, W);
  const auto X = forward_full(x, l);
  double lhs = 0, rhs = 0;
  for (double v : x.data()) lhs += v * v;
  for (std::size_t i = 0; i < X.size(); ++i) rhs += l.multiplicity(i % l.kw) * std::norm(X[i]);
  rhs /= double(D * H * W);
  CHECK(std::abs(lhs - rhs) < 1e-9 * lhs);
}

TEST_CASE("linearity") {
  Rng rng(5);
  const std::size_t D = 8, H = 8, W = 8;
  const auto x = vt_test::random_tensor({D, H, W}, rng), y = vt_test::random_tensor({D, H, W}, rng);
  const double a = 1.7, b = -0.3;
  Tensor<double> z({D, H, W});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto l = fft::SpectrumLayout::low_modes(D, H, W, 3, 2, 4);
  const auto X = forward_full(x, l), Y = forward_full(y, l), Z = forward_full(z, l);
  for (std::size_t i = 0; i < Z.size(); ++i) CHECK(std::abs(Z[i] - (a * X[i] + b * Y[i])) < 1e-10);
}

TEST_CASE("unscaled non-Hermitian inverse is the adjoint of forward") {
  Rng rng(6);
  const std::size_t D = 8, H = 4, W = 8;
  const auto l = fft::SpectrumLayout::low_modes(D, H, W, 2, 2, 3);
  const auto x = vt_test::random_tensor({D, H, W}, rng);
  std::vector<cplx> y(l.bins());
  for (auto& v : y) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const auto X = forward_full(x, l);
  Tensor<double> aty({D, H, W});
  fft::inverse(y.data(), l, aty.raw(), 1.0, false);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < X.size(); ++i) lhs += (std::conj(X[i]) * y[i]).real();
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * aty[i];
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("mode layout") {
  const auto l = fft::SpectrumLayout::low_modes(8, 8, 8, 3, 2, 4);
  CHECK(l.kd == std::vector<std::size_t>{0, 1, 2, 6, 7});
  CHECK(l.kh == std::vector<std::size_t>{0, 1, 7});
  CHECK(l.bins() == 5 * 3 * 4);
  CHECK_THROWS_AS(fft::SpectrumLayout::low_modes(8, 8, 8, 5, 2, 2), ShapeMismatch);
  CHECK_THROWS_AS(fft::SpectrumLayout::low_modes(8, 8, 8, 2, 2, 6), ShapeMismatch);
  CHECK_NOTHROW(fft::SpectrumLayout::low_modes(8, 8, 8, 4, 4, 5));
}

TEST_CASE("spectral convolution with identity weights is the ideal low-pass") {
  Rng rng(7);
  const std::size_t D = 8, H = 8, W = 8, c = 2;
  const auto v = vt_test::random_tensor({c, D, H, W}, rng);
  for (auto modes : {std::array<std::size_t, 3>{2, 2, 2}, std::array<std::size_t, 3>{3, 2, 4},
                     std::array<std::size_t, 3>{4, 4, 5}, std::array<std::size_t, 3>{1, 1, 1}}) {
    const auto out = spectral(v, identity_weights(retained(modes), c), modes);
    REQUIRE(out.shape() == v.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
      const auto want = vt_test::dft_lowpass(v.raw() + ch * D * H * W, D, H, W, modes[0], modes[1], modes[2]);
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(out[ch * D * H * W + i] - want[i]) < 1e-9);
    }
  }
}

TEST_CASE("identity low-pass is idempotent") {
  Rng rng(8);
  const std::array<std::size_t, 3> modes{3, 2, 3};
  const auto v = vt_test::random_tensor({3, 8, 8, 8}, rng);
  const auto w = identity_weights(retained(modes), 3);
  const auto once = spectral(v, w, modes);
  CHECK(vt_test::max_abs_diff(spectral(once, w, modes), once) < 1e-12);
}

TEST_CASE("zero weights give zero output") {
  Rng rng(9);
  const std::array<std::size_t, 3> modes{2, 2, 2};
  const auto v = vt_test::random_tensor({2, 8, 8, 8}, rng);
  const auto out = spectral(v, Tensor<double>({retained(modes), 2, 2, 2}), modes);
  for (double x : out.data()) CHECK(x == 0.0);
}

TEST_CASE("constant input maps through the zero mode only") {
  Rng rng(10);
  const std::array<std::size_t, 3> modes{2, 2, 3};
  const std::size_t c = 3, M = retained(modes);
  Tensor<double> v({c, 8, 8, 8});
  const double means[3] = {1.5, -0.5, 2.0};
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < 512; ++i) v[ch * 512 + i] = means[ch];
  const auto w = vt_test::random_tensor({M, c, c, 2}, rng);
  const auto out = spectral(v, w, modes);
  // Mode 0 is the first retained bin.
  for (std::size_t o = 0; o < c; ++o) {
    double want = 0;
    for (std::size_t i = 0; i < c; ++i) want += w[((0 * c + o) * c + i) * 2] * means[i];
    for (std::size_t k = 0; k < 512; ++k) CHECK(std::abs(out[o * 512 + k] - want) < 1e-12);
  }
}

TEST_CASE("circular shift equivariance") {
  Rng rng(11);
  const std::size_t D = 8, H = 8, W = 8, c = 2;
  const std::array<std::size_t, 3> modes{3, 3, 4};
  const auto v = vt_test::random_tensor({c, D, H, W}, rng);
  const auto id = identity_weights(retained(modes), c);
  const auto rnd = vt_test::random_tensor({retained(modes), c, c, 2}, rng);
  auto shift = [&](const Tensor<double>& t, std::size_t sd, std::size_t sh, std::size_t sw) {
    Tensor<double> out(t.shape());
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t w = 0; w < W; ++w) {
            out[((ch * D + (d + sd) % D) * H + (h + sh) % H) * W + (w + sw) % W] = t[((ch * D + d) * H + h) * W + w];
          }
    return out;
  };
  for (const auto& w : {id, rnd}) {
    const auto lhs = spectral(shift(v, 3, 1, 5), w, modes);
    const auto rhs = shift(spectral(v, w, modes), 3, 1, 5);
    CHECK(vt_test::max_abs_diff(lhs, rhs) < 1e-10);
  }
}

}  // TEST_SUITE
