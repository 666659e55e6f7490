#include "voxtherm/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>
#include <utility>

#include "voxtherm/error.hpp"

namespace voxtherm::fft {
namespace {

template <class T>
struct Plan {
  std::vector<std::size_t> bitrev;
  std::vector<std::complex<T>> twiddle;  // exp(-2 pi i k / n), k < n/2
};

template <class T>
const Plan<T>& plan_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, Plan<T>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Plan<T> p;
  p.bitrev.resize(n);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    p.bitrev[i] = r;
  }
  p.twiddle.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    p.twiddle[k] = {static_cast<T>(std::cos(a)), static_cast<T>(std::sin(a))};
  }
  return cache.emplace(n, std::move(p)).first->second;
}

void check_axis(std::size_t n, const char* name) {
  if (!is_power_of_two(n)) {
    throw ShapeMismatch(std::string("fft: ") + name + " extent " + std::to_string(n) +
                        " is not a power of two");
  }
}

void check_layout(const SpectrumLayout& l) {
  check_axis(l.D, "depth");
  check_axis(l.H, "height");
  check_axis(l.W, "width");
  for (auto k : l.kd) if (k >= l.D) throw ShapeMismatch("fft: depth bin out of range");
  for (auto k : l.kh) if (k >= l.H) throw ShapeMismatch("fft: height bin out of range");
  if (l.kw == 0 || l.kw > l.W / 2 + 1) throw ShapeMismatch("fft: width bin count out of range");
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

template <class T>
void transform(std::complex<T>* a, std::size_t n, bool inverse) {
  if (n <= 1) return;
  const Plan<T>& p = plan_for<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = p.bitrev[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<T> w = p.twiddle[k * step];
        const T wi = inverse ? -w.imag() : w.imag();
        const std::complex<T> u = a[start + k];
        const std::complex<T> x = a[start + k + half];
        const std::complex<T> v(x.real() * w.real() - x.imag() * wi,
                                x.real() * wi + x.imag() * w.real());
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

SpectrumLayout SpectrumLayout::full(std::size_t D, std::size_t H, std::size_t W) {
  SpectrumLayout l;
  l.D = D;
  l.H = H;
  l.W = W;
  for (std::size_t k = 0; k < D; ++k) l.kd.push_back(k);
  for (std::size_t k = 0; k < H; ++k) l.kh.push_back(k);
  l.kw = W / 2 + 1;
  return l;
}

SpectrumLayout SpectrumLayout::low_modes(std::size_t D, std::size_t H, std::size_t W,
                                         std::size_t md, std::size_t mh, std::size_t mw) {
  if (md == 0 || mh == 0 || mw == 0 || md > D / 2 || mh > H / 2 || mw > W / 2 + 1) {
    throw ShapeMismatch("fft: modes (" + std::to_string(md) + "," + std::to_string(mh) + "," +
                        std::to_string(mw) + ") do not fit grid " + std::to_string(D) + "x" +
                        std::to_string(H) + "x" + std::to_string(W));
  }
  SpectrumLayout l;
  l.D = D;
  l.H = H;
  l.W = W;
  for (std::size_t k = 0; k < md; ++k) l.kd.push_back(k);
  for (std::size_t k = D - md + 1; k < D; ++k) l.kd.push_back(k);
  for (std::size_t k = 0; k < mh; ++k) l.kh.push_back(k);
  for (std::size_t k = H - mh + 1; k < H; ++k) l.kh.push_back(k);
  l.kw = mw;
  return l;
}

template <class T>
void forward(const T* in, const SpectrumLayout& l, std::complex<T>* out) {
  check_layout(l);
  using C = std::complex<T>;
  const std::size_t D = l.D, H = l.H, W = l.W, KW = l.kw, KH = l.kh.size(), KD = l.kd.size();
  const std::size_t rows = D * H;

  // Width axis, two real rows per complex transform.
  std::vector<C> a(rows * KW);
  std::vector<C> line(std::max({D, H, W}));
  for (std::size_t r = 0; r < rows; r += 2) {
    const T* r0 = in + r * W;
    const T* r1 = r + 1 < rows ? in + (r + 1) * W : nullptr;
    for (std::size_t x = 0; x < W; ++x) line[x] = C(r0[x], r1 ? r1[x] : T{0});
    transform(line.data(), W, false);
    for (std::size_t k = 0; k < KW; ++k) {
      const C zk = line[k];
      const C zm = std::conj(line[(W - k) % W]);
      a[r * KW + k] = (zk + zm) * T(0.5);
      if (r1) a[(r + 1) * KW + k] = (zk - zm) * C(0, T(-0.5));
    }
  }

  // Height axis.
  std::vector<C> b(D * KH * KW);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t k = 0; k < KW; ++k) {
      for (std::size_t h = 0; h < H; ++h) line[h] = a[(d * H + h) * KW + k];
      transform(line.data(), H, false);
      for (std::size_t j = 0; j < KH; ++j) b[(d * KH + j) * KW + k] = line[l.kh[j]];
    }
  }

  // Depth axis.
  for (std::size_t j = 0; j < KH; ++j) {
    for (std::size_t k = 0; k < KW; ++k) {
      for (std::size_t d = 0; d < D; ++d) line[d] = b[(d * KH + j) * KW + k];
      transform(line.data(), D, false);
      for (std::size_t i = 0; i < KD; ++i) out[(i * KH + j) * KW + k] = line[l.kd[i]];
    }
  }
}

template <class T>
void inverse(const std::complex<T>* in, const SpectrumLayout& l, T* out, T scale, bool hermitian) {
  check_layout(l);
  using C = std::complex<T>;
  const std::size_t D = l.D, H = l.H, W = l.W, KW = l.kw, KH = l.kh.size(), KD = l.kd.size();
  std::vector<C> line(std::max({D, H, W}));

  // Depth axis.
  std::vector<C> c(D * KH * KW);
  for (std::size_t j = 0; j < KH; ++j) {
    for (std::size_t k = 0; k < KW; ++k) {
      const T f = hermitian ? T(1) : T(1.0 / l.multiplicity(k));
      std::fill(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(D), C{});
      for (std::size_t i = 0; i < KD; ++i) line[l.kd[i]] += in[(i * KH + j) * KW + k] * f;
      transform(line.data(), D, true);
      for (std::size_t d = 0; d < D; ++d) c[(d * KH + j) * KW + k] = line[d];
    }
  }

  // Height axis.
  std::vector<C> e(D * H * KW);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t k = 0; k < KW; ++k) {
      std::fill(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(H), C{});
      for (std::size_t j = 0; j < KH; ++j) line[l.kh[j]] += c[(d * KH + j) * KW + k];
      transform(line.data(), H, true);
      for (std::size_t h = 0; h < H; ++h) e[(d * H + h) * KW + k] = line[h];
    }
  }

  // Width axis: Hermitian extension, two rows per complex transform.
  const std::size_t rows = D * H;
  const C i_unit(0, 1);
  for (std::size_t r = 0; r < rows; r += 2) {
    const bool pair = r + 1 < rows;
    std::fill(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(W), C{});
    for (std::size_t k = 0; k < KW; ++k) {
      const C e0 = e[r * KW + k];
      const C e1 = pair ? e[(r + 1) * KW + k] : C{};
      if (k == 0 || 2 * k == W) {
        line[k] += C(e0.real(), e1.real());
      } else {
        line[k] += e0 + i_unit * e1;
        line[W - k] += std::conj(e0) + i_unit * std::conj(e1);
      }
    }
    transform(line.data(), W, true);
    for (std::size_t x = 0; x < W; ++x) {
      out[r * W + x] = scale * line[x].real();
      if (pair) out[(r + 1) * W + x] = scale * line[x].imag();
    }
  }
}

template void transform<float>(std::complex<float>*, std::size_t, bool);
template void transform<double>(std::complex<double>*, std::size_t, bool);
template void forward<float>(const float*, const SpectrumLayout&, std::complex<float>*);
template void forward<double>(const double*, const SpectrumLayout&, std::complex<double>*);
template void inverse<float>(const std::complex<float>*, const SpectrumLayout&, float*, float, bool);
template void inverse<double>(const std::complex<double>*, const SpectrumLayout&, double*, double,
                              bool);

}  // namespace voxtherm::fft
