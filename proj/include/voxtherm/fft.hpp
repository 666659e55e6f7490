#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace voxtherm::fft {

/// In-place iterative radix-2 transform of `n` contiguous points, n a power
/// of two. Unnormalized in both directions; `inverse` flips the exponent sign.
template <class T>
void transform(std::complex<T>* data, std::size_t n, bool inverse);

bool is_power_of_two(std::size_t n);

/// Which bins of the real-input 3-D spectrum are kept. Full axes (depth,
/// height) keep an explicit list of bin indices; the half axis (width) keeps
/// bins [0, kw). Compact spectra are stored as [kd.size()][kh.size()][kw].
struct SpectrumLayout {
  std::size_t D = 0, H = 0, W = 0;
  std::vector<std::size_t> kd, kh;
  std::size_t kw = 0;

  /// Every bin: D x H x (W/2 + 1).
  static SpectrumLayout full(std::size_t D, std::size_t H, std::size_t W);
  /// Symmetric low-frequency block: |f_d| < md, |f_h| < mh, f_w < mw.
  /// Keeps (2md - 1) x (2mh - 1) x mw bins.
  static SpectrumLayout low_modes(std::size_t D, std::size_t H, std::size_t W, std::size_t md,
                                  std::size_t mh, std::size_t mw);

  std::size_t points() const { return D * H * W; }
  std::size_t bins() const { return kd.size() * kh.size() * kw; }
  /// Multiplicity of width bin `w` in the full Hermitian spectrum: 1 for the
  /// zero and Nyquist bins, 2 otherwise.
  double multiplicity(std::size_t w) const { return (w == 0 || 2 * w == W) ? 1.0 : 2.0; }
};

/// X[k] = sum_x in[x] exp(-2 pi i k.x / N) on the retained bins.
/// `in` holds D*H*W reals, `out` layout.bins() complex values.
template <class T>
void forward(const T* in, const SpectrumLayout& layout, std::complex<T>* out);

/// out[x] = scale * sum_k m(k) Re(in[k] exp(+2 pi i k.x / N)) over the retained
/// bins, where m(k) is the width multiplicity when `hermitian` is set and 1
/// otherwise. With scale = 1/N and hermitian = true this inverts forward()
/// on a full layout; with scale = 1 and hermitian = false it is the adjoint
/// of forward().
template <class T>
void inverse(const std::complex<T>* in, const SpectrumLayout& layout, T* out, T scale,
             bool hermitian);

}  // namespace voxtherm::fft
