#pragma once

// Tape-based reverse-mode differentiation over dense tensors.
//
// Every op appends one node holding its output value and a closure that
// scatters the node's gradient into its inputs. backward() walks the tape
// once in reverse recording order, which is a topological order by
// construction. A tape is single-use: after backward() it rejects further
// recording and a second backward() with StaleTape.

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "voxtherm/fft.hpp"
#include "voxtherm/tensor.hpp"

namespace voxtherm::ad {

template <class T>
class Tape;

/// Handle to a tape node.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
};

template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient (inputs, targets).
  Var<T> constant(Tensor<T> value);
  /// Owned leaf with gradient.
  Var<T> variable(Tensor<T> value);
  /// Borrowed leaf with gradient; `value` must outlive the tape. Parameters
  /// are numbered in registration order for parameter_gradients().
  Var<T> parameter(const Tensor<T>& value);

  /// Appends an op result. `fn` is kept only when some input needs a gradient.
  Var<T> record(Tensor<T> value, const std::vector<std::size_t>& inputs, BackwardFn fn);

  const Tensor<T>& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient buffer of a node, allocated as zeros on first use.
  Tensor<T>& grad_slot(std::size_t id);
  /// Gradient after backward(); zeros for nodes the loss does not reach.
  Tensor<T> grad(Var<T> v) const;

  /// Throws NotScalar unless `loss` has exactly one element, StaleTape on reuse.
  void backward(Var<T> loss);

  /// Gradients of every parameter() leaf, in registration order.
  std::vector<Tensor<T>> parameter_gradients() const;

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* borrowed = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check_live() const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> parameters_;
  bool consumed_ = false;
};

// ---- op set ---------------------------------------------------------------

template <class T> Var<T> add(Var<T> a, Var<T> b);
template <class T> Var<T> sub(Var<T> a, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);
template <class T> Var<T> scale(Var<T> a, T factor);

/// x * Phi(x), exact erf form.
template <class T> Var<T> gelu(Var<T> x);

/// x: [Ci, ...spatial], weight: [Co, Ci], bias: [Co] -> [Co, ...spatial].
template <class T> Var<T> channel_linear(Var<T> x, Var<T> weight, Var<T> bias);
template <class T> Var<T> channel_linear(Var<T> x, Var<T> weight);

/// x: [Ci, D, H, W], weight: [Co, Ci, k, k, k] with odd k, bias: [Co].
/// Symmetric zero padding (k - 1) / 2; stride 1 or 2.
template <class T> Var<T> conv3d(Var<T> x, Var<T> weight, Var<T> bias, std::size_t stride);

/// Nearest-neighbor x2 along the three spatial axes of [C, D, H, W].
template <class T> Var<T> upsample2(Var<T> x);

/// Concatenation along axis 0 of two [C, D, H, W] tensors.
template <class T> Var<T> concat_channels(Var<T> a, Var<T> b);

/// Real 3-D FFT per channel: [C, D, H, W] -> [C, Kd, Kh, Kw, 2] on `layout`'s bins.
template <class T> Var<T> rfft3(Var<T> x, std::shared_ptr<const fft::SpectrumLayout> layout);

/// Inverse of rfft3 with Hermitian completion: [C, Kd, Kh, Kw, 2] -> [C, D, H, W].
/// Bins outside `layout` are treated as zero.
template <class T> Var<T> irfft3(Var<T> spectrum, std::shared_ptr<const fft::SpectrumLayout> layout);

/// Per-mode complex channel mixing. spectrum: [Ci, M..., 2] viewed as
/// [Ci, M, 2]; weights: [M, Co, Ci, 2]. out[o, m] = sum_i w[m, o, i] * x[i, m].
template <class T> Var<T> spectral_mix(Var<T> spectrum, Var<T> weights);

template <class T> Var<T> sum(Var<T> x);
template <class T> Var<T> mean(Var<T> x);

/// Mean over elements of 0.5 d^2 / beta for |d| < beta, |d| - beta / 2 otherwise,
/// d = pred - target. At beta = 1 the branches are (d^2)/2 and |d| - 1/2.
template <class T> Var<T> smooth_l1(Var<T> pred, Var<T> target, T beta = T(1));

/// Element-wise smooth L1 without reduction (for evaluation use).
template <class T> T smooth_l1_value(std::span<const T> pred, std::span<const T> target, T beta = T(1));

}  // namespace voxtherm::ad
