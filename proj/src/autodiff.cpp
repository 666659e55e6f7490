#include "voxtherm/autodiff.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "voxtherm/error.hpp"

namespace voxtherm::ad {

// ---- Tape -----------------------------------------------------------------

template <class T>
void Tape<T>::check_live() const {
  if (consumed_) throw StaleTape("tape already differentiated; re-run the forward pass");
}

template <class T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  check_live();
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::variable(Tensor<T> value) {
  check_live();
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::parameter(const Tensor<T>& value) {
  check_live();
  Node n;
  n.borrowed = &value;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  parameters_.push_back(nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::record(Tensor<T> value, const std::vector<std::size_t>& inputs, BackwardFn fn) {
  check_live();
  Node n;
  n.owned = std::move(value);
  for (auto id : inputs) n.requires_grad = n.requires_grad || nodes_.at(id).requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <class T>
const Tensor<T>& Tape<T>::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.borrowed ? *n.borrowed : n.owned;
}

template <class T>
Tensor<T>& Tape<T>::grad_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty() && !value(id).empty()) n.grad = Tensor<T>(value(id).shape());
  return n.grad;
}

template <class T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad.empty() ? Tensor<T>(value(v.id).shape()) : n.grad;
}

template <class T>
void Tape<T>::backward(Var<T> loss) {
  check_live();
  if (value(loss.id).size() != 1) {
    throw NotScalar("backward: loss has shape " + shape_string(value(loss.id).shape()));
  }
  consumed_ = true;
  grad_slot(loss.id).fill(T(1));
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this, id);
  }
}

template <class T>
std::vector<Tensor<T>> Tape<T>::parameter_gradients() const {
  std::vector<Tensor<T>> out;
  out.reserve(parameters_.size());
  for (auto id : parameters_) out.push_back(grad(Var<T>{const_cast<Tape*>(this), id}));
  return out;
}

namespace {

template <class T>
std::size_t spatial_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t i = 1; i < s.size(); ++i) n *= s[i];
  return n;
}

template <class T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.raw();
  const T* s = src.raw();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

template <class T>
void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeMismatch(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                        shape_string(s));
  }
}

template <class T>
T gelu_cdf(T x) {
  return T(0.5) * (T(1) + std::erf(x * T(0.5 * std::numbers::sqrt2)));
}

template <class T>
T gelu_pdf(T x) {
  return std::exp(T(-0.5) * x * x) * T(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

}  // namespace

// ---- element-wise -----------------------------------------------------------

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  accumulate(out, b.value());
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_slot(self);
    if (t.requires_grad(ia)) accumulate(t.grad_slot(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad_slot(ib), g);
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_slot(self);
    if (t.requires_grad(ia)) accumulate(t.grad_slot(ia), g);
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_slot(self);
    const Tensor<T>& va = t.value(ia);
    const Tensor<T>& vb = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor<T>& ga = t.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

template <class T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (T& v : out.data()) v *= factor;
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, factor](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_slot(self);
    Tensor<T>& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

template <class T>
Var<T> gelu(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * gelu_cdf(xv[i]);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_slot(self);
    const Tensor<T>& xv = t.value(ix);
    Tensor<T>& gx = t.grad_slot(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = xv[i];
      gx[i] += g[i] * (gelu_cdf(v) + v * gelu_pdf(v));
    }
  });
}

// ---- channel mixing ---------------------------------------------------------

namespace {

template <class T>
Var<T> channel_linear_impl(Var<T> x, Var<T> w, const Var<T>* b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.empty() || ws.size() != 2 || ws[1] != xs[0]) {
    throw ShapeMismatch("channel_linear: input " + shape_string(xs) + " vs weight " + shape_string(ws));
  }
  const std::size_t ci = ws[1], co = ws[0], n = spatial_size<T>(xs);
  if (b && b->shape() != Shape{co}) {
    throw ShapeMismatch("channel_linear: bias " + shape_string(b->shape()) + " vs weight " +
                        shape_string(ws));
  }
  Shape os = xs;
  os[0] = co;
  Tensor<T> out(os);
  const T* xv = x.value().raw();
  const T* wv = w.value().raw();
  for (std::size_t o = 0; o < co; ++o) {
    T* dst = out.raw() + o * n;
    const T bias = b ? b->value()[o] : T(0);
    for (std::size_t s = 0; s < n; ++s) dst[s] = bias;
    for (std::size_t i = 0; i < ci; ++i) {
      const T c = wv[o * ci + i];
      const T* src = xv + i * n;
      for (std::size_t s = 0; s < n; ++s) dst[s] += c * src[s];
    }
  }
  const std::size_t ix = x.id, iw = w.id;
  const bool has_bias = b != nullptr;
  const std::size_t ib = b ? b->id : 0;
  std::vector<std::size_t> inputs{ix, iw};
  if (has_bias) inputs.push_back(ib);
  return x.tape->record(std::move(out), inputs,
                        [ix, iw, ib, has_bias, ci, co, n](Tape<T>& t, std::size_t self) {
    const T* g = t.grad_slot(self).raw();
    const T* xv = t.value(ix).raw();
    const T* wv = t.value(iw).raw();
    if (t.requires_grad(ix)) {
      T* gx = t.grad_slot(ix).raw();
      for (std::size_t o = 0; o < co; ++o)
        for (std::size_t i = 0; i < ci; ++i) {
          const T c = wv[o * ci + i];
          T* dst = gx + i * n;
          const T* src = g + o * n;
          for (std::size_t s = 0; s < n; ++s) dst[s] += c * src[s];
        }
    }
    if (t.requires_grad(iw)) {
      T* gw = t.grad_slot(iw).raw();
      for (std::size_t o = 0; o < co; ++o)
        for (std::size_t i = 0; i < ci; ++i) {
          const T* go = g + o * n;
          const T* xi = xv + i * n;
          double acc = 0;
          for (std::size_t s = 0; s < n; ++s) acc += static_cast<double>(go[s] * xi[s]);
          gw[o * ci + i] += static_cast<T>(acc);
        }
    }
    if (has_bias && t.requires_grad(ib)) {
      T* gb = t.grad_slot(ib).raw();
      for (std::size_t o = 0; o < co; ++o) {
        double acc = 0;
        for (std::size_t s = 0; s < n; ++s) acc += g[o * n + s];
        gb[o] += static_cast<T>(acc);
      }
    }
  });
}

}  // namespace

template <class T>
Var<T> channel_linear(Var<T> x, Var<T> weight, Var<T> bias) {
  return channel_linear_impl(x, weight, &bias);
}

template <class T>
Var<T> channel_linear(Var<T> x, Var<T> weight) {
  return channel_linear_impl<T>(x, weight, nullptr);
}

// ---- convolution ------------------------------------------------------------

template <class T>
Var<T> conv3d(Var<T> x, Var<T> weight, Var<T> bias, std::size_t stride) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require_rank<T>(xs, 4, "conv3d input");
  require_rank<T>(ws, 5, "conv3d weight");
  if (ws[1] != xs[0] || ws[2] != ws[3] || ws[3] != ws[4] || ws[2] % 2 == 0) {
    throw ShapeMismatch("conv3d: input " + shape_string(xs) + " vs weight " + shape_string(ws));
  }
  if (bias.shape() != Shape{ws[0]}) {
    throw ShapeMismatch("conv3d: bias " + shape_string(bias.shape()) + " vs weight " + shape_string(ws));
  }
  if (stride != 1 && stride != 2) throw ShapeMismatch("conv3d: stride must be 1 or 2");
  const std::size_t ci = xs[0], D = xs[1], H = xs[2], W = xs[3];
  const std::size_t co = ws[0], k = ws[2];
  const long pad = static_cast<long>(k / 2);
  const std::size_t Do = (D + 2 * (k / 2) - k) / stride + 1;
  const std::size_t Ho = (H + 2 * (k / 2) - k) / stride + 1;
  const std::size_t Wo = (W + 2 * (k / 2) - k) / stride + 1;

  struct Geometry {
    std::size_t ci, D, H, W, co, k, Do, Ho, Wo, stride;
    long pad;
  };
  const Geometry geo{ci, D, H, W, co, k, Do, Ho, Wo, stride, pad};

  // Visits every (output voxel, input voxel, weight tap) triple with in-bounds input.
  auto visit = [](const Geometry& g, auto&& f) {
    for (std::size_t o = 0; o < g.co; ++o)
      for (std::size_t i = 0; i < g.ci; ++i)
        for (std::size_t a = 0; a < g.k; ++a)
          for (std::size_t b = 0; b < g.k; ++b)
            for (std::size_t c = 0; c < g.k; ++c) {
              const std::size_t widx = (((o * g.ci + i) * g.k + a) * g.k + b) * g.k + c;
              for (std::size_t od = 0; od < g.Do; ++od) {
                const long id = static_cast<long>(od * g.stride + a) - g.pad;
                if (id < 0 || id >= static_cast<long>(g.D)) continue;
                for (std::size_t oh = 0; oh < g.Ho; ++oh) {
                  const long ih = static_cast<long>(oh * g.stride + b) - g.pad;
                  if (ih < 0 || ih >= static_cast<long>(g.H)) continue;
                  const std::size_t orow = ((o * g.Do + od) * g.Ho + oh) * g.Wo;
                  const std::size_t irow = ((i * g.D + static_cast<std::size_t>(id)) * g.H +
                                            static_cast<std::size_t>(ih)) * g.W;
                  // ow range with 0 <= ow*stride + c - pad < W
                  const long lo_num = g.pad - static_cast<long>(c);
                  std::size_t ow0 = lo_num > 0 ? static_cast<std::size_t>((lo_num + static_cast<long>(g.stride) - 1) /
                                                                          static_cast<long>(g.stride))
                                               : 0;
                  const long hi_num = static_cast<long>(g.W) - 1 + g.pad - static_cast<long>(c);
                  if (hi_num < 0) continue;
                  const std::size_t ow1 =
                      std::min(g.Wo, static_cast<std::size_t>(hi_num) / g.stride + 1);
                  if (ow0 >= ow1) continue;
                  // First input column touched: ow0 * stride + c - pad >= 0.
                  const std::size_t icol = static_cast<std::size_t>(
                      static_cast<long>(ow0 * g.stride + c) - g.pad);
                  f(widx, orow + ow0, irow + icol, ow1 - ow0);
                }
              }
            }
  };

  Tensor<T> out({co, Do, Ho, Wo});
  {
    T* ov = out.raw();
    const T* xv = x.value().raw();
    const T* wv = weight.value().raw();
    const T* bv = bias.value().raw();
    for (std::size_t o = 0; o < co; ++o)
      std::fill(ov + o * Do * Ho * Wo, ov + (o + 1) * Do * Ho * Wo, bv[o]);
    visit(geo, [&](std::size_t widx, std::size_t obase, std::size_t ibase, std::size_t len) {
      const T wgt = wv[widx];
      T* dst = ov + obase;
      const T* src = xv + ibase;
      if (geo.stride == 1) {
        for (std::size_t j = 0; j < len; ++j) dst[j] += wgt * src[j];
      } else {
        for (std::size_t j = 0; j < len; ++j) dst[j] += wgt * src[j * 2];
      }
    });
  }

  const std::size_t ix = x.id, iw = weight.id, ib = bias.id;
  return x.tape->record(std::move(out), {ix, iw, ib},
                        [ix, iw, ib, geo, visit](Tape<T>& t, std::size_t self) {
    const T* g = t.grad_slot(self).raw();
    const T* xv = t.value(ix).raw();
    const T* wv = t.value(iw).raw();
    T* gx = t.requires_grad(ix) ? t.grad_slot(ix).raw() : nullptr;
    T* gw = t.requires_grad(iw) ? t.grad_slot(iw).raw() : nullptr;
    if (t.requires_grad(ib)) {
      T* gb = t.grad_slot(ib).raw();
      const std::size_t per = geo.Do * geo.Ho * geo.Wo;
      for (std::size_t o = 0; o < geo.co; ++o) {
        double acc = 0;
        for (std::size_t s = 0; s < per; ++s) acc += g[o * per + s];
        gb[o] += static_cast<T>(acc);
      }
    }
    if (!gx && !gw) return;
    visit(geo, [&](std::size_t widx, std::size_t obase, std::size_t ibase, std::size_t len) {
      const T* go = g + obase;
      const std::size_t step = geo.stride;
      if (gx) {
        const T wgt = wv[widx];
        T* dst = gx + ibase;
        for (std::size_t j = 0; j < len; ++j) dst[j * step] += wgt * go[j];
      }
      if (gw) {
        const T* src = xv + ibase;
        T acc = 0;
        for (std::size_t j = 0; j < len; ++j) acc += go[j] * src[j * step];
        gw[widx] += acc;
      }
    });
  });
}

template <class T>
Var<T> upsample2(Var<T> x) {
  const Shape& xs = x.shape();
  require_rank<T>(xs, 4, "upsample2");
  const std::size_t C = xs[0], D = xs[1], H = xs[2], W = xs[3];
  Tensor<T> out({C, 2 * D, 2 * H, 2 * W});
  const T* xv = x.value().raw();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t d = 0; d < 2 * D; ++d)
      for (std::size_t h = 0; h < 2 * H; ++h)
        for (std::size_t w = 0; w < 2 * W; ++w)
          out[((c * 2 * D + d) * 2 * H + h) * 2 * W + w] = xv[((c * D + d / 2) * H + h / 2) * W + w / 2];
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, C, D, H, W](Tape<T>& t, std::size_t self) {
    const T* g = t.grad_slot(self).raw();
    T* gx = t.grad_slot(ix).raw();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t d = 0; d < 2 * D; ++d)
        for (std::size_t h = 0; h < 2 * H; ++h)
          for (std::size_t w = 0; w < 2 * W; ++w)
            gx[((c * D + d / 2) * H + h / 2) * W + w / 2] += g[((c * 2 * D + d) * 2 * H + h) * 2 * W + w];
  });
}

template <class T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.empty() || bs.size() != as.size() || !std::equal(as.begin() + 1, as.end(), bs.begin() + 1)) {
    throw ShapeMismatch("concat_channels: " + shape_string(as) + " vs " + shape_string(bs));
  }
  Shape os = as;
  os[0] = as[0] + bs[0];
  Tensor<T> out(os);
  std::copy(a.value().raw(), a.value().raw() + a.value().size(), out.raw());
  std::copy(b.value().raw(), b.value().raw() + b.value().size(), out.raw() + a.value().size());
  const std::size_t ia = a.id, ib = b.id, na = a.value().size();
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib, na](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_slot(self);
    if (t.requires_grad(ia)) {
      Tensor<T>& ga = t.grad_slot(ia);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

// ---- spectral ---------------------------------------------------------------

namespace {

void require_layout_matches(const Shape& s, const fft::SpectrumLayout& l, bool spectral,
                            const char* what) {
  const Shape expect = spectral ? Shape{s.empty() ? 0 : s[0], l.kd.size(), l.kh.size(), l.kw, 2}
                                : Shape{s.empty() ? 0 : s[0], l.D, l.H, l.W};
  if (s.size() != expect.size() || s != expect) {
    throw ShapeMismatch(std::string(what) + ": " + shape_string(s) + " vs layout " +
                        shape_string(expect));
  }
}

}  // namespace

template <class T>
Var<T> rfft3(Var<T> x, std::shared_ptr<const fft::SpectrumLayout> layout) {
  require_layout_matches(x.shape(), *layout, false, "rfft3");
  const std::size_t C = x.shape()[0], N = layout->points(), K = layout->bins();
  Tensor<T> out({C, layout->kd.size(), layout->kh.size(), layout->kw, 2});
  auto* spec = reinterpret_cast<std::complex<T>*>(out.raw());
  for (std::size_t c = 0; c < C; ++c) fft::forward(x.value().raw() + c * N, *layout, spec + c * K);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, layout, C, N, K](Tape<T>& t, std::size_t self) {
    const auto* g = reinterpret_cast<const std::complex<T>*>(t.grad_slot(self).raw());
    T* gx = t.grad_slot(ix).raw();
    std::vector<T> tmp(N);
    for (std::size_t c = 0; c < C; ++c) {
      fft::inverse(g + c * K, *layout, tmp.data(), T(1), false);
      for (std::size_t i = 0; i < N; ++i) gx[c * N + i] += tmp[i];
    }
  });
}

template <class T>
Var<T> irfft3(Var<T> spectrum, std::shared_ptr<const fft::SpectrumLayout> layout) {
  require_layout_matches(spectrum.shape(), *layout, true, "irfft3");
  const std::size_t C = spectrum.shape()[0], N = layout->points(), K = layout->bins();
  Tensor<T> out({C, layout->D, layout->H, layout->W});
  const auto* spec = reinterpret_cast<const std::complex<T>*>(spectrum.value().raw());
  const T inv_n = T(1.0 / static_cast<double>(N));
  for (std::size_t c = 0; c < C; ++c) fft::inverse(spec + c * K, *layout, out.raw() + c * N, inv_n, true);
  const std::size_t is = spectrum.id;
  return spectrum.tape->record(std::move(out), {is}, [is, layout, C, N, K](Tape<T>& t, std::size_t self) {
    const T* g = t.grad_slot(self).raw();
    auto* gs = reinterpret_cast<std::complex<T>*>(t.grad_slot(is).raw());
    std::vector<std::complex<T>> tmp(K);
    const double inv_n = 1.0 / static_cast<double>(N);
    const std::size_t KW = layout->kw;
    for (std::size_t c = 0; c < C; ++c) {
      fft::forward(g + c * N, *layout, tmp.data());
      for (std::size_t k = 0; k < K; ++k) {
        const T f = static_cast<T>(layout->multiplicity(k % KW) * inv_n);
        gs[c * K + k] += tmp[k] * f;
      }
    }
  });
}

template <class T>
Var<T> spectral_mix(Var<T> spectrum, Var<T> weights) {
  const Shape& xs = spectrum.shape();
  const Shape& ws = weights.shape();
  if (xs.size() < 3 || xs.back() != 2 || ws.size() != 4 || ws[3] != 2) {
    throw ShapeMismatch("spectral_mix: spectrum " + shape_string(xs) + " vs weights " + shape_string(ws));
  }
  const std::size_t ci = xs[0];
  const std::size_t M = shape_size(xs) / (2 * ci);
  if (ws[0] != M || ws[2] != ci) {
    throw ShapeMismatch("spectral_mix: spectrum " + shape_string(xs) + " vs weights " + shape_string(ws));
  }
  const std::size_t co = ws[1];
  Shape os = xs;
  os[0] = co;
  Tensor<T> out(os);
  using C = std::complex<T>;
  const auto* x = reinterpret_cast<const C*>(spectrum.value().raw());
  const auto* r = reinterpret_cast<const C*>(weights.value().raw());
  auto* y = reinterpret_cast<C*>(out.raw());
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t o = 0; o < co; ++o) {
      T re = 0, im = 0;
      const C* row = r + (m * co + o) * ci;
      for (std::size_t i = 0; i < ci; ++i) {
        const C a = row[i], b = x[i * M + m];
        re += a.real() * b.real() - a.imag() * b.imag();
        im += a.real() * b.imag() + a.imag() * b.real();
      }
      y[o * M + m] = C(re, im);
    }
  const std::size_t ix = spectrum.id, iw = weights.id;
  return spectrum.tape->record(std::move(out), {ix, iw}, [ix, iw, ci, co, M](Tape<T>& t, std::size_t self) {
    const auto* g = reinterpret_cast<const C*>(t.grad_slot(self).raw());
    const auto* x = reinterpret_cast<const C*>(t.value(ix).raw());
    const auto* r = reinterpret_cast<const C*>(t.value(iw).raw());
    if (t.requires_grad(ix)) {
      auto* gx = reinterpret_cast<C*>(t.grad_slot(ix).raw());
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t o = 0; o < co; ++o) {
          const C go = g[o * M + m];
          const C* row = r + (m * co + o) * ci;
          for (std::size_t i = 0; i < ci; ++i) {
            // conj(r) * g
            const C a = row[i];
            gx[i * M + m] += C(a.real() * go.real() + a.imag() * go.imag(),
                               a.real() * go.imag() - a.imag() * go.real());
          }
        }
    }
    if (t.requires_grad(iw)) {
      auto* gw = reinterpret_cast<C*>(t.grad_slot(iw).raw());
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t o = 0; o < co; ++o) {
          const C go = g[o * M + m];
          C* row = gw + (m * co + o) * ci;
          for (std::size_t i = 0; i < ci; ++i) {
            // g * conj(x)
            const C b = x[i * M + m];
            row[i] += C(go.real() * b.real() + go.imag() * b.imag(),
                        go.imag() * b.real() - go.real() * b.imag());
          }
        }
    }
  });
}

// ---- reductions and loss ----------------------------------------------------

template <class T>
Var<T> sum(Var<T> x) {
  double acc = 0;
  for (T v : x.value().data()) acc += v;
  Tensor<T> out(Shape{}, static_cast<T>(acc));
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix](Tape<T>& t, std::size_t self) {
    const T g = t.grad_slot(self)[0];
    for (T& v : t.grad_slot(ix).data()) v += g;
  });
}

template <class T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.value().size();
  double acc = 0;
  for (T v : x.value().data()) acc += v;
  Tensor<T> out(Shape{}, static_cast<T>(acc / static_cast<double>(n)));
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ix, n](Tape<T>& t, std::size_t self) {
    const T g = static_cast<T>(t.grad_slot(self)[0] / static_cast<double>(n));
    for (T& v : t.grad_slot(ix).data()) v += g;
  });
}

template <class T>
T smooth_l1_value(std::span<const T> pred, std::span<const T> target, T beta) {
  if (pred.size() != target.size()) {
    throw ShapeMismatch("smooth_l1: " + std::to_string(pred.size()) + " vs " +
                        std::to_string(target.size()) + " elements");
  }
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    const double a = std::abs(d);
    acc += a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
  }
  return static_cast<T>(acc / static_cast<double>(pred.size()));
}

template <class T>
Var<T> smooth_l1(Var<T> pred, Var<T> target, T beta) {
  require_same_shape(pred.shape(), target.shape(), "smooth_l1");
  Tensor<T> out(Shape{}, smooth_l1_value<T>(pred.value().data(), target.value().data(), beta));
  const std::size_t ip = pred.id, it = target.id, n = pred.value().size();
  return pred.tape->record(std::move(out), {ip, it}, [ip, it, n, beta](Tape<T>& t, std::size_t self) {
    const T g = static_cast<T>(t.grad_slot(self)[0] / static_cast<double>(n));
    const Tensor<T>& p = t.value(ip);
    const Tensor<T>& y = t.value(it);
    auto dloss = [beta](T d) { return std::abs(d) < beta ? d / beta : (d > 0 ? T(1) : T(-1)); };
    if (t.requires_grad(ip)) {
      Tensor<T>& gp = t.grad_slot(ip);
      for (std::size_t i = 0; i < n; ++i) gp[i] += g * dloss(p[i] - y[i]);
    }
    if (t.requires_grad(it)) {
      Tensor<T>& gy = t.grad_slot(it);
      for (std::size_t i = 0; i < n; ++i) gy[i] -= g * dloss(p[i] - y[i]);
    }
  });
}

// ---- instantiation ----------------------------------------------------------

#define VOXTHERM_INSTANTIATE(T)                                                          \
  template class Tape<T>;                                                                \
  template Var<T> add<T>(Var<T>, Var<T>);                                                \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                \
  template Var<T> scale<T>(Var<T>, T);                                                   \
  template Var<T> gelu<T>(Var<T>);                                                       \
  template Var<T> channel_linear<T>(Var<T>, Var<T>, Var<T>);                             \
  template Var<T> channel_linear<T>(Var<T>, Var<T>);                                     \
  template Var<T> conv3d<T>(Var<T>, Var<T>, Var<T>, std::size_t);                        \
  template Var<T> upsample2<T>(Var<T>);                                                  \
  template Var<T> concat_channels<T>(Var<T>, Var<T>);                                    \
  template Var<T> rfft3<T>(Var<T>, std::shared_ptr<const fft::SpectrumLayout>);          \
  template Var<T> irfft3<T>(Var<T>, std::shared_ptr<const fft::SpectrumLayout>);         \
  template Var<T> spectral_mix<T>(Var<T>, Var<T>);                                       \
  template Var<T> sum<T>(Var<T>);                                                        \
  template Var<T> mean<T>(Var<T>);                                                       \
  template Var<T> smooth_l1<T>(Var<T>, Var<T>, T);                                       \
  template T smooth_l1_value<T>(std::span<const T>, std::span<const T>, T);

VOXTHERM_INSTANTIATE(float)
VOXTHERM_INSTANTIATE(double)

#undef VOXTHERM_INSTANTIATE

}  // namespace voxtherm::ad
