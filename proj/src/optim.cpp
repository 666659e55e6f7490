#include "voxtherm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voxtherm/error.hpp"

namespace voxtherm {

template <class T>
std::size_t ParameterSet<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw MissingEntry("no parameter named '" + name + "'");
}

template <class T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads,
               AdamState<T>& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw ShapeMismatch("adam_step: " + std::to_string(params.size()) + " parameters vs " +
                        std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.shape());
      state.v.emplace_back(p.shape());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k].shape(), grads[k].shape(), "adam_step");
    T* p = params[k].raw();
    const T* g = grads[k].raw();
    T* m = state.m[k].raw();
    T* v = state.v[k].raw();
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      const double decayed = decay * static_cast<double>(p[i]);
      p[i] = static_cast<T>(decayed - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

template <class T>
double global_grad_norm(const std::vector<Tensor<T>>& grads) {
  double acc = 0;
  for (const auto& g : grads)
    for (T v : g.data()) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

template <class T>
double clip_grad_norm(std::vector<Tensor<T>>& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (T& v : g.data()) v = static_cast<T>(static_cast<double>(v) * s);
    // Rounding to T can leave the norm a few ulps above the bound.
    const double shrink = 1.0 - 4.0 * static_cast<double>(std::numeric_limits<T>::epsilon());
    while (global_grad_norm(grads) > max_norm) {
      for (auto& g : grads)
        for (T& v : g.data()) v = static_cast<T>(static_cast<double>(v) * shrink);
    }
  }
  return norm;
}

double PlateauScheduler::step(double metric) {
  if (!has_best_ || metric < best_ - threshold_) {
    best_ = metric;
    has_best_ = true;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    lr_ = std::max(min_lr_, lr_ * factor_);
    bad_epochs_ = 0;
  }
  return lr_;
}

template struct ParameterSet<float>;
template struct ParameterSet<double>;
template void adam_step<float>(std::vector<Tensor<float>>&, const std::vector<Tensor<float>>&,
                               AdamState<float>&, const AdamConfig&);
template void adam_step<double>(std::vector<Tensor<double>>&, const std::vector<Tensor<double>>&,
                                AdamState<double>&, const AdamConfig&);
template double global_grad_norm<float>(const std::vector<Tensor<float>>&);
template double global_grad_norm<double>(const std::vector<Tensor<double>>&);
template double clip_grad_norm<float>(std::vector<Tensor<float>>&, double);
template double clip_grad_norm<double>(std::vector<Tensor<double>>&, double);

}  // namespace voxtherm
