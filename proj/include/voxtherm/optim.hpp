#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "voxtherm/tensor.hpp"

namespace voxtherm {

/// Named, ordered model parameters.
template <class T>
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Tensor<T>> values;

  std::size_t add(std::string name, Tensor<T> value) {
    names.push_back(std::move(name));
    values.push_back(std::move(value));
    return values.size() - 1;
  }
  std::size_t size() const { return values.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values) n += v.size();
    return n;
  }
  std::size_t index_of(const std::string& name) const;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-8;  // decoupled
};

template <class T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::size_t step = 0;
};

/// One Adam update with bias correction. Decoupled weight decay is applied
/// first: p <- p - lr * wd * p. Throws ShapeMismatch.
template <class T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads,
               AdamState<T>& state, const AdamConfig& cfg);

/// Global L2 norm over every gradient, accumulated in double.
template <class T>
double global_grad_norm(const std::vector<Tensor<T>>& grads);

/// Scales every gradient by max_norm / norm when the global norm exceeds
/// max_norm. Returns the norm before clipping.
template <class T>
double clip_grad_norm(std::vector<Tensor<T>>& grads, double max_norm = 1.0);

/// Reduce-on-plateau learning rate policy on a minimized metric.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor = 0.5, std::size_t patience = 10, double min_lr = 1e-6,
                   double threshold = 1e-5)
      : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr), threshold_(threshold) {}

  /// Records one epoch's metric and returns the learning rate for the next epoch.
  double step(double metric);
  double lr() const { return lr_; }

 private:
  double lr_, factor_;
  std::size_t patience_;
  double min_lr_, threshold_;
  double best_ = 0;
  bool has_best_ = false;
  std::size_t bad_epochs_ = 0;
};

}  // namespace voxtherm
