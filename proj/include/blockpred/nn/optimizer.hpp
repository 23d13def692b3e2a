#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "blockpred/nn/tensor.hpp"

namespace blockpred::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer with bias correction.
template <class T>
class Adam {
public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps() const { return step_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

  void step(std::span<const ParamRef<T>> params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
      }
    }
    if (m_.size() != params.size()) throw ShapeError("adam: parameter count changed between steps");
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T lr = static_cast<T>(cfg_.learning_rate), eps = static_cast<T>(cfg_.epsilon);
    const T inv_c1 = static_cast<T>(1.0 / c1), inv_c2 = static_cast<T>(1.0 / c2);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T>& w = *params[k].value;
      const Tensor<T>& g = *params[k].grad;
      if (g.shape() != w.shape() || m_[k].shape() != w.shape())
        throw ShapeError("adam: shape mismatch for " + params[k].name);
      T* m = m_[k].ptr();
      T* v = v_[k].ptr();
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T m_hat = m[i] * inv_c1;
        const T v_hat = v[i] * inv_c2;
        w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

} // namespace blockpred::nn
