#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "blockpred/nn/tensor.hpp"

namespace blockpred::nn {

template <class T>
struct SoftmaxCe {
  T loss{};
  Tensor<T> probs;
  Tensor<T> grad_logits;
};

template <class T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p = logits;
  const T m = *std::max_element(p.data().begin(), p.data().end());
  T sum = T(0);
  for (auto& v : p.data()) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : p.data()) v /= sum;
  return p;
}

// Cross-entropy of a softmax over logits; gradient is p - onehot(label).
template <class T>
SoftmaxCe<T> softmax_ce(const Tensor<T>& logits, std::size_t label) {
  if (logits.empty() || label >= logits.size()) throw ShapeError("softmax_ce: label out of range");
  SoftmaxCe<T> r;
  const T m = *std::max_element(logits.data().begin(), logits.data().end());
  T sum = T(0);
  for (T v : logits.data()) sum += std::exp(v - m);
  const T log_sum = std::log(sum);
  r.loss = -(logits[label] - m - log_sum);
  r.probs = Tensor<T>(logits.shape());
  for (std::size_t i = 0; i < logits.size(); ++i) r.probs[i] = std::exp(logits[i] - m - log_sum);
  r.grad_logits = r.probs;
  r.grad_logits[label] -= T(1);
  return r;
}

} // namespace blockpred::nn
