#pragma once

// The blockage-prediction CNN: two stacks of (conv 3x3 + ReLU) x 2 followed
// by max pooling, then flatten, dropout and a 512 -> 2 dense classifier.

#include <array>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockpred/dataset.hpp"
#include "blockpred/digest.hpp"
#include "blockpred/nn.hpp"
#include "blockpred/rng.hpp"

namespace blockpred {

struct ConvSpec {
  std::size_t in_channels;
  std::size_t out_channels;
};

inline constexpr std::array<ConvSpec, 4> kConvSpecs{{{2, 8}, {8, 16}, {16, 16}, {16, 32}}};
inline constexpr std::size_t kFlattenLength = 512;
inline constexpr std::size_t kClasses = 2;
// Total reported for the SCR variant in the published parameter table; the
// layer list itself counts to the same total as the raw variant.
inline constexpr std::size_t kPublishedScrParamCount = 6883;

struct VariantSpec {
  std::size_t width;
  nn::MaxPool2d pool1;
  nn::MaxPool2d pool2;
};

inline VariantSpec variant_spec(Variant v) {
  if (v == Variant::raw460) return {460, {2, 23}, {2, 5}};
  return {216, {2, 9}, {2, 6}};
}

struct ModelConfig {
  Variant variant = Variant::scr216;
  std::size_t t_ob = 16;
  double dropout_rate = 0.2;
  std::size_t epochs = 1000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

template <class T>
class BlockageCnn {
public:
  explicit BlockageCnn(const ModelConfig& cfg) : cfg_(cfg), spec_(variant_spec(cfg.variant)) {
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) throw ConfigError("model: dropout_rate must be in [0,1)");
    for (std::size_t i = 0; i < conv_.size(); ++i) conv_[i] = nn::Conv2d<T>(kConvSpecs[i].in_channels, kConvSpecs[i].out_channels);
    const auto trace = shape_trace();
    const std::size_t flat = nn::shape_size(trace.back());
    if (flat != kFlattenLength)
      throw ShapeError("model: flatten length " + std::to_string(flat) + " != " + std::to_string(kFlattenLength));
    dense_ = nn::Dense<T>(flat, kClasses);
    Rng rng = Rng::derive(cfg.seed, "init");
    for (auto& c : conv_) nn::init_uniform_fan_in(c.weight, c.bias, c.in_channels * 9, rng);
    nn::init_uniform_fan_in(dense_.weight, dense_.bias, dense_.in_features, rng);
    zero_grad();
  }

  const ModelConfig& config() const { return cfg_; }
  nn::Shape input_shape() const { return {kConvSpecs[0].in_channels, cfg_.t_ob, spec_.width}; }

  // Input, after pool 1, after pool 2.
  std::vector<nn::Shape> shape_trace() const {
    nn::Shape s = input_shape();
    std::vector<nn::Shape> out{s};
    s[0] = kConvSpecs[1].out_channels;
    s = spec_.pool1.output_shape(s);
    out.push_back(s);
    s[0] = kConvSpecs[3].out_channels;
    s = spec_.pool2.output_shape(s);
    out.push_back(s);
    return out;
  }

  std::size_t param_count() const {
    std::size_t n = dense_.param_count();
    for (const auto& c : conv_) n += c.param_count();
    return n;
  }

  nn::Tensor<T> logits(const nn::Tensor<T>& x) const {
    Activations a;
    return forward(x, nn::Mode::eval, nullptr, a);
  }

  nn::Tensor<T> predict(const nn::Tensor<T>& x) const { return nn::softmax(logits(x)); }

  // Loss in eval mode (no dropout).
  T loss(const nn::Tensor<T>& x, std::size_t label) const { return nn::softmax_ce(logits(x), label).loss; }

  // Eval-mode loss plus a fingerprint of the ReLU signs and pooling winners.
  std::pair<T, std::uint64_t> loss_and_pattern(const nn::Tensor<T>& x, std::size_t label) const {
    Activations a;
    const T l = nn::softmax_ce(forward(x, nn::Mode::eval, nullptr, a), label).loss;
    Fnv1a h;
    for (const auto& pre : a.conv_out) {
      std::uint64_t word = 0;
      std::size_t n = 0;
      for (T v : pre.data()) {
        word = (word << 1) | (v > T(0));
        if (++n % 64 == 0) h.add(std::exchange(word, 0));
      }
      h.add(word);
    }
    h.add(std::span<const std::uint32_t>(a.pool1_arg));
    h.add(std::span<const std::uint32_t>(a.pool2_arg));
    return {l, h.value()};
  }

  // Forward + backward; parameter gradients are accumulated. Dropout is
  // active only when an rng is supplied.
  T loss_and_grad(const nn::Tensor<T>& x, std::size_t label, Rng* dropout_rng = nullptr) {
    Activations a;
    const auto mode = dropout_rng ? nn::Mode::train : nn::Mode::eval;
    const auto out = nn::softmax_ce(forward(x, mode, dropout_rng, a), label);
    backward(a, out.grad_logits);
    return out.loss;
  }

  void zero_grad() {
    for (std::size_t i = 0; i < conv_.size(); ++i) {
      grad_conv_[i].weight = nn::Tensor<T>(conv_[i].weight.shape());
      grad_conv_[i].bias = nn::Tensor<T>(conv_[i].bias.shape());
    }
    grad_dense_.weight = nn::Tensor<T>(dense_.weight.shape());
    grad_dense_.bias = nn::Tensor<T>(dense_.bias.shape());
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> p;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
      const std::string name = "conv" + std::to_string(i + 1);
      p.push_back({name + ".weight", &conv_[i].weight, &grad_conv_[i].weight});
      p.push_back({name + ".bias", &conv_[i].bias, &grad_conv_[i].bias});
    }
    p.push_back({"fc.weight", &dense_.weight, &grad_dense_.weight});
    p.push_back({"fc.bias", &dense_.bias, &grad_dense_.bias});
    return p;
  }

  std::vector<nn::NamedTensor<T>> state() const {
    std::vector<nn::NamedTensor<T>> s;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
      const std::string name = "conv" + std::to_string(i + 1);
      s.push_back({name + ".weight", conv_[i].weight});
      s.push_back({name + ".bias", conv_[i].bias});
    }
    s.push_back({"fc.weight", dense_.weight});
    s.push_back({"fc.bias", dense_.bias});
    return s;
  }

  void load_state(const std::vector<nn::NamedTensor<T>>& s) {
    auto p = params();
    if (s.size() != p.size()) throw ShapeError("model: checkpoint has " + std::to_string(s.size()) + " tensors");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (s[i].name != p[i].name) throw ShapeError("model: checkpoint tensor " + s[i].name + " != " + p[i].name);
      nn::require_shape(s[i].tensor, p[i].value->shape(), p[i].name.c_str());
      *p[i].value = s[i].tensor;
    }
  }

  std::uint64_t digest() const {
    Fnv1a h;
    for (const auto& t : state()) {
      h.add(std::string_view(t.name));
      h.add(t.tensor.data());
    }
    return h.value();
  }

  nn::Conv2d<T>& conv(std::size_t i) { return conv_.at(i); }
  nn::Dense<T>& dense() { return dense_; }

private:
  struct Activations {
    std::array<nn::Tensor<T>, 4> conv_in;  // input of each conv
    std::array<nn::Tensor<T>, 4> conv_out; // pre-activation
    nn::Tensor<T> pool1_in, pool2_in;
    std::vector<std::uint32_t> pool1_arg, pool2_arg;
    nn::Tensor<T> flat;
    std::vector<T> drop_mask;
    nn::Tensor<T> dense_in;
  };

  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode, Rng* rng, Activations& a) const {
    nn::require_shape(x, input_shape(), "model input");
    nn::Tensor<T> h = x;
    for (std::size_t i = 0; i < 4; ++i) {
      a.conv_in[i] = std::move(h);
      a.conv_out[i] = nn::conv2d_forward(conv_[i], a.conv_in[i]);
      h = nn::relu_forward(a.conv_out[i]);
      if (i == 1) {
        a.pool1_in = std::move(h);
        h = nn::maxpool_forward(spec_.pool1, a.pool1_in, &a.pool1_arg);
      } else if (i == 3) {
        a.pool2_in = std::move(h);
        h = nn::maxpool_forward(spec_.pool2, a.pool2_in, &a.pool2_arg);
      }
    }
    a.flat = std::move(h);
    a.flat.reshape({a.flat.size()});
    a.dense_in = nn::dropout_forward(a.flat, cfg_.dropout_rate, mode, rng, &a.drop_mask);
    return nn::dense_forward(dense_, a.dense_in);
  }

  void backward(const Activations& a, const nn::Tensor<T>& grad_logits) {
    nn::Tensor<T> g = nn::dense_backward(dense_, a.dense_in, grad_logits, grad_dense_.weight, grad_dense_.bias);
    g = nn::dropout_backward(a.drop_mask, g);
    g.reshape(spec_.pool2.output_shape(a.pool2_in.shape()));
    for (std::size_t k = 4; k-- > 0;) {
      if (k == 3) g = nn::maxpool_backward(a.pool2_in.shape(), a.pool2_arg, g);
      if (k == 1) g = nn::maxpool_backward(a.pool1_in.shape(), a.pool1_arg, g);
      g = nn::relu_backward(a.conv_out[k], g);
      nn::Tensor<T> gin;
      nn::conv2d_backward_into(conv_[k], a.conv_in[k], g, k > 0 ? &gin : nullptr, grad_conv_[k].weight,
                               grad_conv_[k].bias);
      g = std::move(gin);
    }
  }

  struct Grad {
    nn::Tensor<T> weight, bias;
  };

  ModelConfig cfg_;
  VariantSpec spec_;
  std::array<nn::Conv2d<T>, 4> conv_;
  nn::Dense<T> dense_;
  std::array<Grad, 4> grad_conv_;
  Grad grad_dense_;
};

using Model = BlockageCnn<float>;

struct EvalResult {
  double top1 = 0.0;
  std::array<double, 2> recall{0.0, 0.0}; // NaN when a class is absent
  std::array<std::size_t, 2> class_count{0, 0};
  std::array<std::array<std::size_t, 2>, 2> confusion{}; // [label][predicted]
  std::size_t n = 0;
};

inline EvalResult summarize(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predicted) {
  if (labels.empty()) throw DataError("evaluate: empty window set");
  if (labels.size() != predicted.size()) throw DataError("evaluate: label/prediction count mismatch");
  EvalResult r;
  r.n = labels.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    r.confusion[labels[i]][predicted[i]] += 1;
    r.class_count[labels[i]] += 1;
    correct += labels[i] == predicted[i];
  }
  r.top1 = static_cast<double>(correct) / static_cast<double>(r.n);
  for (std::size_t c = 0; c < 2; ++c) {
    r.recall[c] = r.class_count[c] ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.class_count[c])
                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

template <class T>
std::uint8_t predicted_class(const BlockageCnn<T>& model, const nn::Tensor<T>& x) {
  const auto z = model.logits(x);
  return z[1] > z[0] ? 1 : 0; // ties go to class 0
}

// Top-1 accuracy and per-class recall over the selected windows.
inline EvalResult evaluate(const Model& model, std::span<const ObservationWindow> windows,
                           std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("evaluate: empty window set");
  std::vector<std::uint8_t> labels, pred;
  labels.reserve(indices.size());
  pred.reserve(indices.size());
  for (std::size_t i : indices) {
    labels.push_back(windows[i].label);
    pred.push_back(predicted_class(model, windows[i].x));
  }
  return summarize(labels, pred);
}

inline EvalResult evaluate(const Model& model, std::span<const ObservationWindow> windows) {
  std::vector<std::size_t> idx(windows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return evaluate(model, windows, idx);
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_top1 = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_test_top1 = 0.0;
  std::uint64_t final_digest = 0;
  std::uint64_t best_digest = 0;
  double wall_seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const EpochStats&)> on_epoch;
};

// Mini-batch Adam on summed per-example cross-entropy gradients (averaged
// over the batch). The model keeps the final parameters; the parameters of
// the epoch with the best test accuracy are copied into best_state.
inline TrainReport train(Model& model, const DevDataset& ds, std::vector<nn::NamedTensor<float>>* best_state = nullptr,
                         const TrainHooks& hooks = {}) {
  const auto& cfg = model.config();
  if (ds.config.variant != cfg.variant || variant_width(ds.config.variant) != model.input_shape()[2])
    throw ShapeError(std::string("train: dataset variant ") + to_string(ds.config.variant) + " does not match model " +
                     to_string(cfg.variant));
  const auto train_idx = ds.train_indices();
  const auto test_idx = ds.test_indices();
  if (train_idx.empty() || test_idx.empty()) throw DataError("train: empty train or test split");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  nn::Adam<float> opt({cfg.learning_rate});
  auto params = model.params();
  TrainReport report;
  report.best_test_top1 = -1.0;
  std::vector<std::size_t> order = train_idx;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle = Rng::derive(cfg.seed, "shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    Rng drop = Rng::derive(cfg.seed, "dropout", epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      model.zero_grad();
      for (std::size_t k = b; k < e; ++k) {
        const auto& w = ds.windows[order[k]];
        loss_sum += model.loss_and_grad(w.x, w.label, &drop);
      }
      const float scale = 1.0f / static_cast<float>(e - b);
      for (auto& p : params) {
        for (auto& g : p.grad->data()) g *= scale;
      }
      opt.step(params);
    }
    EpochStats st{epoch, loss_sum / static_cast<double>(order.size()), evaluate(model, ds.windows, test_idx).top1};
    report.epochs.push_back(st);
    if (st.test_top1 > report.best_test_top1) {
      report.best_test_top1 = st.test_top1;
      report.best_epoch = epoch;
      report.best_digest = model.digest();
      if (best_state) *best_state = model.state();
    }
    if (hooks.on_epoch) hooks.on_epoch(st);
  }
  report.final_digest = model.digest();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline nlohmann::json model_meta(const ModelConfig& cfg) {
  return {{"variant", to_string(cfg.variant)},
          {"t_ob", cfg.t_ob},
          {"dropout_rate", cfg.dropout_rate},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"seed", cfg.seed}};
}

inline void save_model(const std::string& path, const Model& model, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json meta = model_meta(model.config());
  meta["extra"] = std::move(extra);
  nn::save_checkpoint(path, model.state(), meta);
}

inline Model load_model(const std::string& path) {
  auto ck = nn::load_checkpoint<float>(path);
  ModelConfig cfg;
  try {
    cfg.variant = parse_variant(ck.meta.at("variant").get<std::string>());
    cfg.t_ob = ck.meta.at("t_ob").get<std::size_t>();
    cfg.dropout_rate = ck.meta.at("dropout_rate").get<double>();
    cfg.epochs = ck.meta.at("epochs").get<std::size_t>();
    cfg.batch_size = ck.meta.at("batch_size").get<std::size_t>();
    cfg.learning_rate = ck.meta.at("learning_rate").get<double>();
    cfg.seed = ck.meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_header, std::string("checkpoint meta: ") + e.what());
  }
  Model m(cfg);
  m.load_state(ck.tensors);
  return m;
}

} // namespace blockpred
