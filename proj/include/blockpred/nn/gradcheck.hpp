#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "blockpred/nn/tensor.hpp"
#include "blockpred/rng.hpp"

namespace blockpred::nn {

// Anything exposing double-precision parameters, a deterministic loss and a
// loss that also accumulates analytic gradients.
template <class Net, class Input>
concept GradCheckable = requires(Net& net, const Input& x, std::size_t label) {
  { net.params() } -> std::convertible_to<std::vector<ParamRef<double>>>;
  net.zero_grad();
  { net.loss(x, label) } -> std::convertible_to<double>;
  { net.loss_and_grad(x, label) } -> std::convertible_to<double>;
};

struct GradCheckOptions {
  std::size_t samples_per_tensor = 200;
  double relative_step = 1e-5;
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string param;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t skipped = 0; // probes that crossed a kink
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::vector<GradCheckEntry> per_param;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Networks with piecewise-linear parts can also report a fingerprint of their
// active pieces (ReLU signs, pooling winners) next to the loss.
template <class Net, class Input>
concept PatternReporting = requires(const Net& net, const Input& x, std::size_t label) {
  { net.loss_and_pattern(x, label) } -> std::convertible_to<std::pair<double, std::uint64_t>>;
};

// Compares analytic gradients against central differences with step
// h = relative_step * max(1, |theta|) on a random subset of each tensor.
// When the net reports activation patterns, a coordinate whose +-h probes
// change the pattern straddles a kink, where the central difference does not
// estimate the derivative; it is counted as skipped and another is drawn.
template <class Input, GradCheckable<Input> Net>
GradCheckReport gradient_check(Net& net, const Input& x, std::size_t label, const GradCheckOptions& opt = {}) {
  net.zero_grad();
  net.loss_and_grad(x, label);
  auto params = net.params();
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);

  std::uint64_t base_pattern = 0;
  if constexpr (PatternReporting<Net, Input>) base_pattern = std::as_const(net).loss_and_pattern(x, label).second;
  auto probe = [&](bool& kink) {
    if constexpr (PatternReporting<Net, Input>) {
      const auto [l, pat] = std::as_const(net).loss_and_pattern(x, label);
      kink = kink || pat != base_pattern;
      return static_cast<double>(l);
    } else {
      return static_cast<double>(net.loss(x, label));
    }
  };

  Rng rng = Rng::derive(opt.seed, "gradcheck");
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<double>& theta = *params[k].value;
    std::vector<std::size_t> idx(theta.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t want = std::min(opt.samples_per_tensor, idx.size());

    GradCheckEntry entry{params[k].name, 0, 0.0};
    for (std::size_t s = 0; s < idx.size() && entry.checked < want; ++s) {
      std::swap(idx[s], idx[s + rng.below(idx.size() - s)]);
      const std::size_t i = idx[s];
      const double orig = theta[i];
      const double h = opt.relative_step * std::max(1.0, std::abs(orig));
      bool kink = false;
      theta[i] = orig + h;
      const double up = probe(kink);
      theta[i] = orig - h;
      const double down = probe(kink);
      theta[i] = orig;
      if (kink) {
        ++entry.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * h);
      entry.max_rel_error =
          std::max(entry.max_rel_error, relative_error(analytic[k][i], numeric, opt.denominator_floor));
      ++entry.checked;
    }
    report.checked += entry.checked;
    report.skipped += entry.skipped;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_param.push_back(entry);
  }
  return report;
}

} // namespace blockpred::nn
