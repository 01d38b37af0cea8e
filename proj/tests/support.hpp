#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "revib/layers.hpp"

namespace revib::testing {

using nn::Tensor;
using nn::Var;

inline Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (double& v : t.storage()) v = n(rng);
  return t;
}

// Naive triple-loop product of rank-2 tensors.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.dim(1); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

// Affine layers applied row by row with explicit loops.
inline Tensor naive_affine(const nn::ParamStore& ps, const nn::Linear& l, const Tensor& x) {
  Tensor y = naive_matmul(x, ps[l.weight].value());
  for (std::size_t r = 0; r < y.dim(0); ++r)
    for (std::size_t c = 0; c < y.dim(1); ++c) y(r, c) += ps[l.bias].value()[c];
  return y;
}

inline Tensor naive_mlp(const nn::ParamStore& ps, const nn::Mlp& mlp, Tensor x) {
  auto act = [](Tensor t, nn::Activation a) {
    for (double& v : t.storage()) {
      if (a == nn::Activation::kRelu) v = v > 0 ? v : 0.0;
      if (a == nn::Activation::kTanh) v = std::tanh(v);
    }
    return t;
  };
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    x = act(naive_affine(ps, mlp.layers[i], x),
            i + 1 < mlp.layers.size() ? mlp.hidden : mlp.output);
  }
  return x;
}

struct GradReport {
  std::string worst_name;
  double worst = 0.0;  // largest per-tensor relative error
  std::size_t checked = 0;
};

// Relative error between analytic and central-difference gradients,
// ||a - fd|| / max(sqrt(||a||^2 + ||fd||^2), 1e-5 max(1, |loss|)), per leaf tensor; the floor keeps
// gradients that are exactly zero (a key bias under softmax) from reporting
// pure rounding noise as relative error. At most
// `per_tensor` entries of each tensor are probed.
inline GradReport check_leaves(const std::vector<std::pair<std::string, Var>>& leaves,
                               const std::function<Var()>& loss, double h = 1e-5,
                               std::size_t per_tensor = 24) {
  for (auto [name, v] : leaves) v.zero_grad();
  const Var l0 = loss();
  const double floor = 1e-5 * std::max(1.0, std::abs(l0.value()[0]));
  nn::backward(l0);
  GradReport report;
  std::mt19937_64 pick(7);
  for (const auto& [name, leaf] : leaves) {
    Var v = leaf;
    const Tensor analytic = v.grad().empty() ? Tensor(v.shape()) : v.grad();
    std::vector<std::size_t> idx(v.value().numel());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), pick);
    if (idx.size() > per_tensor) idx.resize(per_tensor);
    double diff = 0.0, norm = 0.0;
    for (std::size_t i : idx) {
      double& x = v.mutable_value().storage()[i];
      const double saved = x;
      double up, down;
      {
        nn::NoGradGuard g;
        x = saved + h;
        up = loss().value()[0];
        x = saved - h;
        down = loss().value()[0];
      }
      x = saved;
      const double fd = (up - down) / (2 * h);
      diff += (analytic[i] - fd) * (analytic[i] - fd);
      norm += analytic[i] * analytic[i] + fd * fd;
      ++report.checked;
    }
    const double rel = std::sqrt(diff) / std::max(std::sqrt(norm), floor);
    if (rel > report.worst) {
      report.worst = rel;
      report.worst_name = name;
    }
  }
  return report;
}

inline GradReport check_params(nn::ParamStore& ps, const std::function<Var()>& loss,
                               double h = 1e-5, std::size_t per_tensor = 24) {
  std::vector<std::pair<std::string, Var>> leaves;
  for (nn::ParamId id = 0; id < ps.size(); ++id) leaves.emplace_back(ps.name(id), ps[id]);
  return check_leaves(leaves, loss, h, per_tensor);
}

}  // namespace revib::testing
