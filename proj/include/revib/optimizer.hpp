#pragma once

#include <vector>

#include "revib/layers.hpp"

namespace revib::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected adaptive-moment update of `param` in place; `t` is the
// 1-based step count.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const AdamConfig& cfg,
                 long t);

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update to every parameter using its accumulated gradient.
  void step(ParamStore& ps);
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace revib::nn
