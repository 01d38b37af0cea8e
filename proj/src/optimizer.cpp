#include "revib/optimizer.hpp"

#include <cmath>

#include "revib/errors.hpp"

namespace revib::nn {

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const AdamConfig& cfg,
                 long t) {
  if (t < 1) throw ContractError("adam step count must be >= 1");
  if (grad.shape() != param.shape() || m.shape() != param.shape() || v.shape() != param.shape()) {
    throw ShapeError("adam: state shapes do not match parameter " + shape_str(param.shape()));
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.numel(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

void Adam::step(ParamStore& ps) {
  if (m_.empty()) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      m_.emplace_back(ps[i].shape());
      v_.emplace_back(ps[i].shape());
    }
  }
  if (m_.size() != ps.size()) throw ShapeError("adam: parameter count changed between steps");
  ++t_;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Var& p = ps[i];
    Tensor grad = p.grad().numel() == p.value().numel() ? p.grad() : Tensor(p.shape());
    adam_update(p.mutable_value(), grad, m_[i], v_[i], cfg_, t_);
  }
}

}  // namespace revib::nn
