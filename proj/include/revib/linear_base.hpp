#pragma once

#include <array>

#include "revib/tensor.hpp"

namespace revib::linear {

using nn::Tensor;

// Least-squares line through an observation, parameterized over the step
// index t = 1..t_h. Row 0 holds the intercepts, row 1 the slopes (per step);
// column 0 is x, column 1 is y.
struct LinearWeights {
  std::array<std::array<double, 2>, 2> w{};

  double intercept(std::size_t channel) const { return w[0][channel]; }
  double slope(std::size_t channel) const { return w[1][channel]; }
};

// Fit over the observation window and the extrapolated base over the
// future window, both shifted by the same translation.
struct LinearPair {
  Tensor fit;   // [t_h, 2]
  Tensor base;  // [t_f, 2]
  std::array<double, 2> translation{0.0, 0.0};
};

// Closed-form 2x2 normal equations with design rows (1, t), t = 1..t_h.
LinearWeights fit(const Tensor& obs);

// Rows (1, t) * w for t = first_step .. first_step + count - 1.
Tensor evaluate(const LinearWeights& w, int first_step, int count);
Tensor extrapolate(const LinearWeights& w, int t_h, int t_f);

LinearPair make_pair(const LinearWeights& w, int t_h, int t_f);

// Shifts fit and base so the fit passes through the last observed point.
// The fit's last row is set to that point exactly; applying it twice is a
// no-op.
LinearPair continuity_translate(const LinearPair& pair, const Tensor& obs);

// fit -> make_pair -> continuity_translate.
LinearPair linear_base(const Tensor& obs, int t_f);

}  // namespace revib::linear
