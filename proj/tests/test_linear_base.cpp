#include <gtest/gtest.h>

#include <random>

#include "revib/errors.hpp"
#include "revib/linear_base.hpp"
#include "support.hpp"

using namespace revib;
using namespace revib::linear;
using nn::Tensor;
using revib::testing::random_tensor;

namespace {

// Normal equations (A^T A) w = A^T X with A rows (1, t), solved by
// Gaussian elimination on the 2x2 system.
std::array<std::array<double, 2>, 2> normal_equations(const Tensor& x) {
  double s00 = 0, s01 = 0, s11 = 0;
  std::array<double, 2> b0{}, b1{};
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    const double t = static_cast<double>(i + 1);
    s00 += 1;
    s01 += t;
    s11 += t * t;
    for (std::size_t c = 0; c < 2; ++c) {
      b0[c] += x(i, c);
      b1[c] += t * x(i, c);
    }
  }
  std::array<std::array<double, 2>, 2> w{};
  const double f = s01 / s00;
  for (std::size_t c = 0; c < 2; ++c) {
    const double slope = (b1[c] - f * b0[c]) / (s11 - f * s01);
    w[1][c] = slope;
    w[0][c] = (b0[c] - s01 * slope) / s00;
  }
  return w;
}

double squared_error(const Tensor& x, const LinearWeights& w) {
  return (x - evaluate(w, 1, static_cast<int>(x.dim(0)))).squared_norm();
}

}  // namespace

TEST(LinearFit, ConstantObservation) {
  Tensor x({8, 2});
  for (std::size_t t = 0; t < 8; ++t) {
    x(t, 0) = 3;
    x(t, 1) = -1;
  }
  const LinearWeights w = fit(x);
  EXPECT_NEAR(w.intercept(0), 3, 1e-12);
  EXPECT_NEAR(w.intercept(1), -1, 1e-12);
  EXPECT_NEAR(w.slope(0), 0, 1e-12);
  EXPECT_NEAR(w.slope(1), 0, 1e-12);
}

TEST(LinearFit, ExactLine) {
  Tensor x({8, 2});
  for (std::size_t t = 0; t < 8; ++t) {
    x(t, 0) = static_cast<double>(t + 1);
    x(t, 1) = 2.0 * static_cast<double>(t + 1);
  }
  const LinearWeights w = fit(x);
  EXPECT_NEAR(w.intercept(0), 0, 1e-12);
  EXPECT_NEAR(w.slope(1), 2, 1e-12);
  EXPECT_LT(squared_error(x, w), 1e-20);
}

TEST(LinearFit, MatchesNormalEquationsOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor({8, 2}, rng, 3.0);
    const auto oracle = normal_equations(x);
    const LinearWeights w = fit(x);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(w.w[r][c], oracle[r][c], 1e-9);
  }
}

TEST(LinearFit, TooFewStepsRejected) {
  EXPECT_THROW(fit(Tensor({1, 2})), Error);
}

TEST(LinearFitProperty, ResidualOrthogonalAndMinimal) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> small(0.0, 1e-3);
  for (int trial = 0; trial < 30; ++trial) {
    const Tensor x = random_tensor({8, 2}, rng, 2.0);
    const LinearWeights w = fit(x);
    const Tensor r = x - evaluate(w, 1, 8);
    for (std::size_t c = 0; c < 2; ++c) {
      double s0 = 0, s1 = 0;
      for (std::size_t t = 0; t < 8; ++t) {
        s0 += r(t, c);
        s1 += static_cast<double>(t + 1) * r(t, c);
      }
      EXPECT_NEAR(s0, 0, 1e-8);
      EXPECT_NEAR(s1, 0, 1e-8);
    }
    const double best = squared_error(x, w);
    for (int k = 0; k < 5; ++k) {
      LinearWeights p = w;
      for (auto& row : p.w)
        for (double& v : row) v += small(rng);
      EXPECT_GE(squared_error(x, p), best);
    }
  }
}

TEST(Extrapolate, ZeroSlopeRowsEqualIntercept) {
  LinearWeights w;
  w.w = {{{4, -2}, {0, 0}}};
  const Tensor b = extrapolate(w, 8, 5);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(b(t, 0), 4);
    EXPECT_EQ(b(t, 1), -2);
  }
}

TEST(Extrapolate, Arithmetic) {
  LinearWeights w;
  w.w = {{{0, 0}, {1, 2}}};
  EXPECT_EQ(extrapolate(w, 8, 3), Tensor::matrix(3, 2, {9, 18, 10, 20, 11, 22}));
}

TEST(Extrapolate, FitAndBaseAreCollinear) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearPair p = linear_base(random_tensor({8, 2}, rng, 4.0), 12);
    std::vector<std::array<double, 2>> pts;
    for (std::size_t t = 0; t < 8; ++t) pts.push_back({p.fit(t, 0), p.fit(t, 1)});
    for (std::size_t t = 0; t < 12; ++t) pts.push_back({p.base(t, 0), p.base(t, 1)});
    for (std::size_t i = 1; i + 1 < pts.size(); ++i)
      for (std::size_t c = 0; c < 2; ++c) {
        EXPECT_NEAR(pts[i + 1][c] - 2 * pts[i][c] + pts[i - 1][c], 0.0, 1e-9);
      }
  }
}

TEST(Continuity, ExactLineNeedsNoTranslation) {
  Tensor x({8, 2});
  for (std::size_t t = 0; t < 8; ++t) {
    x(t, 0) = 0.5 * static_cast<double>(t);
    x(t, 1) = 1.0 - 0.25 * static_cast<double>(t);
  }
  const LinearPair p = linear_base(x, 12);
  EXPECT_NEAR(p.translation[0], 0, 1e-12);
  EXPECT_NEAR(p.translation[1], 0, 1e-12);
}

TEST(Continuity, ShiftsByEndpointResidual) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({8, 2}, rng);
  const LinearWeights w = fit(x);
  const LinearPair raw = make_pair(w, 8, 12);
  const LinearPair moved = continuity_translate(raw, x);
  for (std::size_t c = 0; c < 2; ++c) {
    const double residual = x(7, c) - raw.fit(7, c);
    EXPECT_NEAR(moved.translation[c], residual, 1e-12);
    for (std::size_t t = 0; t < 12; ++t) EXPECT_NEAR(moved.base(t, c), raw.base(t, c) + residual, 1e-12);
    EXPECT_EQ(moved.fit(7, c), x(7, c));
  }
  const LinearPair twice = continuity_translate(moved, x);
  EXPECT_EQ(twice.fit, moved.fit);
  EXPECT_EQ(twice.base, moved.base);
}

TEST(Continuity, OffsetLastPoint) {
  Tensor x({8, 2});
  for (std::size_t t = 0; t < 8; ++t) x(t, 0) = x(t, 1) = static_cast<double>(t);
  x(7, 0) += 1.0;
  x(7, 1) += 1.0;
  const LinearPair raw = make_pair(fit(x), 8, 12);
  const LinearPair p = continuity_translate(raw, x);
  const double r = x(7, 0) - raw.fit(7, 0);
  EXPECT_GT(r, 0.0);
  EXPECT_NEAR(p.base(0, 0) - raw.base(0, 0), r, 1e-12);
  EXPECT_NEAR(p.base(0, 1) - raw.base(0, 1), r, 1e-12);
}

TEST(ContinuityProperty, EndpointExactOnRandomInputs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_tensor({8, 2}, rng, 10.0);
    const LinearPair p = linear_base(x, 12);
    EXPECT_EQ(p.fit(7, 0), x(7, 0));
    EXPECT_EQ(p.fit(7, 1), x(7, 1));
  }
}
