#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "revib/diagnostics.hpp"
#include "revib/errors.hpp"
#include "revib/synthetic.hpp"
#include "support.hpp"

using namespace revib;
using namespace revib::diagnostics;
using revib::testing::random_tensor;

namespace {

constexpr double kPi = std::numbers::pi;

BiasSet bias(double lin, double self, double re) {
  BiasSet b;
  b.base = Tensor({12, 2});
  b.self_bias = Tensor({12, 2});
  b.re_bias = Tensor({12, 2});
  b.base(0, 0) = lin;
  b.self_bias(3, 1) = self;
  b.re_bias(11, 0) = re;
  b.sum = b.base + b.self_bias + b.re_bias;
  return b;
}

Tensor points_along(double angle, const std::vector<double>& s) {
  Tensor p({s.size(), 2});
  for (std::size_t i = 0; i < s.size(); ++i) {
    p(i, 0) = s[i] * std::cos(angle);
    p(i, 1) = s[i] * std::sin(angle);
  }
  return p;
}

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.transformer = {8, 2, 1, 0};
  return cfg;
}

data::Sample avoid_sample(std::uint64_t seed) {
  const auto scenes = data::generate_synthetic(data::SyntheticKind::kAvoid, 1, seed, {});
  return data::make_samples(scenes.front(), {}).front();
}

}  // namespace

TEST(EnergyShares, WorkedExample) {
  // Energies 9, 16, 0 then 0, 0, 25: total 50.
  const auto s = bias_energy_shares({{bias(3, 4, 0)}, {bias(0, 0, 5)}});
  EXPECT_NEAR(s.linear, 18.0, 1e-12);
  EXPECT_NEAR(s.self, 32.0, 1e-12);
  EXPECT_NEAR(s.re, 50.0, 1e-12);
}

TEST(EnergyShares, MatchesOracleAndSumsToHundred) {
  std::mt19937_64 rng(41);
  std::vector<std::vector<BiasSet>> sets(5);
  double e[3] = {0, 0, 0};
  for (auto& set : sets) {
    for (int k = 0; k < 4; ++k) {
      BiasSet b;
      b.base = random_tensor({12, 2}, rng, 2.0);
      b.self_bias = random_tensor({12, 2}, rng, 0.5);
      b.re_bias = random_tensor({12, 2}, rng, 0.1);
      b.sum = b.base + b.self_bias + b.re_bias;
      for (std::size_t i = 0; i < 24; ++i) {
        e[0] += b.base[i] * b.base[i];
        e[1] += b.self_bias[i] * b.self_bias[i];
        e[2] += b.re_bias[i] * b.re_bias[i];
      }
      set.push_back(b);
    }
  }
  const double total = e[0] + e[1] + e[2];
  const auto s = bias_energy_shares(sets);
  EXPECT_NEAR(s.linear, 100 * e[0] / total, 1e-10);
  EXPECT_NEAR(s.self, 100 * e[1] / total, 1e-10);
  EXPECT_NEAR(s.re, 100 * e[2] / total, 1e-10);
  EXPECT_NEAR(s.linear + s.self + s.re, 100.0, 1e-10);
}

TEST(EnergyShares, DegenerateInputs) {
  EXPECT_THROW(bias_energy_shares({}), ContractError);
  EXPECT_THROW(bias_energy_shares({{bias(0, 0, 0)}}), NumericError);
}

TEST(VibrationDirection, AxisAndDiagonalExamples) {
  const std::vector<double> s{-2, -0.5, 0.3, 1, 2.5};
  EXPECT_NEAR(vibration_direction(points_along(0, s)), 0.0, 1e-12);
  EXPECT_NEAR(vibration_direction(points_along(kPi / 2, s)), kPi / 2, 1e-12);
  EXPECT_NEAR(vibration_direction(points_along(kPi / 4, s)), kPi / 4, 1e-12);
  EXPECT_NEAR(vibration_direction(points_along(-kPi / 4, s)), kPi / 4, 1e-12);
  EXPECT_NEAR(vibration_direction(points_along(kPi / 6, s)), kPi / 6, 1e-12);
}

TEST(VibrationDirection, ScaleAndTranslationInvariant) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = random_tensor({20, 2}, rng);
    const double a = vibration_direction(p);
    ASSERT_GE(a, 0.0);
    ASSERT_LE(a, kPi / 2);
    Tensor q = p * 3.7;
    for (std::size_t i = 0; i < 20; ++i) {
      q(i, 0) += 10.0;
      q(i, 1) -= 4.0;
    }
    EXPECT_NEAR(vibration_direction(q), a, 1e-10);
  }
}

TEST(VibrationDirection, DegenerateInputs) {
  EXPECT_THROW(vibration_direction(Tensor({1, 2})), ContractError);
  EXPECT_THROW(vibration_direction(Tensor({3, 2}, 1.5)), NumericError);
  EXPECT_THROW(vibration_direction(Tensor({3, 3})), ShapeError);
}

TEST(VibrationAngles, UsesFinalStepPoints) {
  std::vector<BiasSet> set;
  for (double s : {-1.0, 0.0, 2.0}) {
    BiasSet b = bias(0, 0, 0);
    b.self_bias(11, 1) = s;  // vertical spread
    b.re_bias(11, 0) = s;    // horizontal spread
    b.self_bias(5, 0) = 7 * s;
    set.push_back(b);
  }
  const auto a = vibration_angles(set);
  EXPECT_NEAR(a.theta_s, kPi / 2, 1e-12);
  EXPECT_NEAR(a.theta_r, 0.0, 1e-12);
}

TEST(Intervention, ManualTrajectoryEndsAtOrigin) {
  const Tensor m = manual_trajectory(8, 0.4, 1.5, -0.5);
  EXPECT_EQ(m(7, 0), 0.0);
  EXPECT_EQ(m(7, 1), 0.0);
  EXPECT_NEAR(m(0, 0), -1.5 * 7 * 0.4, 1e-14);
  EXPECT_NEAR(m(6, 1), 0.5 * 0.4, 1e-14);
}

TEST(Intervention, ZeroedReHeadGivesZeroEverywhere) {
  ReModel model(tiny_model(), 43);
  model.zero_re_head();
  const auto s = avoid_sample(43);
  GridSpec g{-2, -2, 5, 5, 1.0};
  const auto grid = social_modification_grid(model, s, manual_trajectory(8, 0.4, -1, 0), g);
  ASSERT_EQ(grid.cells.size(), 25u);
  for (const auto& c : grid.cells) EXPECT_EQ(c.c, 0.0);
}

TEST(Intervention, NoAddedNeighborGivesZero) {
  ReModel model(tiny_model(), 44);
  const auto s = avoid_sample(44);
  GridSpec g{-1, -1, 3, 3, 1.0};
  InterventionOptions opts;
  opts.add_neighbor = false;
  for (const auto& c :
       social_modification_grid(model, s, manual_trajectory(8, 0.4, -1, 0), g, opts).cells)
    EXPECT_EQ(c.c, 0.0);
  opts.add_neighbor = true;
  double total = 0;
  for (const auto& c :
       social_modification_grid(model, s, manual_trajectory(8, 0.4, -1, 0), g, opts).cells)
    total += c.c;
  EXPECT_GT(total, 0.0);
}

TEST(Intervention, GridLayoutEgoCellAndThreads) {
  ReModel model(tiny_model(), 45);
  const auto s = avoid_sample(45);
  const double ex = s.ego_obs(7, 0), ey = s.ego_obs(7, 1);
  GridSpec g{std::round(ex) - 2, std::round(ey) - 1, 5, 3, 1.0};
  const auto manual = manual_trajectory(8, 0.4, 0, 1);
  const auto a = social_modification_grid(model, s, manual, g);
  InterventionOptions two;
  two.threads = 2;
  const auto b = social_modification_grid(model, s, manual, g, two);
  ASSERT_EQ(a.cells.size(), 15u);
  int ego_cells = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].x, g.x(static_cast<int>(i % 5)));
    EXPECT_EQ(a.cells[i].y, g.y(static_cast<int>(i / 5)));
    EXPECT_EQ(a.cells[i].c, b.cells[i].c);
    ego_cells += a.cells[i].ego_cell;
  }
  EXPECT_EQ(ego_cells, 1);
  EXPECT_TRUE(a.cells[7].ego_cell);
  EXPECT_EQ(a.cells[7].c, social_modification(model, s, manual, a.cells[7].x, a.cells[7].y));
  EXPECT_THROW(social_modification_grid(model, s, manual, {0, 0, 0, 3, 1.0}), ConfigError);
  EXPECT_THROW(social_modification_grid(model, s, Tensor({7, 2}), g), ShapeError);
}

TEST(Contribution, ExplicitOracle) {
  std::mt19937_64 rng(46);
  const Tensor w = random_tensor({8, 5}, rng), f = random_tensor({1, 4}, rng),
               fp = random_tensor({1, 4}, rng);
  double r = 0, p = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    double rc = 0, pc = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      rc += w(k, c) * f(0, k);
      pc += w(4 + k, c) * fp(0, k);
    }
    r += rc * rc;
    p += pc * pc;
  }
  const auto got = contribution_split(w, f, fp);
  EXPECT_NEAR(got.resonance, r, 1e-12);
  EXPECT_NEAR(got.position, p, 1e-12);
}

TEST(Contribution, ScalingProperties) {
  std::mt19937_64 rng(47);
  const Tensor w = random_tensor({8, 8}, rng), f = random_tensor({1, 4}, rng),
               fp = random_tensor({1, 4}, rng);
  EXPECT_EQ(contribution_split(w, f, Tensor({1, 4})).position, 0.0);
  const auto base = contribution_split(w, f, fp);
  const auto doubled = contribution_split(w, f * 2.0, fp);
  EXPECT_NEAR(doubled.resonance, 4 * base.resonance, 1e-12);
  EXPECT_EQ(doubled.position, base.position);

  Tensor m({2, 8});
  for (std::size_t k = 0; k < 4; ++k) {
    m(1, k) = f(0, k);
    m(1, 4 + k) = fp(0, k);
  }
  const auto rows = contribution_split(w, m);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].resonance, 0.0);
  EXPECT_EQ(rows[1].resonance, base.resonance);
  EXPECT_THROW(contribution_split(w, f, Tensor({1, 3})), ShapeError);
  EXPECT_THROW(contribution_split(w, Tensor({2, 6})), ShapeError);
}

TEST(Pca, IdenticalRowsProjectToZero) {
  const auto p = feature_pca(Tensor({5, 3}, 2.0));
  EXPECT_EQ(p.projection.max_abs(), 0.0);
  EXPECT_EQ(p.explained[0], 0.0);
  EXPECT_THROW(feature_pca(Tensor({1, 3})), ContractError);
}

TEST(Pca, RankOneDataRecoversDirection) {
  const double v[3] = {2.0 / 3, -1.0 / 3, 2.0 / 3};
  Tensor x({6, 3});
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = (static_cast<double>(i) - 2.0) * v[j] + 1.0;
  const auto p = feature_pca(x);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p.components(j, 0), v[j], 1e-10);
  EXPECT_NEAR(p.explained[0], 1.0, 1e-10);
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_NEAR(p.projection(i, 0), static_cast<double>(i) - 2.5, 1e-10);
}

TEST(Pca, MatchesPowerIteration) {
  std::mt19937_64 rng(48);
  Tensor x = random_tensor({40, 6}, rng);
  for (std::size_t i = 0; i < 40; ++i) x(i, 2) = 3.0 * x(i, 0) + 0.3 * x(i, 2);
  // Oracle: centered covariance, power iteration for the top eigenvector.
  double mean[6] = {};
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 6; ++j) mean[j] += x(i, j) / 40;
  double cov[6][6] = {};
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b)
        cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / 39;
  double v[6] = {1, 1, 1, 1, 1, 1};
  for (int it = 0; it < 2000; ++it) {
    double w[6] = {}, n = 0;
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b) w[a] += cov[a][b] * v[b];
    for (double q : w) n += q * q;
    for (std::size_t a = 0; a < 6; ++a) v[a] = w[a] / std::sqrt(n);
  }
  const auto p = feature_pca(x);
  double dot = 0;
  for (std::size_t j = 0; j < 6; ++j) dot += v[j] * p.components(j, 0);
  EXPECT_LT(std::acos(std::min(1.0, std::abs(dot))), 1e-6);
  double ortho = 0;
  for (std::size_t j = 0; j < 6; ++j) ortho += p.components(j, 0) * p.components(j, 1);
  EXPECT_NEAR(ortho, 0.0, 1e-10);
  EXPECT_GT(p.explained[0], p.explained[1]);
}

TEST(Diagnostics, ResonanceFeaturesPerNeighbor) {
  ReModel model(tiny_model(), 49);
  auto s = avoid_sample(49);
  const auto f = resonance_features(model, s);
  ASSERT_EQ(f.size(), s.neighbors.size());
  for (const Tensor& t : f) EXPECT_EQ(t.shape(), (nn::Shape{1, 4}));
  s.neighbors.clear();
  EXPECT_TRUE(resonance_features(model, s).empty());
}

TEST(Diagnostics, CsvHeaders) {
  EXPECT_EQ(shares_csv({50, 25, 25}), "term,share\nlinear,50\nself,25\nre,25\n");
  EXPECT_EQ(angles_csv({{0, 1}}), "sample_id,theta_s,theta_r\n0,0,1\n");
  InterventionGrid g;
  g.cells.push_back({1.5, -2, 0.25, true});
  EXPECT_EQ(grid_csv(g), "x,y,c,ego_cell\n1.5,-2,0.25,1\n");
}
