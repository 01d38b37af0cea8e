#pragma once

#include <array>
#include <string>
#include <vector>

#include "revib/model.hpp"

namespace revib::diagnostics {

using nn::Tensor;

// Percent of the total squared norm carried by each superposed term,
// averaged over every sample and every draw. Shares sum to 100.
struct EnergyShares {
  double linear = 0.0;
  double self = 0.0;
  double re = 0.0;
};

EnergyShares bias_energy_shares(const std::vector<std::vector<BiasSet>>& sets);

// Acute angle in [0, pi/2] between the total-least-squares line through
// K >= 2 points ([K, 2]) and the horizontal axis.
double vibration_direction(const Tensor& points);

struct VibrationAngles {
  double theta_s = 0.0;
  double theta_r = 0.0;
};

// Angles of the final-step self-bias and re-bias points of one K-set.
VibrationAngles vibration_angles(const std::vector<BiasSet>& set);

struct GridSpec {
  double x_min = -5.0;
  double y_min = -5.0;
  int nx = 11;
  int ny = 11;
  double resolution = 1.0;  // meters between cell centers

  void validate() const;
  double x(int i) const { return x_min + resolution * i; }
  double y(int j) const { return y_min + resolution * j; }
};

struct GridCell {
  double x = 0.0, y = 0.0;
  double c = 0.0;         // meters
  bool ego_cell = false;  // the cell contains the ego's present position
};

struct InterventionGrid {
  GridSpec spec;
  Tensor manual;                // origin-anchored [t_h, 2]
  std::vector<GridCell> cells;  // row-major: y outer, x inner
};

struct InterventionOptions {
  // When false the second pass sees the unmodified scene, so every c is 0.
  bool add_neighbor = true;
  int threads = 1;
};

// A manual trajectory walking at `velocity` (m/s) whose last point is the
// origin.
Tensor manual_trajectory(int t_h, double dt, double vx, double vy);

// max_t || p(scene + manual + (x, y)) - p(scene) || for the equilibrium
// (zero-noise) prediction.
double social_modification(const ReModel& model, const data::Sample& sample,
                           const Tensor& manual, double x, double y, bool add_neighbor = true);

InterventionGrid social_modification_grid(const ReModel& model, const data::Sample& sample,
                                          const Tensor& manual, const GridSpec& grid,
                                          const InterventionOptions& opts = {});

// Energies through the first linear layer of T_r for one resonance-matrix
// row: rows [0, d/2) of `weight` ([d, d]) act on f, rows [d/2, d) on f_p.
struct Contribution {
  double resonance = 0.0;
  double position = 0.0;
};

Contribution contribution_split(const Tensor& weight, const Tensor& f, const Tensor& f_p);
// Per partition of a resonance matrix [n_theta, d].
std::vector<Contribution> contribution_split(const Tensor& weight, const Tensor& matrix);

// One resonance feature per neighbor, [1, d/2] each.
std::vector<Tensor> resonance_features(const ReModel& model, const data::Sample& sample);

struct Pca {
  Tensor projection;              // [n, 2]
  Tensor components;              // [k, 2], unit columns
  std::array<double, 2> explained{0.0, 0.0};
  Tensor mean;                    // [1, k]
};

// Top-2 principal components of the rows of `features` ([n, k], n >= 2).
Pca feature_pca(const Tensor& features);

// Plot-ready CSV writers.
std::string shares_csv(const EnergyShares& shares);                  // term,share
std::string angles_csv(const std::vector<VibrationAngles>& angles);  // sample_id,theta_s,theta_r
std::string grid_csv(const InterventionGrid& grid);                  // x,y,c,ego_cell

}  // namespace revib::diagnostics
