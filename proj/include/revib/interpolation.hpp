#pragma once

#include <string>
#include <vector>

#include "revib/tensor.hpp"

namespace revib::selfvib {

using nn::Tensor;

enum class InterpolationMode {
  // Cubic Hermite segments. Each interior keypoint takes the mean of its two
  // adjacent chord velocities as its slope, shared by both segments, so the
  // velocity is continuous across keypoints. End keypoints use their single
  // chord.
  kHermite,
  kPiecewiseLinear,
};

std::string to_string(InterpolationMode mode);
InterpolationMode parse_interpolation(const std::string& name);

// Future-step offsets (1-based, relative to t_h) of n_way equally spaced
// waypoints whose last one sits on the horizon t_f.
std::vector<int> waypoint_offsets(int t_f, int n_way);

struct WaypointBias {
  Tensor values;             // [n_way, 2] meters
  std::vector<int> indices;  // absolute steps t_h + offset, strictly increasing
};

// Linear map from waypoint values to the t_f-step bias:
// bias = matrix [t_f, n_way] * values. An implicit zero keypoint sits at
// offset 0 (the present step), so the bias starts from zero.
Tensor interpolation_matrix(const std::vector<int>& offsets, int t_f, InterpolationMode mode);

// Weights over the waypoint values at a real-valued offset tau >= 0 (one row
// of the matrix above when tau is an integer step).
std::vector<double> interpolation_weights(const std::vector<int>& offsets, double tau,
                                          InterpolationMode mode);
// d/dtau of the same curve. At a keypoint `from_left` selects the segment
// ending there.
std::vector<double> interpolation_velocity_weights(const std::vector<int>& offsets, double tau,
                                                   InterpolationMode mode, bool from_left);

Tensor interpolate(const WaypointBias& way, int t_h, int t_f, InterpolationMode mode);

}  // namespace revib::selfvib
