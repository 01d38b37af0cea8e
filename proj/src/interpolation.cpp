#include "revib/interpolation.hpp"

#include <cmath>

#include "revib/errors.hpp"

namespace revib::selfvib {
namespace {

// Knots 0 = tau_0 < tau_1 < ... < tau_n with the implicit zero value at
// tau_0. Every quantity is a row of coefficients over y_1..y_n.
struct Curve {
  std::vector<double> knots;
  std::size_t n = 0;

  explicit Curve(const std::vector<int>& offsets) : knots{0.0}, n(offsets.size()) {
    if (n == 0) throw ContractError("interpolation needs at least one waypoint");
    for (std::size_t i = 0; i < n; ++i) {
      if (offsets[i] <= (i ? offsets[i - 1] : 0)) {
        throw ContractError(
            "waypoint indices must be strictly increasing and after the present step");
      }
      knots.push_back(offsets[i]);
    }
  }

  std::vector<double> unit(std::size_t knot) const {
    std::vector<double> row(n, 0.0);
    if (knot > 0) row[knot - 1] = 1.0;
    return row;
  }

  std::vector<double> chord(std::size_t seg) const {
    const double h = knots[seg + 1] - knots[seg];
    std::vector<double> row = unit(seg + 1);
    const std::vector<double> lo = unit(seg);
    for (std::size_t j = 0; j < n; ++j) row[j] = (row[j] - lo[j]) / h;
    return row;
  }

  std::vector<double> slope(std::size_t knot) const {
    if (knot == 0) return chord(0);
    if (knot == n) return chord(n - 1);
    std::vector<double> row = chord(knot - 1);
    const std::vector<double> right = chord(knot);
    for (std::size_t j = 0; j < n; ++j) row[j] = 0.5 * (row[j] + right[j]);
    return row;
  }

  // Segment containing tau; ties at a keypoint go to the left segment when
  // `from_left`, otherwise to the right one.
  std::size_t segment(double tau, bool from_left) const {
    std::size_t seg = 0;
    while (seg + 1 < n && (from_left ? tau > knots[seg + 1] : tau >= knots[seg + 1])) ++seg;
    return seg;
  }
};

}  // namespace

std::string to_string(InterpolationMode mode) {
  return mode == InterpolationMode::kHermite ? "hermite" : "linear";
}

InterpolationMode parse_interpolation(const std::string& name) {
  if (name == "hermite") return InterpolationMode::kHermite;
  if (name == "linear" || name == "piecewise-linear") return InterpolationMode::kPiecewiseLinear;
  throw ConfigError("unknown interpolation mode: " + name);
}

std::vector<int> waypoint_offsets(int t_f, int n_way) {
  if (n_way < 1) throw ConfigError("n_way must be >= 1");
  if (n_way > t_f) throw ConfigError("n_way cannot exceed t_f");
  std::vector<int> out;
  for (int k = 1; k <= n_way; ++k) {
    out.push_back(static_cast<int>(std::lround(static_cast<double>(k) * t_f / n_way)));
  }
  return out;
}

std::vector<double> interpolation_weights(const std::vector<int>& offsets, double tau,
                                          InterpolationMode mode) {
  const Curve c(offsets);
  if (tau < 0.0) throw ContractError("interpolation offset must be >= 0");
  if (tau >= c.knots.back()) return c.unit(c.n);  // the bias holds past the last keypoint
  for (std::size_t k = 0; k <= c.n; ++k) {
    if (tau == c.knots[k]) return c.unit(k);
  }
  const std::size_t seg = c.segment(tau, true);
  const double h = c.knots[seg + 1] - c.knots[seg];
  const double s = (tau - c.knots[seg]) / h;
  const std::vector<double> y0 = c.unit(seg), y1 = c.unit(seg + 1);
  std::vector<double> out(c.n, 0.0);
  if (mode == InterpolationMode::kPiecewiseLinear) {
    for (std::size_t j = 0; j < c.n; ++j) out[j] = (1.0 - s) * y0[j] + s * y1[j];
    return out;
  }
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  const std::vector<double> m0 = c.slope(seg), m1 = c.slope(seg + 1);
  for (std::size_t j = 0; j < c.n; ++j) {
    out[j] = h00 * y0[j] + h01 * y1[j] + h * (h10 * m0[j] + h11 * m1[j]);
  }
  return out;
}

std::vector<double> interpolation_velocity_weights(const std::vector<int>& offsets, double tau,
                                                   InterpolationMode mode, bool from_left) {
  const Curve c(offsets);
  if (tau < 0.0) throw ContractError("interpolation offset must be >= 0");
  if (tau > c.knots.back() || (tau == c.knots.back() && !from_left)) {
    return std::vector<double>(c.n, 0.0);
  }
  const std::size_t seg = c.segment(tau, from_left || tau == c.knots.back());
  if (mode == InterpolationMode::kPiecewiseLinear) return c.chord(seg);
  const double h = c.knots[seg + 1] - c.knots[seg];
  const double s = (tau - c.knots[seg]) / h;
  const double s2 = s * s;
  // Derivatives of the Hermite basis with respect to s.
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  const std::vector<double> y0 = c.unit(seg), y1 = c.unit(seg + 1);
  const std::vector<double> m0 = c.slope(seg), m1 = c.slope(seg + 1);
  std::vector<double> out(c.n, 0.0);
  for (std::size_t j = 0; j < c.n; ++j) {
    out[j] = (d00 * y0[j] + d01 * y1[j]) / h + d10 * m0[j] + d11 * m1[j];
  }
  return out;
}

Tensor interpolation_matrix(const std::vector<int>& offsets, int t_f, InterpolationMode mode) {
  if (!offsets.empty() && offsets.back() > t_f) {
    throw ContractError("waypoint index beyond the prediction horizon");
  }
  Tensor out({static_cast<std::size_t>(t_f), offsets.size()});
  for (int step = 1; step <= t_f; ++step) {
    const std::vector<double> row = interpolation_weights(offsets, step, mode);
    for (std::size_t j = 0; j < row.size(); ++j) out(static_cast<std::size_t>(step - 1), j) = row[j];
  }
  return out;
}

Tensor interpolate(const WaypointBias& way, int t_h, int t_f, InterpolationMode mode) {
  if (way.values.rank() != 2 || way.values.dim(1) != 2 ||
      way.values.dim(0) != way.indices.size()) {
    throw ShapeError("waypoint bias shape " + nn::shape_str(way.values.shape()) +
                     " does not match its " + std::to_string(way.indices.size()) + " indices");
  }
  std::vector<int> offsets;
  for (int idx : way.indices) offsets.push_back(idx - t_h);
  const Tensor w = interpolation_matrix(offsets, t_f, mode);
  Tensor out({static_cast<std::size_t>(t_f), 2});
  for (std::size_t r = 0; r < out.dim(0); ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < w.dim(1); ++j) acc += w(r, j) * way.values(j, c);
      out(r, c) = acc;
    }
  return out;
}

}  // namespace revib::selfvib
