#include "revib/diagnostics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "revib/errors.hpp"

namespace revib::diagnostics {
namespace {

double energy(const Tensor& t) { return t.squared_norm(); }

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

EnergyShares bias_energy_shares(const std::vector<std::vector<BiasSet>>& sets) {
  double lin = 0.0, self = 0.0, re = 0.0;
  std::size_t count = 0;
  for (const auto& set : sets) {
    for (const BiasSet& b : set) {
      lin += energy(b.base);
      self += energy(b.self_bias);
      re += energy(b.re_bias);
      ++count;
    }
  }
  if (count == 0) throw ContractError("energy shares need at least one prediction");
  const double total = lin + self + re;
  if (!(total > 0.0)) throw NumericError("total bias energy is zero; shares are undefined");
  return {100.0 * lin / total, 100.0 * self / total, 100.0 * re / total};
}

double vibration_direction(const Tensor& points) {
  if (points.rank() != 2 || points.dim(1) != 2) {
    throw ShapeError("vibration points must be [K, 2], got " + nn::shape_str(points.shape()));
  }
  const std::size_t k = points.dim(0);
  if (k < 2) throw ContractError("vibration direction needs K >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += points(i, 0);
    my += points(i, 1);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = points(i, 0) - mx, dy = points(i, 1) - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx + syy == 0.0) throw NumericError("all vibration points coincide; direction undefined");
  // Principal axis of the scatter matrix.
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return std::abs(phi);
}

VibrationAngles vibration_angles(const std::vector<BiasSet>& set) {
  if (set.empty()) throw ContractError("vibration angles need K >= 2 predictions");
  const std::size_t last = set.front().self_bias.dim(0) - 1;
  Tensor s({set.size(), 2}), r({set.size(), 2});
  for (std::size_t k = 0; k < set.size(); ++k) {
    for (std::size_t c = 0; c < 2; ++c) {
      s(k, c) = set[k].self_bias(last, c);
      r(k, c) = set[k].re_bias(last, c);
    }
  }
  return {vibration_direction(s), vibration_direction(r)};
}

void GridSpec::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("grid needs at least one cell per axis");
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be > 0");
}

Tensor manual_trajectory(int t_h, double dt, double vx, double vy) {
  Tensor out({static_cast<std::size_t>(t_h), 2});
  for (int t = 0; t < t_h; ++t) {
    const double back = (t_h - 1 - t) * dt;
    out(static_cast<std::size_t>(t), 0) = -vx * back;
    out(static_cast<std::size_t>(t), 1) = -vy * back;
  }
  return out;
}

double social_modification(const ReModel& model, const data::Sample& sample,
                           const Tensor& manual, double x, double y, bool add_neighbor) {
  const BiasSet before = model.predict_equilibrium(sample);
  data::Sample modified = sample;
  if (add_neighbor) {
    Tensor placed = manual;
    for (std::size_t t = 0; t < placed.dim(0); ++t) {
      placed(t, 0) += x;
      placed(t, 1) += y;
    }
    modified.neighbors.push_back(std::move(placed));
    modified.neighbor_ids.push_back(-1);
  }
  const BiasSet after = model.predict_equilibrium(modified);
  double c = 0.0;
  for (std::size_t t = 0; t < before.sum.dim(0); ++t) {
    c = std::max(c, std::hypot(after.sum(t, 0) - before.sum(t, 0),
                               after.sum(t, 1) - before.sum(t, 1)));
  }
  return c;
}

InterventionGrid social_modification_grid(const ReModel& model, const data::Sample& sample,
                                          const Tensor& manual, const GridSpec& grid,
                                          const InterventionOptions& opts) {
  grid.validate();
  if (manual.shape() != sample.ego_obs.shape()) {
    throw ShapeError("manual trajectory " + nn::shape_str(manual.shape()) +
                     " must match the observation " + nn::shape_str(sample.ego_obs.shape()));
  }
  InterventionGrid out;
  out.spec = grid;
  out.manual = manual;
  const std::size_t last = sample.ego_obs.dim(0) - 1;
  const double ex = sample.ego_obs(last, 0), ey = sample.ego_obs(last, 1);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      GridCell cell;
      cell.x = grid.x(i);
      cell.y = grid.y(j);
      cell.ego_cell = std::abs(cell.x - ex) <= 0.5 * grid.resolution &&
                      std::abs(cell.y - ey) <= 0.5 * grid.resolution;
      out.cells.push_back(cell);
    }
  }
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < out.cells.size(); i += step) {
      out.cells[i].c =
          social_modification(model, sample, manual, out.cells[i].x, out.cells[i].y,
                              opts.add_neighbor);
    }
  };
  const std::size_t threads = static_cast<std::size_t>(std::max(1, opts.threads));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return out;
}

Contribution contribution_split(const Tensor& weight, const Tensor& f, const Tensor& f_p) {
  if (weight.rank() != 2 || weight.dim(0) % 2 != 0) {
    throw ShapeError("first-layer weight must be [d, out] with even d, got " +
                     nn::shape_str(weight.shape()));
  }
  const std::size_t half = weight.dim(0) / 2;
  if (f.numel() != half || f_p.numel() != half) {
    throw ShapeError("resonance/position features must each have " + std::to_string(half) +
                     " values for weight " + nn::shape_str(weight.shape()));
  }
  Contribution out;
  for (std::size_t c = 0; c < weight.dim(1); ++c) {
    double r = 0.0, p = 0.0;
    for (std::size_t k = 0; k < half; ++k) {
      r += f.storage()[k] * weight(k, c);
      p += f_p.storage()[k] * weight(half + k, c);
    }
    out.resonance += r * r;
    out.position += p * p;
  }
  return out;
}

std::vector<Contribution> contribution_split(const Tensor& weight, const Tensor& matrix) {
  if (matrix.rank() != 2 || matrix.dim(1) != weight.dim(0)) {
    throw ShapeError("resonance matrix " + nn::shape_str(matrix.shape()) +
                     " does not match first-layer weight " + nn::shape_str(weight.shape()));
  }
  const std::size_t half = matrix.dim(1) / 2;
  std::vector<Contribution> out;
  for (std::size_t r = 0; r < matrix.dim(0); ++r) {
    Tensor f({1, half}), fp({1, half});
    for (std::size_t k = 0; k < half; ++k) {
      f(0, k) = matrix(r, k);
      fp(0, k) = matrix(r, half + k);
    }
    out.push_back(contribution_split(weight, f, fp));
  }
  return out;
}

std::vector<Tensor> resonance_features(const ReModel& model, const data::Sample& sample) {
  nn::NoGradGuard guard;
  const auto& re = model.resonance();
  std::vector<Tensor> out;
  if (sample.neighbors.empty()) return out;
  const nn::Var ego = re.relative_embed(model.params(), sample.ego_obs);
  for (const Tensor& nb : sample.neighbors) {
    out.push_back(
        re.resonance_feature(model.params(), ego, re.relative_embed(model.params(), nb)).value());
  }
  return out;
}

Pca feature_pca(const Tensor& features) {
  if (features.rank() != 2) {
    throw ShapeError("PCA input must be [n, k], got " + nn::shape_str(features.shape()));
  }
  const std::size_t n = features.dim(0), k = features.dim(1);
  if (n < 2) throw ContractError("PCA needs at least 2 rows");
  Eigen::MatrixXd x(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) x(i, j) = features(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd values = eig.eigenvalues();  // ascending
  const double total = values.cwiseMax(0.0).sum();

  Pca out;
  out.projection = Tensor({n, 2});
  out.components = Tensor({k, 2});
  out.mean = Tensor({1, k});
  for (std::size_t j = 0; j < k; ++j) out.mean(0, j) = mean(static_cast<Eigen::Index>(j));
  for (std::size_t c = 0; c < 2 && c < k; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(k - 1 - c);
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    // Sign convention: the largest-magnitude entry is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.explained[c] = total > 0.0 ? std::max(0.0, values(col)) / total : 0.0;
    const Eigen::VectorXd proj = x * v;
    for (std::size_t j = 0; j < k; ++j) out.components(j, c) = v(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n; ++i) {
      out.projection(i, c) = total > 0.0 ? proj(static_cast<Eigen::Index>(i)) : 0.0;
    }
  }
  return out;
}

std::string shares_csv(const EnergyShares& s) {
  return "term,share\nlinear," + number(s.linear) + "\nself," + number(s.self) + "\nre," +
         number(s.re) + "\n";
}

std::string angles_csv(const std::vector<VibrationAngles>& angles) {
  std::string out = "sample_id,theta_s,theta_r\n";
  for (std::size_t i = 0; i < angles.size(); ++i) {
    out += std::to_string(i) + "," + number(angles[i].theta_s) + "," +
           number(angles[i].theta_r) + "\n";
  }
  return out;
}

std::string grid_csv(const InterventionGrid& grid) {
  std::string out = "x,y,c,ego_cell\n";
  for (const GridCell& c : grid.cells) {
    out += number(c.x) + "," + number(c.y) + "," + number(c.c) + "," +
           (c.ego_cell ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace revib::diagnostics
