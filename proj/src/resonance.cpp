#include "revib/resonance.hpp"

#include <cmath>
#include <numbers>

#include "revib/errors.hpp"

namespace revib::resonance {

PolarOffset polar_offset(double ego_x, double ego_y, double nb_x, double nb_y) {
  const double dx = nb_x - ego_x, dy = nb_y - ego_y;
  PolarOffset p;
  p.distance = std::hypot(dx, dy);
  if (dx == 0.0 && dy == 0.0) {
    p.coincident = true;
    return p;
  }
  double theta = std::atan2(dy, dx);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  if (theta >= 2.0 * std::numbers::pi) theta = 0.0;
  p.theta = theta;
  return p;
}

PolarOffset polar_offset(const Tensor& ego_obs, const Tensor& neighbor_obs) {
  const std::size_t i = ego_obs.rows() - 1, j = neighbor_obs.rows() - 1;
  return polar_offset(ego_obs(i, 0), ego_obs(i, 1), neighbor_obs(j, 0), neighbor_obs(j, 1));
}

std::size_t partition_of(double theta, int n_theta) {
  const double width = 2.0 * std::numbers::pi / n_theta;
  auto n = static_cast<std::size_t>(std::floor(theta / width));
  return std::min(n, static_cast<std::size_t>(n_theta - 1));
}

Resonance::Resonance(ParamStore& ps, const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto obs = cfg_.obs_spectrum();
  const auto fut = cfg_.future_spectrum();
  const std::size_t d = cfg_.d();
  nr1_ = selfvib::SpectralEmbedding::create(ps, "re.nr1", obs.cols, cfg_.hidden_width(), d / 2,
                                            cfg_.outer_product);
  nr2_ = nn::Mlp::create(ps, "re.nr2", {obs.rows * (d / 2), d, d / 2}, nn::Activation::kRelu,
                         nn::Activation::kTanh);
  pos_ = nn::Linear::create(ps, "re.pos", 2, d / 2);
  tr_ = nn::Transformer(ps, "re.tr", cfg_.transformer, d, obs.cols);
  dr_ = nn::Mlp::create(ps, "re.dr", {obs.rows * d, d, fut.rows * fut.cols},
                        nn::Activation::kRelu, nn::Activation::kNone);
  if (cfg_.zero_init_decoders) {
    ps[dr_.last().weight].mutable_value().fill(0.0);
    ps[dr_.last().bias].mutable_value().fill(0.0);
  }
}

Var Resonance::relative_embed(const ParamStore& ps, const Tensor& trajectory) const {
  Tensor rel = trajectory;
  const std::size_t last = rel.rows() - 1;
  const double px = trajectory(last, 0), py = trajectory(last, 1);
  for (std::size_t i = 0; i < rel.rows(); ++i) {
    rel(i, 0) -= px;
    rel(i, 1) -= py;
  }
  return nr1_(ps, Var::constant(spectrum::forward(rel, cfg_.transform).coeffs));
}

Var Resonance::resonance_feature(const ParamStore& ps, const Var& ego_feature,
                                 const Var& neighbor_feature) const {
  if (ego_feature.shape() != neighbor_feature.shape()) {
    throw ShapeError("resonance_feature: " + nn::shape_str(ego_feature.shape()) + " vs " +
                     nn::shape_str(neighbor_feature.shape()));
  }
  const Var prod = nn::mul(ego_feature, neighbor_feature);
  return nr2_(ps, nn::reshape(prod, {1, prod.value().numel()}));
}

Var Resonance::position_feature(const ParamStore& ps, const PolarOffset& offset) const {
  return nn::tanh(pos_(ps, Var::constant(Tensor({1, 2}, {offset.distance, offset.theta}))));
}

ResonanceMatrix Resonance::gather(const std::vector<Var>& features,
                                  const std::vector<Var>& positions,
                                  const std::vector<PolarOffset>& offsets) const {
  if (features.size() != offsets.size() || positions.size() != offsets.size()) {
    throw ShapeError("gather: need one feature and one position per neighbor");
  }
  const auto n_theta = static_cast<std::size_t>(cfg_.n_theta);
  const std::size_t d = cfg_.d();
  ResonanceMatrix out;
  out.counts.assign(n_theta, 0);
  out.offsets = offsets;
  std::vector<std::vector<Var>> members(n_theta);
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    const std::size_t n = partition_of(offsets[j].theta, cfg_.n_theta);
    out.partition.push_back(n);
    ++out.counts[n];
    members[n].push_back(nn::concat_cols({features[j], positions[j]}));
  }
  std::vector<Var> rows;
  rows.reserve(n_theta);
  for (std::size_t n = 0; n < n_theta; ++n) {
    if (members[n].empty()) {
      rows.push_back(Var::constant(Tensor({1, d})));
    } else if (members[n].size() == 1) {
      rows.push_back(members[n].front());
    } else {
      rows.push_back(nn::scale(nn::add_n(members[n]), 1.0 / static_cast<double>(members[n].size())));
    }
  }
  out.value = nn::concat_rows(rows);
  return out;
}

ResonanceMatrix Resonance::build(const ParamStore& ps, const Tensor& ego_obs,
                                 const std::vector<Tensor>& neighbors) const {
  std::vector<Var> features, positions;
  std::vector<PolarOffset> offsets;
  if (!neighbors.empty()) {
    const Var ego = relative_embed(ps, ego_obs);
    for (const Tensor& nb : neighbors) {
      features.push_back(resonance_feature(ps, ego, relative_embed(ps, nb)));
      offsets.push_back(polar_offset(ego_obs, nb));
      positions.push_back(position_feature(ps, offsets.back()));
    }
  }
  return gather(features, positions, offsets);
}

Var Resonance::encoder_input(const Var& diff_feature, const Var& resonance_matrix,
                             const Tensor& z_r) const {
  const auto obs = cfg_.obs_spectrum();
  const std::size_t d = cfg_.d();
  if (diff_feature.shape() != nn::Shape{obs.rows, d / 2} || z_r.shape() != diff_feature.shape()) {
    throw ShapeError("re-bias encoder: differential feature " +
                     nn::shape_str(diff_feature.shape()) + " / noise " +
                     nn::shape_str(z_r.shape()) + " do not match [T_h, d/2] = [" +
                     std::to_string(obs.rows) + ", " + std::to_string(d / 2) + "]");
  }
  if (resonance_matrix.shape() != nn::Shape{static_cast<std::size_t>(cfg_.n_theta), d}) {
    throw ShapeError("re-bias encoder: resonance matrix " +
                     nn::shape_str(resonance_matrix.shape()) + " does not match [n_theta, d]");
  }
  return nn::concat_rows({nn::concat_cols({diff_feature, Var::constant(z_r)}), resonance_matrix});
}

Var Resonance::sample_re_bias(const ParamStore& ps, const Var& diff_feature,
                              const Var& resonance_matrix, const Var& diff_spectrum,
                              const Tensor& z_r) const {
  const auto fut = cfg_.future_spectrum();
  const Var feature = tr_(ps, encoder_input(diff_feature, resonance_matrix, z_r), diff_spectrum);
  const Var flat = nn::reshape(feature, {1, feature.value().numel()});
  const Var spec = nn::reshape(dr_(ps, flat), {fut.rows, fut.cols});
  return spectrum::inverse(spec, cfg_.transform);
}

}  // namespace revib::resonance
