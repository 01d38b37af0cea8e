#include "revib/self_vibration.hpp"

#include "revib/errors.hpp"

namespace revib {

spectrum::SpectrumShape ModelConfig::obs_spectrum() const {
  return spectrum::spectrum_shape(transform, static_cast<std::size_t>(t_h), 2);
}

spectrum::SpectrumShape ModelConfig::waypoint_spectrum() const {
  return spectrum::spectrum_shape(transform, static_cast<std::size_t>(n_way), 2);
}

spectrum::SpectrumShape ModelConfig::future_spectrum() const {
  return spectrum::spectrum_shape(transform, static_cast<std::size_t>(t_f), 2);
}

void ModelConfig::validate() const {
  transformer.validate();
  if (t_h < 2) throw ConfigError("t_h must be >= 2");
  if (t_f < 1) throw ConfigError("t_f must be >= 1");
  if (n_theta < 1) throw ConfigError("n_theta must be >= 1");
  if (n_way < 1 || n_way > t_f) throw ConfigError("n_way must be in [1, t_f]");
  if (transform == spectrum::TransformKind::kHaar) {
    if (t_h % 2) throw ConfigError("haar transform needs an even t_h");
    if (t_f % 2) throw ConfigError("haar transform needs an even t_f");
    if (n_way % 2) throw ConfigError("haar transform needs an even n_way");
  }
}

}  // namespace revib

namespace revib::selfvib {

Var augment_outer(const Var& spectrum) {
  return nn::concat_cols({spectrum, nn::row_outer(spectrum)});
}

SpectralEmbedding SpectralEmbedding::create(ParamStore& ps, const std::string& name,
                                            std::size_t m, std::size_t hidden, std::size_t out,
                                            bool outer_product) {
  SpectralEmbedding e;
  e.outer_product = outer_product;
  const std::size_t in = outer_product ? m + m * m : m;
  e.mlp = nn::Mlp::create(ps, name, {in, hidden, out}, nn::Activation::kRelu,
                          nn::Activation::kTanh);
  return e;
}

Var SpectralEmbedding::operator()(const ParamStore& ps, const Var& spectrum) const {
  return mlp(ps, outer_product ? augment_outer(spectrum) : spectrum);
}

SelfVibration::SelfVibration(ParamStore& ps, const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto obs = cfg_.obs_spectrum();
  const auto way = cfg_.waypoint_spectrum();
  const std::size_t d = cfg_.d();
  ne_ = SpectralEmbedding::create(ps, "self.ne", obs.cols, cfg_.hidden_width(), d / 2,
                                  cfg_.outer_product);
  nel_ = SpectralEmbedding::create(ps, "self.nel", obs.cols, cfg_.hidden_width(), d / 2,
                                   cfg_.outer_product);
  ts_ = nn::Transformer(ps, "self.ts", cfg_.transformer, d, obs.cols);
  ds_ = nn::Mlp::create(ps, "self.ds", {obs.rows * d, d, way.rows * way.cols},
                        nn::Activation::kRelu, nn::Activation::kNone);
  interp_ = interpolation_matrix(waypoint_offsets(cfg_.t_f, cfg_.n_way), cfg_.t_f,
                                 cfg_.interpolation);
  if (cfg_.zero_init_decoders) {
    ps[ds_.last().weight].mutable_value().fill(0.0);
    ps[ds_.last().bias].mutable_value().fill(0.0);
  }
}

Var SelfVibration::embed_differential(const ParamStore& ps, const Tensor& obs,
                                      const Tensor& fit) const {
  if (!obs.all_finite() || !fit.all_finite()) {
    throw NumericError("embed_differential: non-finite trajectory");
  }
  const Var f_obs = ne_(ps, Var::constant(spectrum::forward(obs, cfg_.transform).coeffs));
  const Var f_fit = nel_(ps, Var::constant(spectrum::forward(fit, cfg_.transform).coeffs));
  return nn::scale(nn::sub(f_obs, f_fit), 0.5);
}

Var SelfVibration::sample_self_feature(const ParamStore& ps, const Var& diff_feature,
                                       const Var& fit_spectrum, const Tensor& z_s) const {
  if (z_s.shape() != diff_feature.shape()) {
    throw ShapeError("z_s has shape " + nn::shape_str(z_s.shape()) + ", expected " +
                     nn::shape_str(diff_feature.shape()));
  }
  return ts_(ps, nn::concat_cols({diff_feature, Var::constant(z_s)}), fit_spectrum);
}

Var SelfVibration::decode_waypoints(const ParamStore& ps, const Var& self_feature) const {
  const auto way = cfg_.waypoint_spectrum();
  const Var flat = nn::reshape(self_feature, {1, self_feature.value().numel()});
  const Var spec = nn::reshape(ds_(ps, flat), {way.rows, way.cols});
  return spectrum::inverse(spec, cfg_.transform);
}

Var SelfVibration::interpolate(const Var& waypoints) const {
  return nn::matmul(Var::constant(interp_), waypoints);
}

std::vector<int> SelfVibration::waypoint_indices() const {
  std::vector<int> out = waypoint_offsets(cfg_.t_f, cfg_.n_way);
  for (int& v : out) v += cfg_.t_h;
  return out;
}

void SelfVibration::tie_mirrored_embeddings(ParamStore& ps) const {
  for (std::size_t i = 0; i < ne_.mlp.layers.size(); ++i) {
    ps[nel_.mlp.layers[i].weight].mutable_value() = ps[ne_.mlp.layers[i].weight].value();
    ps[nel_.mlp.layers[i].bias].mutable_value() = ps[ne_.mlp.layers[i].bias].value();
  }
}

}  // namespace revib::selfvib
