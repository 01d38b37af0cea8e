#include "revib/model.hpp"

#include "revib/errors.hpp"

namespace revib {

ReModel::ReModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), params_(seed) {
  cfg_.validate();
  self_ = selfvib::SelfVibration(params_, cfg_);
  re_ = resonance::Resonance(params_, cfg_);
}

ReModel::Encoded ReModel::encode(const ParamStore& ps, const data::Sample& sample) const {
  const Tensor& obs = sample.ego_obs;
  if (obs.rank() != 2 || obs.dim(0) != static_cast<std::size_t>(cfg_.t_h) || obs.dim(1) != 2) {
    throw ShapeError("observation " + nn::shape_str(obs.shape()) + " does not match t_h=" +
                     std::to_string(cfg_.t_h));
  }
  if (!obs.all_finite()) throw NumericError("non-finite observation");
  Encoded enc;
  enc.linear = linear::linear_base(obs, cfg_.t_f);
  enc.fit_spectrum = Var::constant(spectrum::forward(enc.linear.fit, cfg_.transform).coeffs);
  enc.diff_spectrum =
      Var::constant(spectrum::forward(obs - enc.linear.fit, cfg_.transform).coeffs);
  if (cfg_.use_self_bias || cfg_.use_re_bias) {
    enc.diff_feature = self_.embed_differential(ps, obs, enc.linear.fit);
  }
  if (cfg_.use_re_bias) enc.resonance = re_.build(ps, obs, sample.neighbors);
  return enc;
}

ReModel::Decoded ReModel::decode(const ParamStore& ps, const Encoded& enc,
                                 const Noise& noise) const {
  const auto t_f = static_cast<std::size_t>(cfg_.t_f);
  Decoded dec;
  if (cfg_.use_self_bias) {
    const Var f_s = self_.sample_self_feature(ps, enc.diff_feature, enc.fit_spectrum, noise.z_s);
    dec.self_bias = self_.interpolate(self_.decode_waypoints(ps, f_s));
  } else {
    dec.self_bias = Var::constant(Tensor({t_f, 2}));
  }
  if (cfg_.use_re_bias) {
    dec.re_bias = re_.sample_re_bias(ps, enc.diff_feature, enc.resonance.value,
                                     enc.diff_spectrum, noise.z_r);
  } else {
    dec.re_bias = Var::constant(Tensor({t_f, 2}));
  }
  const Tensor base = cfg_.use_linear_base ? enc.linear.base : Tensor({t_f, 2});
  dec.sum = nn::add(nn::add(Var::constant(base), dec.self_bias), dec.re_bias);
  return dec;
}

BiasSet ReModel::to_bias_set(const Encoded& enc, const Decoded& dec) const {
  BiasSet b;
  b.base = cfg_.use_linear_base ? enc.linear.base
                                : Tensor({static_cast<std::size_t>(cfg_.t_f), 2});
  b.self_bias = dec.self_bias.value();
  b.re_bias = dec.re_bias.value();
  b.sum = dec.sum.value();
  return b;
}

Noise ReModel::zero_noise() const {
  const auto obs = cfg_.obs_spectrum();
  return {Tensor({obs.rows, cfg_.half_d()}), Tensor({obs.rows, cfg_.half_d()})};
}

Noise ReModel::draw_noise(std::mt19937_64& rng) const {
  Noise n = zero_noise();
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : n.z_s.storage()) v = dist(rng);
  for (double& v : n.z_r.storage()) v = dist(rng);
  return n;
}

std::vector<BiasSet> ReModel::predict(const data::Sample& sample, int k,
                                      std::uint64_t seed) const {
  if (k < 1) throw ContractError("K must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Noise> noise;
  noise.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) noise.push_back(draw_noise(rng));
  return predict(sample, noise);
}

std::vector<BiasSet> ReModel::predict(const data::Sample& sample,
                                      const std::vector<Noise>& noise) const {
  nn::NoGradGuard no_grad;
  const Encoded enc = encode(params_, sample);
  std::vector<BiasSet> out;
  out.reserve(noise.size());
  for (const Noise& n : noise) out.push_back(to_bias_set(enc, decode(params_, enc, n)));
  return out;
}

BiasSet ReModel::predict_equilibrium(const data::Sample& sample) const {
  return predict(sample, std::vector<Noise>{zero_noise()}).front();
}

void ReModel::zero_self_head() {
  params_[self_.decoder().last().weight].mutable_value().fill(0.0);
  params_[self_.decoder().last().bias].mutable_value().fill(0.0);
}

void ReModel::zero_re_head() {
  params_[re_.decoder().last().weight].mutable_value().fill(0.0);
  params_[re_.decoder().last().bias].mutable_value().fill(0.0);
}

}  // namespace revib
