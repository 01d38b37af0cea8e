#pragma once

#include <vector>

#include "revib/model_config.hpp"

namespace revib::selfvib {

using nn::ParamStore;
using nn::Var;

// Row-wise spectrum augmentation: each row r becomes concat(r, flatten(r r^T)).
Var augment_outer(const Var& spectrum);

// Spectrum embedding network (N_e, N_e,l and N_r1 share this structure):
// optional outer-product augmentation, then affine+ReLU to the hidden width
// and affine+tanh to d/2.
struct SpectralEmbedding {
  nn::Mlp mlp;
  bool outer_product = true;

  static SpectralEmbedding create(ParamStore& ps, const std::string& name, std::size_t m,
                                  std::size_t hidden, std::size_t out, bool outer_product);
  Var operator()(const ParamStore& ps, const Var& spectrum) const;
};

// Self-sourced vibration: differential embedding, the T_s Transformer,
// waypoint decoding and interpolation to the self-bias.
class SelfVibration {
 public:
  SelfVibration() = default;
  SelfVibration(ParamStore& ps, const ModelConfig& cfg);

  // 1/2 (N_e(T(obs)) - N_e,l(T(fit))), [T_h, d/2].
  Var embed_differential(const ParamStore& ps, const Tensor& obs, const Tensor& fit) const;
  // T_s(concat(dfe, z_s), T(fit)), [T_h, d].
  Var sample_self_feature(const ParamStore& ps, const Var& diff_feature, const Var& fit_spectrum,
                          const Tensor& z_s) const;
  // D_s then the inverse transform, [n_way, 2].
  Var decode_waypoints(const ParamStore& ps, const Var& self_feature) const;
  // [n_way, 2] -> [t_f, 2].
  Var interpolate(const Var& waypoints) const;

  std::vector<int> waypoint_indices() const;
  const SpectralEmbedding& obs_embedding() const { return ne_; }
  const SpectralEmbedding& fit_embedding() const { return nel_; }
  const nn::Transformer& transformer() const { return ts_; }
  const nn::Mlp& decoder() const { return ds_; }
  const Tensor& interpolation() const { return interp_; }

  // Copies N_e's parameters into N_e,l.
  void tie_mirrored_embeddings(ParamStore& ps) const;

 private:
  ModelConfig cfg_;
  SpectralEmbedding ne_, nel_;
  nn::Transformer ts_;
  nn::Mlp ds_;
  Tensor interp_;
};

}  // namespace revib::selfvib
