#pragma once

#include <vector>

#include "revib/model_config.hpp"
#include "revib/self_vibration.hpp"

namespace revib::resonance {

using nn::ParamStore;
using nn::Tensor;
using nn::Var;

// Neighbor location relative to the ego at the present step.
struct PolarOffset {
  double theta = 0.0;     // radians in [0, 2pi)
  double distance = 0.0;  // meters
  bool coincident = false;
};

PolarOffset polar_offset(double ego_x, double ego_y, double nb_x, double nb_y);
// Last row of each [t_h, 2] trajectory.
PolarOffset polar_offset(const Tensor& ego_obs, const Tensor& neighbor_obs);

// 0-based angular partition: floor(theta / (2pi / n_theta)), clamped.
std::size_t partition_of(double theta, int n_theta);

struct ResonanceMatrix {
  Var value;                          // [n_theta, d]
  std::vector<std::size_t> counts;    // neighbors per partition
  std::vector<std::size_t> partition; // partition of each neighbor
  std::vector<PolarOffset> offsets;   // per neighbor
};

// Social-sourced vibration: resonance features, angle-partitioned
// gathering, the T_r Transformer and the re-bias decoder.
class Resonance {
 public:
  Resonance() = default;
  Resonance(ParamStore& ps, const ModelConfig& cfg);

  // N_r1(T(X - X_last)), [T_h, d/2].
  Var relative_embed(const ParamStore& ps, const Tensor& trajectory) const;
  // N_r2(flatten(f_i * f_j)), [1, d/2].
  Var resonance_feature(const ParamStore& ps, const Var& ego_feature,
                        const Var& neighbor_feature) const;
  // tanh(affine(distance, theta)), [1, d/2].
  Var position_feature(const ParamStore& ps, const PolarOffset& offset) const;

  // Per-partition mean of concat(feature, position feature); empty
  // partitions are zero rows.
  ResonanceMatrix gather(const std::vector<Var>& features, const std::vector<Var>& positions,
                         const std::vector<PolarOffset>& offsets) const;
  // Full pipeline from raw observations.
  ResonanceMatrix build(const ParamStore& ps, const Tensor& ego_obs,
                        const std::vector<Tensor>& neighbors) const;

  // Encoder sequence: concat over rows of [concat(dfe, z_r) ; F_R],
  // [T_h + n_theta, d].
  Var encoder_input(const Var& diff_feature, const Var& resonance_matrix,
                    const Tensor& z_r) const;
  // T_r, D_r and the inverse transform: [t_f, 2].
  Var sample_re_bias(const ParamStore& ps, const Var& diff_feature, const Var& resonance_matrix,
                     const Var& diff_spectrum, const Tensor& z_r) const;

  const selfvib::SpectralEmbedding& embedding() const { return nr1_; }
  const nn::Mlp& pair_encoder() const { return nr2_; }
  const nn::Linear& position_layer() const { return pos_; }
  const nn::Transformer& transformer() const { return tr_; }
  const nn::Mlp& decoder() const { return dr_; }

 private:
  ModelConfig cfg_;
  selfvib::SpectralEmbedding nr1_;
  nn::Mlp nr2_;
  nn::Linear pos_;
  nn::Transformer tr_;
  nn::Mlp dr_;
};

}  // namespace revib::resonance
