#pragma once

#include "revib/interpolation.hpp"
#include "revib/layers.hpp"
#include "revib/spectrum.hpp"

namespace revib {

struct ModelConfig {
  nn::TransformerConfig transformer;
  spectrum::TransformKind transform = spectrum::TransformKind::kHaar;
  int t_h = 8;
  int t_f = 12;
  int n_way = 4;
  int n_theta = 8;
  selfvib::InterpolationMode interpolation = selfvib::InterpolationMode::kHermite;
  bool outer_product = true;
  std::size_t embed_hidden = 0;  // 0 means d
  bool zero_init_decoders = false;

  // Ablation switches: a disabled term is zero in the superposition.
  bool use_linear_base = true;
  bool use_self_bias = true;
  bool use_re_bias = true;

  std::size_t d() const { return transformer.d; }
  std::size_t half_d() const { return transformer.d / 2; }
  std::size_t hidden_width() const { return embed_hidden ? embed_hidden : transformer.d; }
  spectrum::SpectrumShape obs_spectrum() const;
  spectrum::SpectrumShape waypoint_spectrum() const;
  spectrum::SpectrumShape future_spectrum() const;

  void validate() const;
};

}  // namespace revib
