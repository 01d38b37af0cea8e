#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "revib/dataio.hpp"
#include "revib/linear_base.hpp"
#include "revib/model_config.hpp"
#include "revib/resonance.hpp"
#include "revib/self_vibration.hpp"

namespace revib {

using nn::ParamStore;
using nn::Tensor;
using nn::Var;

// The three superposed terms of one prediction and their sum.
struct BiasSet {
  Tensor base;       // [t_f, 2]
  Tensor self_bias;  // [t_f, 2]
  Tensor re_bias;    // [t_f, 2]
  Tensor sum;        // base + self_bias + re_bias
};

// Noise pair for one sampled prediction, each [T_h, d/2].
struct Noise {
  Tensor z_s;
  Tensor z_r;
};

class ReModel {
 public:
  ReModel(const ModelConfig& cfg, std::uint64_t seed);

  // Everything that does not depend on the noise draw.
  struct Encoded {
    linear::LinearPair linear;
    Var diff_feature;   // [T_h, d/2]
    Var fit_spectrum;   // T(fit), [T_h, M]
    Var diff_spectrum;  // T(obs - fit), [T_h, M]
    resonance::ResonanceMatrix resonance;
  };

  struct Decoded {
    Var self_bias;  // [t_f, 2]
    Var re_bias;    // [t_f, 2]
    Var sum;        // base + self + re
  };

  Encoded encode(const ParamStore& ps, const data::Sample& sample) const;
  Decoded decode(const ParamStore& ps, const Encoded& enc, const Noise& noise) const;

  // K predictions with fresh noise per draw; deterministic in `seed`.
  std::vector<BiasSet> predict(const data::Sample& sample, int k, std::uint64_t seed) const;
  std::vector<BiasSet> predict(const data::Sample& sample, const std::vector<Noise>& noise) const;
  // Equilibrium prediction (z_s = z_r = 0).
  BiasSet predict_equilibrium(const data::Sample& sample) const;

  Noise zero_noise() const;
  Noise draw_noise(std::mt19937_64& rng) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  const selfvib::SelfVibration& self_vibration() const { return self_; }
  const resonance::Resonance& resonance() const { return re_; }

  // Zeroes the final decoder layer of a head, which removes that term.
  void zero_self_head();
  void zero_re_head();

 private:
  BiasSet to_bias_set(const Encoded& enc, const Decoded& dec) const;

  ModelConfig cfg_;
  ParamStore params_;
  selfvib::SelfVibration self_;
  resonance::Resonance re_;
};

}  // namespace revib
