#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "revib/autodiff.hpp"

namespace revib::nn {

using ParamId = std::size_t;

enum class Init { kUniformFanIn, kZeros, kOnes };

// Named trainable tensors. Each tensor is a leaf Var whose gradient
// accumulates across backward calls until zero_grad().
//
// Uniform initialization draws from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with
// an engine seeded from (store seed, parameter name), so every parameter's
// initial value is a pure function of those two and its shape.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  ParamId add(const std::string& name, Shape shape, Init init, std::size_t fan_in = 0);

  const Var& operator[](ParamId id) const { return params_.at(id); }
  Var& operator[](ParamId id) { return params_.at(id); }
  const Var& at(const std::string& name) const;
  ParamId id_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  std::uint64_t seed() const { return seed_; }
  std::size_t total_elements() const;

  void zero_grad();
  // Deep copy with fresh leaves (independent values and gradients).
  ParamStore clone() const;
  // Overwrites values from another store with identical names and shapes.
  void copy_values_from(const ParamStore& other);

 private:
  std::uint64_t seed_;
  std::vector<Var> params_;
  std::vector<std::string> names_;
  std::map<std::string, ParamId> index_;
};

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag);

struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out);
  Var operator()(const ParamStore& ps, const Var& x) const;
};

struct LayerNorm {
  ParamId gamma = 0;
  ParamId beta = 0;

  static LayerNorm create(ParamStore& ps, const std::string& name, std::size_t width);
  Var operator()(const ParamStore& ps, const Var& x) const;
};

enum class Activation { kNone, kRelu, kTanh };

Var activate(const Var& x, Activation act);

// Stack of affine layers; `hidden` applies between layers, `output` after the last.
struct Mlp {
  std::vector<Linear> layers;
  Activation hidden = Activation::kRelu;
  Activation output = Activation::kNone;

  static Mlp create(ParamStore& ps, const std::string& name, const std::vector<std::size_t>& widths,
                    Activation hidden, Activation output);
  Var operator()(const ParamStore& ps, const Var& x) const;
  const Linear& last() const { return layers.back(); }
};

struct TransformerConfig {
  std::size_t d = 128;
  std::size_t n_heads = 8;
  std::size_t n_layers = 2;
  std::size_t ffn = 0;  // 0 means 2 * d

  std::size_t ffn_width() const { return ffn ? ffn : 2 * d; }
  void validate() const;
};

struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParamStore& ps, const std::string& name,
                                   const TransformerConfig& cfg);
  // query [Tq, d], key/value [Tk, d] -> [Tq, d]. When `weights` is given
  // it receives each head's [Tq, Tk] attention matrix.
  Var operator()(const ParamStore& ps, const Var& query, const Var& key, const Var& value,
                 std::vector<Tensor>* weights = nullptr) const;
  Var operator()(const ParamStore& ps, const Var& query, const Var& memory) const {
    return (*this)(ps, query, memory, memory);
  }
};

struct EncoderLayer {
  LayerNorm norm_attn, norm_ffn;
  MultiHeadAttention attn;
  Mlp ffn;
};

struct DecoderLayer {
  LayerNorm norm_self, norm_cross, norm_ffn;
  MultiHeadAttention self_attn, cross_attn;
  Mlp ffn;
};

// Pre-norm encoder-decoder Transformer. The source is projected from
// `src_width` to d and the target from `tgt_width` to d; both get fixed
// sinusoidal position encodings. Output: one d-wide row per target row.
class Transformer {
 public:
  Transformer() = default;
  Transformer(ParamStore& ps, const std::string& name, const TransformerConfig& cfg,
              std::size_t src_width, std::size_t tgt_width);

  Var operator()(const ParamStore& ps, const Var& src, const Var& tgt) const;

  const TransformerConfig& config() const { return cfg_; }
  const Linear& src_projection() const { return src_in_; }
  const Linear& output_projection() const { return out_; }

 private:
  TransformerConfig cfg_;
  Linear src_in_, tgt_in_, out_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  LayerNorm enc_norm_, dec_norm_;
};

Tensor sinusoidal_encoding(std::size_t length, std::size_t width);

}  // namespace revib::nn
