#include "revib/layers.hpp"

#include <cmath>
#include <random>

#include "revib/errors.hpp"

namespace revib::nn {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
  return splitmix64(seed ^ fnv1a(tag));
}

ParamId ParamStore::add(const std::string& name, Shape shape, Init init, std::size_t fan_in) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  Tensor value(shape);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      value.fill(1.0);
      break;
    case Init::kUniformFanIn: {
      if (fan_in == 0) throw ConfigError("parameter " + name + " needs a positive fan-in");
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::mt19937_64 rng(derive_seed(seed_, name));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : value.storage()) v = dist(rng);
      break;
    }
  }
  const ParamId id = params_.size();
  params_.push_back(Var::leaf(std::move(value)));
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

const Var& ParamStore::at(const std::string& name) const { return params_.at(id_of(name)); }

ParamId ParamStore::id_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore copy(seed_);
  copy.names_ = names_;
  copy.index_ = index_;
  copy.params_.reserve(params_.size());
  for (const auto& p : params_) copy.params_.push_back(Var::leaf(p.value()));
  return copy;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.names_ != names_) throw ShapeError("parameter stores have different layouts");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (other.params_[i].shape() != params_[i].shape()) {
      throw ShapeError("parameter " + names_[i] + ": shape mismatch");
    }
    params_[i].mutable_value() = other.params_[i].value();
  }
}

Linear Linear::create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = ps.add(name + ".w", {in, out}, Init::kUniformFanIn, in);
  l.bias = ps.add(name + ".b", {out}, Init::kUniformFanIn, in);
  return l;
}

Var Linear::operator()(const ParamStore& ps, const Var& x) const {
  if (x.value().cols() != in) {
    throw ShapeError("affine: input " + shape_str(x.shape()) + " vs weight " +
                     shape_str(ps[weight].shape()));
  }
  return add(matmul(x, ps[weight]), ps[bias]);
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, std::size_t width) {
  LayerNorm ln;
  ln.gamma = ps.add(name + ".gamma", {width}, Init::kOnes);
  ln.beta = ps.add(name + ".beta", {width}, Init::kZeros);
  return ln;
}

Var LayerNorm::operator()(const ParamStore& ps, const Var& x) const {
  return layer_norm(x, ps[gamma], ps[beta]);
}

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return relu(x);
    case Activation::kTanh:
      return tanh(x);
    case Activation::kNone:
      break;
  }
  return x;
}

Mlp Mlp::create(ParamStore& ps, const std::string& name, const std::vector<std::size_t>& widths,
                Activation hidden, Activation output) {
  if (widths.size() < 2) throw ConfigError("mlp " + name + " needs at least two widths");
  Mlp m;
  m.hidden = hidden;
  m.output = output;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    m.layers.push_back(
        Linear::create(ps, name + ".l" + std::to_string(i), widths[i], widths[i + 1]));
  }
  return m;
}

Var Mlp::operator()(const ParamStore& ps, const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](ps, h);
    h = activate(h, i + 1 == layers.size() ? output : hidden);
  }
  return h;
}

void TransformerConfig::validate() const {
  if (d == 0 || n_heads == 0 || n_layers == 0) {
    throw ConfigError("transformer sizes must all be >= 1");
  }
  if (d % n_heads != 0) {
    throw ConfigError("feature width d=" + std::to_string(d) + " is not divisible by n_heads=" +
                      std::to_string(n_heads));
  }
  if (d % 2 != 0) throw ConfigError("feature width d must be even");
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& ps, const std::string& name,
                                              const TransformerConfig& cfg) {
  cfg.validate();
  MultiHeadAttention a;
  a.heads = cfg.n_heads;
  a.q = Linear::create(ps, name + ".q", cfg.d, cfg.d);
  a.k = Linear::create(ps, name + ".k", cfg.d, cfg.d);
  a.v = Linear::create(ps, name + ".v", cfg.d, cfg.d);
  a.o = Linear::create(ps, name + ".o", cfg.d, cfg.d);
  return a;
}

Var MultiHeadAttention::operator()(const ParamStore& ps, const Var& query, const Var& key,
                                   const Var& value, std::vector<Tensor>* weights) const {
  const std::size_t d = q.in;
  if (query.value().cols() != d || key.value().cols() != d || value.value().cols() != d) {
    throw ShapeError("attention: widths " + shape_str(query.shape()) + ", " +
                     shape_str(key.shape()) + ", " + shape_str(value.shape()) +
                     " must equal d=" + std::to_string(d));
  }
  if (key.value().rows() != value.value().rows()) {
    throw ShapeError("attention: key and value lengths differ");
  }
  if (heads == 0 || d % heads != 0) throw ConfigError("attention: d not divisible by heads");
  const std::size_t dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Var qp = q(ps, query);
  const Var kp = k(ps, key);
  const Var vp = v(ps, value);
  std::vector<Var> outs;
  outs.reserve(heads);
  if (weights) weights->clear();
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = slice_cols(qp, h * dh, dh);
    const Var kh = slice_cols(kp, h * dh, dh);
    const Var vh = slice_cols(vp, h * dh, dh);
    const Var att = softmax_rows(scale(matmul_nt(qh, kh), inv_scale));
    if (weights) weights->push_back(att.value());
    outs.push_back(matmul(att, vh));
  }
  return o(ps, heads == 1 ? outs.front() : concat_cols(outs));
}

Tensor sinusoidal_encoding(std::size_t length, std::size_t width) {
  Tensor pe({length, width});
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < width; ++i) {
      const double expo = static_cast<double>(2 * (i / 2)) / static_cast<double>(width);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Transformer::Transformer(ParamStore& ps, const std::string& name, const TransformerConfig& cfg,
                         std::size_t src_width, std::size_t tgt_width)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.d;
  src_in_ = Linear::create(ps, name + ".src_in", src_width, d);
  tgt_in_ = Linear::create(ps, name + ".tgt_in", tgt_width, d);
  for (std::size_t i = 0; i < cfg_.n_layers; ++i) {
    const std::string p = name + ".enc" + std::to_string(i);
    EncoderLayer layer;
    layer.norm_attn = LayerNorm::create(ps, p + ".ln1", d);
    layer.attn = MultiHeadAttention::create(ps, p + ".attn", cfg_);
    layer.norm_ffn = LayerNorm::create(ps, p + ".ln2", d);
    layer.ffn = Mlp::create(ps, p + ".ffn", {d, cfg_.ffn_width(), d}, Activation::kRelu,
                            Activation::kNone);
    encoder_.push_back(std::move(layer));
  }
  enc_norm_ = LayerNorm::create(ps, name + ".enc_ln", d);
  for (std::size_t i = 0; i < cfg_.n_layers; ++i) {
    const std::string p = name + ".dec" + std::to_string(i);
    DecoderLayer layer;
    layer.norm_self = LayerNorm::create(ps, p + ".ln1", d);
    layer.self_attn = MultiHeadAttention::create(ps, p + ".self", cfg_);
    layer.norm_cross = LayerNorm::create(ps, p + ".ln2", d);
    layer.cross_attn = MultiHeadAttention::create(ps, p + ".cross", cfg_);
    layer.norm_ffn = LayerNorm::create(ps, p + ".ln3", d);
    layer.ffn = Mlp::create(ps, p + ".ffn", {d, cfg_.ffn_width(), d}, Activation::kRelu,
                            Activation::kNone);
    decoder_.push_back(std::move(layer));
  }
  dec_norm_ = LayerNorm::create(ps, name + ".dec_ln", d);
  out_ = Linear::create(ps, name + ".out", d, d);
}

Var Transformer::operator()(const ParamStore& ps, const Var& src, const Var& tgt) const {
  if (!src.value().all_finite() || !tgt.value().all_finite()) {
    throw NumericError("transformer: non-finite input");
  }
  const std::size_t d = cfg_.d;
  Var x = add(src_in_(ps, src), Var::constant(sinusoidal_encoding(src.value().rows(), d)));
  for (const auto& layer : encoder_) {
    const Var n1 = layer.norm_attn(ps, x);
    x = add(x, layer.attn(ps, n1, n1));
    x = add(x, layer.ffn(ps, layer.norm_ffn(ps, x)));
  }
  const Var memory = enc_norm_(ps, x);

  Var y = add(tgt_in_(ps, tgt), Var::constant(sinusoidal_encoding(tgt.value().rows(), d)));
  for (const auto& layer : decoder_) {
    const Var n1 = layer.norm_self(ps, y);
    y = add(y, layer.self_attn(ps, n1, n1));
    y = add(y, layer.cross_attn(ps, layer.norm_cross(ps, y), memory));
    y = add(y, layer.ffn(ps, layer.norm_ffn(ps, y)));
  }
  return out_(ps, dec_norm_(ps, y));
}

}  // namespace revib::nn
