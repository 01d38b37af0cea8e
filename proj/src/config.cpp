#include "revib/config.hpp"

#include <set>

#include "revib/errors.hpp"

namespace revib {
namespace {

using nlohmann::json;

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

ModelConfig model_from_json(const json& doc) {
  reject_unknown(doc,
                 {"d", "n_heads", "n_layers", "ffn", "transform", "n_way", "n_theta",
                  "interpolation", "outer_product", "embed_hidden", "zero_init_decoders",
                  "use_linear_base", "use_self_bias", "use_re_bias"},
                 "model");
  ModelConfig m;
  read(doc, "d", m.transformer.d, "model");
  read(doc, "n_heads", m.transformer.n_heads, "model");
  read(doc, "n_layers", m.transformer.n_layers, "model");
  read(doc, "ffn", m.transformer.ffn, "model");
  std::string transform = spectrum::to_string(m.transform);
  read(doc, "transform", transform, "model");
  m.transform = spectrum::parse_transform(transform);
  read(doc, "n_way", m.n_way, "model");
  read(doc, "n_theta", m.n_theta, "model");
  std::string interp = selfvib::to_string(m.interpolation);
  read(doc, "interpolation", interp, "model");
  m.interpolation = selfvib::parse_interpolation(interp);
  read(doc, "outer_product", m.outer_product, "model");
  read(doc, "embed_hidden", m.embed_hidden, "model");
  read(doc, "zero_init_decoders", m.zero_init_decoders, "model");
  read(doc, "use_linear_base", m.use_linear_base, "model");
  read(doc, "use_self_bias", m.use_self_bias, "model");
  read(doc, "use_re_bias", m.use_re_bias, "model");
  return m;
}

TrainConfig train_from_json(const json& doc) {
  reject_unknown(doc,
                 {"k_train", "k_eval", "epochs", "batch_size", "lr", "beta1", "beta2", "eps",
                  "seed", "threads"},
                 "train");
  TrainConfig t;
  read(doc, "k_train", t.k_train, "train");
  read(doc, "k_eval", t.k_eval, "train");
  read(doc, "epochs", t.epochs, "train");
  read(doc, "batch_size", t.batch_size, "train");
  read(doc, "lr", t.adam.lr, "train");
  read(doc, "beta1", t.adam.beta1, "train");
  read(doc, "beta2", t.adam.beta2, "train");
  read(doc, "eps", t.adam.eps, "train");
  read(doc, "seed", t.seed, "train");
  read(doc, "threads", t.threads, "train");
  return t;
}

}  // namespace

namespace data {

nlohmann::json to_json(const DatasetConfig& cfg) {
  return {{"t_h", cfg.t_h},
          {"t_f", cfg.t_f},
          {"dt", cfg.dt},
          {"stride", cfg.stride},
          {"split", cfg.split}};
}

DatasetConfig dataset_config_from_json(const nlohmann::json& doc) {
  reject_unknown(doc, {"t_h", "t_f", "dt", "stride", "split"}, "dataset");
  DatasetConfig cfg;
  read(doc, "t_h", cfg.t_h, "dataset");
  read(doc, "t_f", cfg.t_f, "dataset");
  read(doc, "dt", cfg.dt, "dataset");
  read(doc, "stride", cfg.stride, "dataset");
  read(doc, "split", cfg.split, "dataset");
  return cfg;
}

}  // namespace data

nlohmann::json to_json(const ModelConfig& m) {
  return {{"d", m.transformer.d},
          {"n_heads", m.transformer.n_heads},
          {"n_layers", m.transformer.n_layers},
          {"ffn", m.transformer.ffn_width()},
          {"transform", spectrum::to_string(m.transform)},
          {"n_way", m.n_way},
          {"n_theta", m.n_theta},
          {"interpolation", selfvib::to_string(m.interpolation)},
          {"outer_product", m.outer_product},
          {"embed_hidden", m.hidden_width()},
          {"zero_init_decoders", m.zero_init_decoders},
          {"use_linear_base", m.use_linear_base},
          {"use_self_bias", m.use_self_bias},
          {"use_re_bias", m.use_re_bias}};
}

nlohmann::json to_json(const TrainConfig& t) {
  return {{"k_train", t.k_train},   {"k_eval", t.k_eval},         {"epochs", t.epochs},
          {"batch_size", t.batch_size}, {"lr", t.adam.lr},        {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},   {"eps", t.adam.eps},          {"seed", t.seed},
          {"threads", t.threads}};
}

void RunConfig::validate() const {
  dataset.validate();
  if (model.t_h != dataset.t_h || model.t_f != dataset.t_f) {
    throw ConfigError("model horizon differs from dataset horizon");
  }
  model.validate();
  train.validate();
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {{"dataset", data::to_json(cfg.dataset)},
          {"model", to_json(cfg.model)},
          {"train", to_json(cfg.train)}};
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  reject_unknown(doc, {"dataset", "model", "train"}, "config");
  RunConfig cfg;
  if (doc.contains("dataset")) cfg.dataset = data::dataset_config_from_json(doc["dataset"]);
  if (doc.contains("model")) cfg.model = model_from_json(doc["model"]);
  if (doc.contains("train")) cfg.train = train_from_json(doc["train"]);
  cfg.model.t_h = cfg.dataset.t_h;
  cfg.model.t_f = cfg.dataset.t_f;
  cfg.validate();
  return cfg;
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(doc);
}

std::string dump_config(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

}  // namespace revib
