#pragma once

#include <string>

#include "json.hpp"
#include "revib/dataio.hpp"
#include "revib/model_config.hpp"
#include "revib/train.hpp"

namespace revib {

// Every tunable of a run in one JSON document. Missing keys take their
// defaults; unknown keys are rejected so typos do not pass silently.
// The model horizon always follows dataset.t_h / dataset.t_f.
struct RunConfig {
  data::DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig parse_run_config(const std::string& text);
std::string dump_config(const RunConfig& cfg);

nlohmann::json to_json(const ModelConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);

namespace data {
nlohmann::json to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& doc);
}  // namespace data

}  // namespace revib
