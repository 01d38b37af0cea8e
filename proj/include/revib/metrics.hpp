#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "revib/model.hpp"

namespace revib::metrics {

using nn::Tensor;

// min over k of the mean per-step Euclidean distance.
double min_ade(const Tensor& y, const std::vector<Tensor>& preds);
// min over k of the final-step Euclidean distance. The best k here need not
// be the best k for min_ade.
double min_fde(const Tensor& y, const std::vector<Tensor>& preds);

struct SampleMetric {
  std::size_t index = 0;
  std::string scene;
  long ego_id = 0;
  long start_frame = 0;
  double min_ade = 0.0;
  double min_fde = 0.0;
};

struct MetricReport {
  std::vector<SampleMetric> samples;
  double mean_ade = 0.0;
  double mean_fde = 0.0;
  int k = 0;
  std::string predictor;
};

enum class Predictor {
  kModel,
  kLinearBase,  // single linear-base prediction, ignores the networks
};

MetricReport evaluate(const ReModel& model, const std::vector<data::Sample>& samples, int k,
                      std::uint64_t seed, Predictor predictor = Predictor::kModel,
                      int threads = 1);

// Reports from precomputed per-sample prediction sets.
MetricReport summarize(const std::vector<data::Sample>& samples,
                       const std::vector<std::vector<Tensor>>& predictions);

std::string report_json(const MetricReport& report);
// Header: index,scene,ego_id,start_frame,min_ade,min_fde
std::string report_csv(const MetricReport& report);

}  // namespace revib::metrics
