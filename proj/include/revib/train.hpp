#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "revib/model.hpp"
#include "revib/optimizer.hpp"

namespace revib {

struct TrainConfig {
  int k_train = 20;
  int k_eval = 20;
  int epochs = 50;
  int batch_size = 500;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

// min_k ||y - pred_k|| (Frobenius over [t_f, 2]). `argmin` receives the
// lowest index attaining the minimum.
double best_of_k_loss(const Tensor& y, const std::vector<Tensor>& preds,
                      std::size_t* argmin = nullptr);

struct SampleLoss {
  double loss = 0.0;
  std::size_t chosen = 0;
};

// Best-of-K loss of one sample with `weight * loss` back-propagated into
// `ps`. All K draws are evaluated without a graph; only the winning draw is
// re-run with gradients, which is the subgradient of the min.
SampleLoss accumulate_sample_gradient(const ReModel& model, const ParamStore& ps,
                                      const data::Sample& sample,
                                      const std::vector<Noise>& noise, double weight);

// Mean best-of-K loss without touching gradients.
double mean_best_of_k_loss(const ReModel& model, const std::vector<data::Sample>& samples, int k,
                           std::uint64_t seed);

struct TrainResult {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // mean per-sample loss seen during each epoch
  long steps = 0;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

TrainResult train(ReModel& model, const std::vector<data::Sample>& samples,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace revib
