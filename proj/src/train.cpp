#include "revib/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "revib/errors.hpp"

namespace revib {

void TrainConfig::validate() const {
  if (k_train < 1 || k_eval < 1) throw ConfigError("K must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (adam.lr < 0.0) throw ConfigError("learning rate must be >= 0");
}

double best_of_k_loss(const Tensor& y, const std::vector<Tensor>& preds, std::size_t* argmin) {
  if (preds.empty()) throw ContractError("best-of-K loss needs K >= 1");
  double best = 0.0;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k].shape() != y.shape()) {
      throw ShapeError("prediction " + nn::shape_str(preds[k].shape()) + " vs target " +
                       nn::shape_str(y.shape()));
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) {
      const double dlt = y[i] - preds[k][i];
      sq += dlt * dlt;
    }
    const double norm = std::sqrt(sq);
    if (k == 0 || norm < best) {
      best = norm;
      best_k = k;
    }
  }
  if (argmin) *argmin = best_k;
  return best;
}

SampleLoss accumulate_sample_gradient(const ReModel& model, const ParamStore& ps,
                                      const data::Sample& sample,
                                      const std::vector<Noise>& noise, double weight) {
  const ReModel::Encoded enc = model.encode(ps, sample);
  std::vector<Tensor> preds;
  {
    nn::NoGradGuard no_grad;
    for (const Noise& n : noise) preds.push_back(model.decode(ps, enc, n).sum.value());
  }
  SampleLoss out;
  out.loss = best_of_k_loss(sample.ego_future, preds, &out.chosen);
  const ReModel::Decoded dec = model.decode(ps, enc, noise[out.chosen]);
  const Var loss = nn::sqrt_scalar(nn::square_sum(nn::sub(dec.sum, Var::constant(sample.ego_future))));
  nn::backward(nn::scale(loss, weight));
  return out;
}

double mean_best_of_k_loss(const ReModel& model, const std::vector<data::Sample>& samples, int k,
                           std::uint64_t seed) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto sets = model.predict(samples[i], k, nn::derive_seed(seed, std::to_string(i)));
    std::vector<Tensor> preds;
    for (const auto& s : sets) preds.push_back(s.sum);
    total += best_of_k_loss(samples[i].ego_future, preds);
  }
  return total / static_cast<double>(samples.size());
}

namespace {

std::string describe(const data::Sample& s) {
  std::ostringstream os;
  os << "scene '" << s.scene << "' ego " << s.ego_id << " start frame " << s.start_frame;
  return os.str();
}

}  // namespace

TrainResult train(ReModel& model, const std::vector<data::Sample>& samples,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw ContractError("training split is empty");
  TrainResult result;
  result.initial_loss =
      mean_best_of_k_loss(model, samples, cfg.k_train, nn::derive_seed(cfg.seed, "init-loss"));

  ParamStore& ps = model.params();
  nn::Adam adam(cfg.adam);
  std::mt19937_64 order_rng(nn::derive_seed(cfg.seed, "order"));
  std::mt19937_64 noise_rng(nn::derive_seed(cfg.seed, "noise"));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(order_rng)]);
    }
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::size_t n = end - start;
      // Noise is drawn up front, in sample order, so it never depends on
      // how the batch is split between workers.
      std::vector<std::vector<Noise>> noise(n);
      for (auto& draws : noise) {
        draws.reserve(static_cast<std::size_t>(cfg.k_train));
        for (int k = 0; k < cfg.k_train; ++k) draws.push_back(model.draw_noise(noise_rng));
      }
      const double weight = 1.0 / static_cast<double>(n);
      std::vector<double> losses(n, 0.0);
      ps.zero_grad();

      auto run = [&](const ParamStore& store, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          losses[i] = accumulate_sample_gradient(model, store, samples[order[start + i]],
                                                 noise[i], weight)
                          .loss;
        }
      };

      const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n);
      if (workers <= 1) {
        run(ps, 0, n);
      } else {
        std::vector<ParamStore> replicas;
        replicas.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) replicas.push_back(ps.clone());
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              run(replicas[w], std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
        for (std::size_t w = 0; w < workers; ++w) {
          for (std::size_t p = 0; p < ps.size(); ++p) {
            const Tensor& g = replicas[w][p].grad();
            if (g.numel() == ps[p].value().numel()) ps[p].node()->grad_buffer() += g;
          }
        }
      }

      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(losses[i])) {
          throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch at " +
                             std::to_string(start / batch) + ": " +
                             describe(samples[order[start + i]]));
        }
        epoch_total += losses[i];
      }
      adam.step(ps);
      ++result.steps;
    }
    const double epoch_loss = epoch_total / static_cast<double>(samples.size());
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

}  // namespace revib
