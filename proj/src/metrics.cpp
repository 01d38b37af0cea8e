#include "revib/metrics.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "revib/errors.hpp"

namespace revib::metrics {
namespace {

void check(const Tensor& y, const std::vector<Tensor>& preds) {
  if (preds.empty()) throw ContractError("displacement metrics need K >= 1 predictions");
  if (y.rank() != 2 || y.dim(1) != 2 || y.dim(0) == 0) {
    throw ShapeError("ground truth must be [t_f, 2], got " + nn::shape_str(y.shape()));
  }
  for (const Tensor& p : preds) {
    if (p.shape() != y.shape()) {
      throw ShapeError("prediction " + nn::shape_str(p.shape()) + " vs ground truth " +
                       nn::shape_str(y.shape()));
    }
  }
}

double step_distance(const Tensor& a, const Tensor& b, std::size_t t) {
  return std::hypot(a(t, 0) - b(t, 0), a(t, 1) - b(t, 1));
}

}  // namespace

double min_ade(const Tensor& y, const std::vector<Tensor>& preds) {
  check(y, preds);
  double best = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    double total = 0.0;
    for (std::size_t t = 0; t < y.dim(0); ++t) total += step_distance(y, preds[k], t);
    const double ade = total / static_cast<double>(y.dim(0));
    if (k == 0 || ade < best) best = ade;
  }
  return best;
}

double min_fde(const Tensor& y, const std::vector<Tensor>& preds) {
  check(y, preds);
  const std::size_t last = y.dim(0) - 1;
  double best = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double fde = step_distance(y, preds[k], last);
    if (k == 0 || fde < best) best = fde;
  }
  return best;
}

MetricReport summarize(const std::vector<data::Sample>& samples,
                       const std::vector<std::vector<Tensor>>& predictions) {
  if (samples.size() != predictions.size()) {
    throw ShapeError("need one prediction set per sample");
  }
  MetricReport report;
  report.k = predictions.empty() ? 0 : static_cast<int>(predictions.front().size());
  double ade = 0.0, fde = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SampleMetric m;
    m.index = i;
    m.scene = samples[i].scene;
    m.ego_id = samples[i].ego_id;
    m.start_frame = samples[i].start_frame;
    m.min_ade = min_ade(samples[i].ego_future, predictions[i]);
    m.min_fde = min_fde(samples[i].ego_future, predictions[i]);
    ade += m.min_ade;
    fde += m.min_fde;
    report.samples.push_back(std::move(m));
  }
  if (!samples.empty()) {
    report.mean_ade = ade / static_cast<double>(samples.size());
    report.mean_fde = fde / static_cast<double>(samples.size());
  }
  return report;
}

MetricReport evaluate(const ReModel& model, const std::vector<data::Sample>& samples, int k,
                      std::uint64_t seed, Predictor predictor, int threads) {
  if (k < 1) throw ContractError("K must be >= 1");
  std::vector<std::vector<Tensor>> preds(samples.size());
  auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      if (predictor == Predictor::kLinearBase) {
        preds[i] = {linear::linear_base(samples[i].ego_obs, model.config().t_f).base};
        continue;
      }
      for (const BiasSet& b :
           model.predict(samples[i], k, nn::derive_seed(seed, std::to_string(i)))) {
        preds[i].push_back(b.sum);
      }
    }
  };
  const auto workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads), samples.size()));
  if (workers == 1) {
    run(0, samples.size());
  } else {
    const std::size_t chunk = (samples.size() + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(std::min(samples.size(), w * chunk), std::min(samples.size(), (w + 1) * chunk));
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  MetricReport report = summarize(samples, preds);
  report.k = predictor == Predictor::kLinearBase ? 1 : k;
  report.predictor = predictor == Predictor::kLinearBase ? "linear-base" : "model";
  return report;
}

std::string report_json(const MetricReport& report) {
  nlohmann::json doc;
  doc["predictor"] = report.predictor;
  doc["k"] = report.k;
  doc["samples"] = report.samples.size();
  doc["min_ade"] = report.mean_ade;
  doc["min_fde"] = report.mean_fde;
  return doc.dump(2) + "\n";
}

std::string report_csv(const MetricReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "index,scene,ego_id,start_frame,min_ade,min_fde\n";
  for (const SampleMetric& m : report.samples) {
    os << m.index << ',' << m.scene << ',' << m.ego_id << ',' << m.start_frame << ','
       << m.min_ade << ',' << m.min_fde << '\n';
  }
  return os.str();
}

}  // namespace revib::metrics
