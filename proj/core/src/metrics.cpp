#include "dualmixer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualmixer/error.hpp"

namespace dualmixer::harness {

namespace {
constexpr std::size_t kInferenceChunk = 128;
}

double rmse(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw DimensionError("rmse: length mismatch");
  if (truth.empty()) throw ContractError("rmse of an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - predicted[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

std::optional<double> mape(std::span<const double> truth, std::span<const double> predicted,
                           double floor) {
  if (truth.size() != predicted.size()) throw DimensionError("mape: length mismatch");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < floor) continue;
    acc += std::abs((truth[i] - predicted[i]) / truth[i]);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return 100.0 * acc / static_cast<double>(n);
}

std::size_t mape_sample_count(std::span<const double> truth, double floor) {
  return static_cast<std::size_t>(
      std::count_if(truth.begin(), truth.end(), [floor](double y) { return y >= floor; }));
}

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

Inference infer(const model::DualMixer& model, const std::vector<data::WindowSample>& samples,
                bool with_features) {
  Inference out;
  out.predictions.reserve(samples.size());
  for (std::size_t begin = 0; begin < samples.size(); begin += kInferenceChunk) {
    const std::size_t end = std::min(samples.size(), begin + kInferenceChunk);
    std::vector<const numerics::Tensor*> windows;
    for (std::size_t i = begin; i < end; ++i) windows.push_back(&samples[i].values);
    numerics::Graph g(model.parameters());
    auto r = model.forward(g, g.constant(model::stack_windows(windows)), windows.size());
    const auto& rul = r.rul.value();
    for (std::size_t i = 0; i < windows.size(); ++i) out.predictions.push_back(clamp_unit(rul[i]));
    if (with_features) {
      const auto& flat = r.flat.value();
      for (std::size_t i = 0; i < windows.size(); ++i) {
        auto row = flat.row(i);
        out.features.emplace_back(row.begin(), row.end());
      }
    }
  }
  return out;
}

EvalResult evaluate(const model::DualMixer& model, const std::vector<data::WindowSample>& samples) {
  if (samples.empty()) throw ContractError("evaluate on an empty test set");
  Inference inf = infer(model, samples, false);
  std::vector<double> truth;
  truth.reserve(samples.size());
  for (const auto& s : samples) truth.push_back(s.label);
  EvalResult r;
  r.rmse = rmse(truth, inf.predictions);
  r.mape = mape(truth, inf.predictions);
  r.samples = samples.size();
  r.mape_samples = mape_sample_count(truth);
  r.predictions = std::move(inf.predictions);
  return r;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVectorError("cosine of a zero feature vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

RankingResult feature_ranking(const model::DualMixer& model, const data::WindowDataset& dataset) {
  RankingResult out;
  double acc = 0.0;
  for (const auto& span : dataset.units) {
    if (span.count < 3) continue;
    std::vector<data::WindowSample> unit(dataset.samples.begin() + static_cast<std::ptrdiff_t>(span.begin),
                                         dataset.samples.begin() +
                                             static_cast<std::ptrdiff_t>(span.begin + span.count));
    Inference inf = infer(model, unit, true);
    std::vector<double> sim, gap;
    for (std::size_t k = 1; k < unit.size(); ++k) {
      sim.push_back(cosine(inf.features[0], inf.features[k]));
      gap.push_back(std::abs(unit[0].label - unit[k].label));
    }
    if (auto rho = spearman(sim, gap)) {
      out.per_unit.push_back(*rho);
      acc += *rho;
    }
  }
  out.units = out.per_unit.size();
  if (out.units == 0) throw ContractError("feature ranking: no unit with a defined correlation");
  out.rho = acc / static_cast<double>(out.units);
  return out;
}

}  // namespace dualmixer::harness
