#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dualmixer/dual_mixer.hpp"
#include "dualmixer/pipeline.hpp"

namespace dualmixer::harness {

/// Samples with a true label below this floor are left out of MAPE.
inline constexpr double kMapeFloor = 0.01;

double rmse(std::span<const double> truth, std::span<const double> predicted);
/// 100 * mean(|y - yhat| / y) over samples with y >= floor; nullopt if none qualify.
std::optional<double> mape(std::span<const double> truth, std::span<const double> predicted,
                           double floor = kMapeFloor);
std::size_t mape_sample_count(std::span<const double> truth, double floor = kMapeFloor);

double clamp_unit(double x);

/// Per-sample inference shared by evaluation and feature export.
struct Inference {
  std::vector<double> predictions;           ///< clamped to [0, 1]
  std::vector<std::vector<double>> features; ///< flattened l*d, only when requested
};
Inference infer(const model::DualMixer& model, const std::vector<data::WindowSample>& samples,
                bool with_features);

struct EvalResult {
  double rmse = 0.0;
  std::optional<double> mape;
  std::size_t samples = 0;
  std::size_t mape_samples = 0;
  std::vector<double> predictions;
};

/// RMSE and floored MAPE on clamped predictions. Throws on an empty set.
EvalResult evaluate(const model::DualMixer& model, const std::vector<data::WindowSample>& samples);

/// Spearman rank correlation with average ranks for ties. nullopt when
/// either side is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Per unit: cosine similarity of every window's flattened feature to the
/// unit's first window, against the label gap to that window. `rho` is the
/// mean Spearman correlation over units where it is defined.
struct RankingResult {
  double rho = 0.0;
  std::size_t units = 0;
  std::vector<double> per_unit;
};
RankingResult feature_ranking(const model::DualMixer& model, const data::WindowDataset& dataset);

}  // namespace dualmixer::harness
