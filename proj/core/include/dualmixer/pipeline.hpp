#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dualmixer/cmapss.hpp"
#include "dualmixer/tensor.hpp"

namespace dualmixer::data {

/// RUL cap for the piecewise-linear label.
inline constexpr double kRulKnee = 125.0;

/// Per-variable minimum and maximum (1 x k each), fit on training data only.
struct NormStats {
  Tensor min;
  Tensor max;
};

/// One model input: a w x k normalised window and its label.
struct WindowSample {
  Tensor values;
  double label = 0.0;            ///< normalised RUL in [0, 1]
  int unit_id = 0;
  std::size_t anchor_index = 0;  ///< position in the unit's window sequence
  int true_rul_cycles = 0;       ///< remaining cycles at the window's last row
};

/// Contiguous run of windows belonging to one unit.
struct UnitSpan {
  int unit_id = 0;
  std::size_t begin = 0;
  std::size_t count = 0;
};

/// Training windows grouped by unit, each unit's windows in time order.
struct WindowDataset {
  std::vector<WindowSample> samples;
  std::vector<UnitSpan> units;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  /// Index into `units` of the span containing sample i.
  std::size_t span_of(std::size_t sample) const;
};

/// Fits min/max over every row of every series' sensor matrix. Throws
/// ConfigError if a variable is constant.
NormStats fit_minmax(const std::vector<RawSeries>& train);
/// (x - min) / (max - min) per column; no clipping.
Tensor apply_minmax(const Tensor& x, const NormStats& stats);
/// x * (max - min) + min per column.
Tensor invert_minmax(const Tensor& x, const NormStats& stats);
std::vector<RawSeries> apply_minmax(const std::vector<RawSeries>& series, const NormStats& stats);

/// floor((length - window) / stride) + 1, or 0 when length < window.
std::size_t window_count(std::size_t length, std::size_t window, std::size_t stride);
/// Windows at offsets 0, stride, 2*stride, ...; empty when length < window.
std::vector<Tensor> sliding_window(const Tensor& values, std::size_t window, std::size_t stride);

/// min(R, knee) / knee. Throws ContractError for R < 0.
double piecewise_label(double remaining_cycles, double knee = kRulKnee);

/// Windows of every unit with length >= window; shorter units are skipped
/// with a warning. Labels use the RUL at the window's last cycle.
WindowDataset build_training_windows(const std::vector<RawSeries>& normalized, std::size_t window,
                                     std::size_t stride, double knee = kRulKnee);

/// One sample per test unit: the final `window` cycles, left-padded by
/// repeating the first cycle when the unit is shorter.
std::vector<WindowSample> build_test_set(const std::vector<RawSeries>& normalized,
                                         const std::vector<int>& true_rul, std::size_t window,
                                         double knee = kRulKnee);

/// Everything a run needs from one sub-dataset.
struct PreparedData {
  WindowDataset train;
  std::vector<WindowSample> test;
  NormStats stats;
  std::size_t n_vars = 0;
};

struct PipelineOptions {
  std::size_t window = 30;
  std::size_t stride = 1;
  bool select_sensors = true;
  double knee = kRulKnee;
};

/// Selection (optional), normalisation with training stats, windows and labels.
PreparedData prepare(const std::vector<RawSeries>& train, const std::vector<RawSeries>& test,
                     const std::vector<int>& test_rul, const PipelineOptions& options);

/// Reads train_<name>.txt, test_<name>.txt and RUL_<name>.txt from `dir`.
struct CmapssFiles {
  std::vector<RawSeries> train;
  std::vector<RawSeries> test;
  std::vector<int> test_rul;
};
CmapssFiles load_cmapss(const std::filesystem::path& dir, const std::string& name);
/// True when all three files exist.
bool cmapss_available(const std::filesystem::path& dir, const std::string& name);

}  // namespace dualmixer::data
