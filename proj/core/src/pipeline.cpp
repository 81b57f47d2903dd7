#include "dualmixer/pipeline.hpp"

#include <algorithm>
#include <limits>

#include "dualmixer/error.hpp"
#include "dualmixer/log.hpp"

namespace dualmixer::data {

std::size_t WindowDataset::span_of(std::size_t sample) const {
  auto it = std::upper_bound(units.begin(), units.end(), sample,
                             [](std::size_t s, const UnitSpan& u) { return s < u.begin; });
  if (it == units.begin()) throw ContractError("sample index precedes every unit span");
  const std::size_t k = static_cast<std::size_t>(std::distance(units.begin(), it)) - 1;
  if (sample >= units[k].begin + units[k].count) throw ContractError("sample index out of range");
  return k;
}

NormStats fit_minmax(const std::vector<RawSeries>& train) {
  if (train.empty()) throw ContractError("fit_minmax on an empty training set");
  const std::size_t k = train.front().sensors.cols();
  Tensor lo(1, k, std::numeric_limits<double>::infinity());
  Tensor hi(1, k, -std::numeric_limits<double>::infinity());
  std::size_t rows = 0;
  for (const auto& s : train) {
    if (s.sensors.cols() != k) throw DimensionError("fit_minmax: series with differing widths");
    for (std::size_t r = 0; r < s.sensors.rows(); ++r, ++rows)
      for (std::size_t j = 0; j < k; ++j) {
        lo[j] = std::min(lo[j], s.sensors(r, j));
        hi[j] = std::max(hi[j], s.sensors(r, j));
      }
  }
  if (rows == 0) throw ContractError("fit_minmax: training series contain no rows");
  for (std::size_t j = 0; j < k; ++j) {
    if (!(hi[j] > lo[j])) {
      throw ConfigError("variable " + std::to_string(j) + " is constant in the training data");
    }
  }
  return NormStats{std::move(lo), std::move(hi)};
}

Tensor apply_minmax(const Tensor& x, const NormStats& stats) {
  if (x.cols() != stats.min.cols()) {
    throw DimensionError("apply_minmax: data has " + std::to_string(x.cols()) +
                         " columns, stats have " + std::to_string(stats.min.cols()));
  }
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(r, j) = (x(r, j) - stats.min[j]) / (stats.max[j] - stats.min[j]);
  return out;
}

Tensor invert_minmax(const Tensor& x, const NormStats& stats) {
  if (x.cols() != stats.min.cols()) throw DimensionError("invert_minmax: width mismatch");
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(r, j) = x(r, j) * (stats.max[j] - stats.min[j]) + stats.min[j];
  return out;
}

std::vector<RawSeries> apply_minmax(const std::vector<RawSeries>& series, const NormStats& stats) {
  std::vector<RawSeries> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    out.push_back(RawSeries{s.unit_id, s.cycles, s.settings, apply_minmax(s.sensors, stats)});
  }
  return out;
}

std::size_t window_count(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ContractError("window and stride must be >= 1");
  if (length < window) return 0;
  return (length - window) / stride + 1;
}

std::vector<Tensor> sliding_window(const Tensor& values, std::size_t window, std::size_t stride) {
  const std::size_t n = window_count(values.rows(), window, stride);
  const std::size_t cols = values.cols();
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto first = values.values().begin() + static_cast<std::ptrdiff_t>(k * stride * cols);
    out.emplace_back(window, cols,
                     std::vector<double>(first, first + static_cast<std::ptrdiff_t>(window * cols)));
  }
  return out;
}

double piecewise_label(double remaining_cycles, double knee) {
  if (remaining_cycles < 0.0) {
    throw ContractError("remaining cycles must be non-negative, got " +
                        std::to_string(remaining_cycles));
  }
  if (knee <= 0.0) throw ContractError("label knee must be positive");
  return std::min(remaining_cycles, knee) / knee;
}

WindowDataset build_training_windows(const std::vector<RawSeries>& normalized, std::size_t window,
                                     std::size_t stride, double knee) {
  WindowDataset ds;
  for (const auto& s : normalized) {
    const std::size_t length = s.length();
    if (length < window) {
      log::warning("unit " + std::to_string(s.unit_id) + " has " + std::to_string(length) +
                   " cycles, shorter than window " + std::to_string(window) + "; skipped");
      continue;
    }
    auto windows = sliding_window(s.sensors, window, stride);
    UnitSpan span{s.unit_id, ds.samples.size(), windows.size()};
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const std::size_t last = k * stride + window - 1;
      const int remaining = static_cast<int>(length - 1 - last);
      ds.samples.push_back(WindowSample{std::move(windows[k]), piecewise_label(remaining, knee),
                                        s.unit_id, k, remaining});
    }
    ds.units.push_back(span);
  }
  return ds;
}

std::vector<WindowSample> build_test_set(const std::vector<RawSeries>& normalized,
                                         const std::vector<int>& true_rul, std::size_t window,
                                         double knee) {
  if (normalized.size() != true_rul.size()) {
    throw ContractError("RUL file lists " + std::to_string(true_rul.size()) + " values for " +
                        std::to_string(normalized.size()) + " test units");
  }
  if (window == 0) throw ContractError("window must be >= 1");
  std::vector<WindowSample> out;
  out.reserve(normalized.size());
  for (std::size_t u = 0; u < normalized.size(); ++u) {
    const auto& s = normalized[u];
    const std::size_t length = s.length();
    if (length == 0) throw ContractError("test unit " + std::to_string(s.unit_id) + " is empty");
    const std::size_t cols = s.sensors.cols();
    Tensor w(window, cols);
    const std::size_t pad = length < window ? window - length : 0;
    for (std::size_t r = 0; r < window; ++r) {
      const std::size_t src = r < pad ? 0 : length - (window - r);
      std::copy(s.sensors.row(src).begin(), s.sensors.row(src).end(), w.row(r).begin());
    }
    const std::size_t anchor = length >= window ? length - window : 0;
    out.push_back(WindowSample{std::move(w), piecewise_label(true_rul[u], knee), s.unit_id, anchor,
                               true_rul[u]});
  }
  return out;
}

PreparedData prepare(const std::vector<RawSeries>& train, const std::vector<RawSeries>& test,
                     const std::vector<int>& test_rul, const PipelineOptions& options) {
  const auto train_sel = options.select_sensors ? select_variables(train) : train;
  const auto test_sel = options.select_sensors ? select_variables(test) : test;
  PreparedData out;
  out.stats = fit_minmax(train_sel);
  out.n_vars = out.stats.min.cols();
  out.train = build_training_windows(apply_minmax(train_sel, out.stats), options.window,
                                     options.stride, options.knee);
  out.test = build_test_set(apply_minmax(test_sel, out.stats), test_rul, options.window,
                            options.knee);
  return out;
}

CmapssFiles load_cmapss(const std::filesystem::path& dir, const std::string& name) {
  CmapssFiles f;
  f.train = parse_cmapss(dir / ("train_" + name + ".txt"));
  f.test = parse_cmapss(dir / ("test_" + name + ".txt"));
  f.test_rul = parse_rul_file(dir / ("RUL_" + name + ".txt"));
  return f;
}

bool cmapss_available(const std::filesystem::path& dir, const std::string& name) {
  namespace fs = std::filesystem;
  return fs::exists(dir / ("train_" + name + ".txt")) && fs::exists(dir / ("test_" + name + ".txt")) &&
         fs::exists(dir / ("RUL_" + name + ".txt"));
}

}  // namespace dualmixer::data
