#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dualmixer/dual_mixer.hpp"
#include "dualmixer/metrics.hpp"
#include "dualmixer/pipeline.hpp"
#include "dualmixer/run_config.hpp"

namespace dualmixer::harness {

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double contrastive = 0.0;  ///< mean DW-InfoNCE, zero in standard mode
  double regression = 0.0;   ///< mean MSE (standard) or MSE_all (fsgri)
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  std::size_t anchor_batch_size = 0;  ///< samples per optimizer step (anchors in fsgri mode)
  std::size_t encodings = 0;          ///< total windows encoded
  std::size_t max_encodings_per_batch = 0;
};

/// MSE training on seeded shuffled batches of size b with Adam.
TrainingTrace train_standard(model::DualMixer& model, const data::WindowDataset& train,
                             const RunConfig& cfg, const EpochCallback& on_epoch = {});
/// Batch FSGRI training, one train_epoch_fsgri per epoch.
TrainingTrace train_fsgri(model::DualMixer& model, const data::WindowDataset& train,
                          const RunConfig& cfg, const EpochCallback& on_epoch = {});
/// Dispatches on cfg.mode.
TrainingTrace train(model::DualMixer& model, const data::WindowDataset& train,
                    const RunConfig& cfg, const EpochCallback& on_epoch = {});

/// Seed for epoch `epoch` of a run.
std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch);

struct RunData {
  data::PreparedData data;
  std::vector<data::WindowSample> validation;  ///< held-out unit windows, if enabled
};

/// Loads C-MAPSS files or generates synthetic data, then runs the pipeline.
/// Uses out_dir/dataset.cache when cfg.cache is set.
RunData load_run_data(const RunConfig& cfg);

struct RunReport {
  std::string dataset;
  std::string mode;
  std::string variant;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string git_describe;
  std::size_t parameter_count = 0;
  std::size_t anchor_batch_size = 0;
  std::vector<EpochRecord> epochs;
  double rmse = 0.0;
  std::optional<double> mape;
  std::size_t test_samples = 0;
  std::size_t mape_samples = 0;
  std::optional<double> validation_rmse;
  double wall_clock_seconds = 0.0;

  std::string to_json() const;
  static RunReport from_json(const std::string& text);
  static std::optional<RunReport> load(const std::filesystem::path& path);
};

struct RunOutcome {
  RunReport report;
  model::DualMixer model;
};

/// Builds the model, trains, evaluates on the test split. Does not write files.
RunOutcome run_training(const RunConfig& cfg, const RunData& data,
                        const EpochCallback& on_epoch = {});

/// Writes report.json, metrics.csv, config.json and model.ckpt into cfg.out_dir.
void write_run_outputs(const RunConfig& cfg, const RunOutcome& outcome);

/// metrics.csv body: epoch,loss,contrastive,regression,seconds
std::string metrics_csv(const std::vector<EpochRecord>& epochs);

/// Writes via a temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string git_describe();

}  // namespace dualmixer::harness
