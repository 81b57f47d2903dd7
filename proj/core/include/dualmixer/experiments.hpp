#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualmixer/trainer.hpp"

namespace dualmixer::harness {

struct AblationRow {
  model::Variant variant = model::Variant::full;
  std::size_t parameter_count = 0;
  double rmse = 0.0;
  std::optional<double> mape;
};

/// Trains all six variants with the same config and seed. Each variant
/// writes its outputs to out_dir/<variant>; the table goes to
/// out_dir/ablation.csv.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, const RunData& data,
                                      bool write_outputs = true);

/// ablation.csv body: variant,parameter_count,rmse,mape
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct GridCell {
  std::size_t layers = 0;
  std::size_t d = 0;
  double rmse = 0.0;
  std::optional<double> mape;
  std::uint64_t config_hash = 0;
  bool reference_default = false;  ///< the N=6, d=32 cell
  bool resumed = false;            ///< loaded from an existing report
};

/// One run per (layers, d) pair in row-major order. Cells whose
/// out_dir/N<layers>_d<d>/report.json carries the same config hash are
/// reused instead of retrained. Writes out_dir/grid.csv.
std::vector<GridCell> grid_search(const RunConfig& cfg, const RunData& data,
                                  const std::vector<std::size_t>& layers_list,
                                  const std::vector<std::size_t>& d_list);

/// grid.csv body: layers,d,rmse,mape,reference_default,config_hash
std::string grid_csv(const std::vector<GridCell>& cells);

/// Writes features.csv: unit_id,anchor_index,true_rul,predicted_rul,f0..f{l*d-1}.
/// true_rul and predicted_rul are normalised labels. An empty sample list
/// gives a header-only file.
void export_features(const model::DualMixer& model, const std::vector<data::WindowSample>& samples,
                     const std::filesystem::path& out_path);

}  // namespace dualmixer::harness
