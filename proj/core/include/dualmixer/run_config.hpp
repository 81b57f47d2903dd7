#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "dualmixer/dual_mixer.hpp"
#include "dualmixer/fsgri.hpp"
#include "dualmixer/synth.hpp"

namespace dualmixer::harness {

enum class TrainingMode { standard, fsgri };

std::string to_string(TrainingMode mode);
TrainingMode parse_mode(const std::string& text);

/// Every knob of one run. Defaults reproduce the reference configuration.
struct RunConfig {
  std::string dataset = "fd001";  ///< fd001..fd004 or synth
  std::string data_dir = "data";
  TrainingMode mode = TrainingMode::standard;
  model::Variant variant = model::Variant::full;
  std::uint64_t seed = 1;

  std::size_t batch = 128;
  double lr = 1e-2;
  std::size_t window = 30;
  std::size_t stride = 1;
  std::size_t epochs = 100;
  std::size_t layers = 6;
  std::size_t d = 32;
  std::size_t m = 5;
  double beta = 0.4;
  double sigma1 = 0.3;
  double sigma2 = 0.15;
  double lambda = 2.0;
  double tau = 0.1;

  std::string out_dir = "runs/default";
  bool holdout = false;  ///< hold out 10% of training units for validation
  bool cache = true;     ///< reuse the binary dataset cache in out_dir

  std::size_t synth_units = 20;
  std::size_t synth_test_units = 20;
  std::size_t synth_vars = 6;
  double synth_noise = 0.05;

  void validate() const;

  bool is_synthetic() const { return dataset == "synth"; }
  /// Upper-case sub-dataset name used in file names, e.g. "FD001".
  std::string cmapss_name() const;

  model::ModelConfig model_config(std::size_t n_vars) const;
  fsgri::FsgriConfig fsgri_config() const;
  synth::SynthSpec synth_spec() const;

  /// Hash over every field except out_dir and data_dir.
  std::uint64_t hash() const;
  /// Hash over the fields that determine the prepared dataset.
  std::uint64_t data_hash() const;

  std::string to_json(int indent = 2) const;
  /// Applies the keys present in `json` on top of `base`; unknown keys throw.
  static RunConfig from_json(const std::string& json, RunConfig base);
  static RunConfig from_json(const std::string& json);
  static RunConfig load(const std::filesystem::path& path, RunConfig base);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace dualmixer::harness
