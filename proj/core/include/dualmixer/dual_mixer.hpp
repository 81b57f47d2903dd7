#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualmixer/graph.hpp"
#include "dualmixer/ops.hpp"
#include "dualmixer/rng.hpp"

namespace dualmixer::model {

using numerics::Graph;
using numerics::ParamId;
using numerics::ParameterStore;
using numerics::Tensor;
using numerics::Var;

/// Architecture variants. `full` is the complete model; the rest are the
/// ablations: no cross gates (oCm), no cross and no output gates (oCO), no
/// output gates (oO), temporal path only (oT), spatial path only (oS).
enum class Variant { full, oCm, oCO, oO, oT, oS };

std::string_view to_string(Variant v);
/// Throws ConfigError on an unknown tag.
Variant parse_variant(std::string_view tag);
const std::vector<Variant>& all_variants();

struct ModelConfig {
  std::size_t window = 30;  ///< l: rows of an input window
  std::size_t n_vars = 14;  ///< m: input variables
  std::size_t d = 32;       ///< feature dimension
  std::size_t layers = 6;   ///< N: number of dual-path mixer layers
  Variant variant = Variant::full;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Two-layer MLP with a GeLU between, hidden width twice the output width.
struct MlpBlockParams {
  ParamId w1;  ///< in x 2*out
  ParamId w2;  ///< 2*out x out
};

/// Sigmoid gate with a square weight matrix.
struct GateParams {
  ParamId wg;
};

struct LayerNormParams {
  ParamId gain;
  ParamId bias;
};

/// One dual-path mixer layer. Absent members are removed by the variant.
struct DmlLayerParams {
  std::optional<MlpBlockParams> temporal_mlp;  ///< M1, d -> d
  std::optional<MlpBlockParams> spatial_mlp;   ///< M2, l -> l
  std::optional<GateParams> temporal_gate;     ///< G1, d x d
  std::optional<GateParams> spatial_gate;      ///< G2, l x l
  std::optional<LayerNormParams> temporal_norm;
  std::optional<LayerNormParams> spatial_norm;
  std::optional<LayerNormParams> temporal_mix_norm;
  std::optional<LayerNormParams> spatial_mix_norm;
};

/// Outputs of one layer: temporal (B*l) x d and spatial (B*d) x l.
/// Either may be absent in the single-path variants.
struct PathPair {
  std::optional<Var> temporal;
  std::optional<Var> spatial;
};

/// Forward outputs for a batch of B windows.
struct ForwardResult {
  Var features;  ///< merged feature, (B*l) x d
  Var flat;      ///< merged feature flattened per sample, B x (l*d)
  Var rul;       ///< B x 1, unclamped
};

Var mlp_block_forward(Graph& g, const MlpBlockParams& p, Var x);
Var gate_forward(Graph& g, const GateParams& p, Var x);
Var layer_norm_forward(Graph& g, const LayerNormParams& p, Var x);

/// One dual-path mixer layer over a batch of `batch` windows.
PathPair dml_forward(Graph& g, const DmlLayerParams& p, const PathPair& in, std::size_t batch);

/// The feature extractor plus linear regression head.
class DualMixer {
 public:
  /// Builds a model with seeded uniform(-a, a), a = sqrt(1/fan_in), weights.
  explicit DualMixer(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& parameters() noexcept { return params_; }
  const ParameterStore& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.scalar_count(); }

  const std::vector<DmlLayerParams>& layers() const noexcept { return layers_; }
  ParamId input_projection() const noexcept { return w_in_; }
  ParamId regression() const noexcept { return w_r_; }
  const std::optional<GateParams>& temporal_output_gate() const noexcept { return out_gate_t_; }
  const std::optional<GateParams>& spatial_output_gate() const noexcept { return out_gate_s_; }

  /// Forward for B stacked windows, x is (B*l) x m.
  ForwardResult forward(Graph& g, Var x, std::size_t batch) const;

  /// Feature extractor only: returns the merged (B*l) x d feature.
  Var extract(Graph& g, Var x, std::size_t batch) const;
  /// Regression head on a (B*l) x d merged feature; returns flat and rul.
  std::pair<Var, Var> regress(Graph& g, Var features, std::size_t batch) const;

  struct Prediction {
    Tensor features;  ///< l x d
    double rul = 0.0;
  };
  /// Untaped convenience forward for one l x m window.
  Prediction predict(const Tensor& window) const;
  /// Unclamped predictions for a list of windows, evaluated in chunks.
  std::vector<double> predict_batch(const std::vector<const Tensor*>& windows,
                                    std::size_t chunk = 256) const;

  /// Reassembles a model from a config and a store holding every parameter
  /// by name with matching shapes (as written by save_checkpoint).
  static DualMixer from_parameters(const ModelConfig& config, const ParameterStore& params);

 private:
  ParamId add_linear(Rng& rng, const std::string& name, std::size_t fan_in, std::size_t fan_out);
  MlpBlockParams add_mlp(Rng& rng, const std::string& name, std::size_t in, std::size_t out);
  GateParams add_gate(Rng& rng, const std::string& name, std::size_t dim);
  LayerNormParams add_norm(const std::string& name, std::size_t dim);

  ModelConfig config_;
  ParameterStore params_;
  ParamId w_in_;
  std::vector<DmlLayerParams> layers_;
  std::optional<GateParams> out_gate_t_;
  std::optional<GateParams> out_gate_s_;
  ParamId w_r_;
};

/// A model for `variant` built from the base configuration.
DualMixer make_variant(ModelConfig base, Variant variant);

/// Stacks windows (each l x m) into a (B*l) x m tensor.
Tensor stack_windows(const std::vector<const Tensor*>& windows);

}  // namespace dualmixer::model
