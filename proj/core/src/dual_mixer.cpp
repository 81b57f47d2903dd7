#include "dualmixer/dual_mixer.hpp"

#include <cmath>

#include "dualmixer/error.hpp"
#include "dualmixer/rng.hpp"

namespace dualmixer::model {

namespace {

bool has_temporal(Variant v) { return v != Variant::oS; }
bool has_spatial(Variant v) { return v != Variant::oT; }
bool has_cross_gates(Variant v) { return v == Variant::full || v == Variant::oO; }
bool has_output_gates(Variant v) {
  return v == Variant::full || v == Variant::oCm || v == Variant::oT || v == Variant::oS;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::oCm: return "oCm";
    case Variant::oCO: return "oCO";
    case Variant::oO: return "oO";
    case Variant::oT: return "oT";
    case Variant::oS: return "oS";
  }
  return "unknown";
}

Variant parse_variant(std::string_view tag) {
  for (Variant v : all_variants()) {
    if (to_string(v) == tag) return v;
  }
  throw ConfigError("unknown model variant '" + std::string(tag) +
                    "' (expected full, oCm, oCO, oO, oT or oS)");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = {Variant::full, Variant::oCm, Variant::oCO,
                                                Variant::oO,   Variant::oT,  Variant::oS};
  return variants;
}

void ModelConfig::validate() const {
  if (window == 0) throw ConfigError("window length must be >= 1");
  if (n_vars == 0) throw ConfigError("number of input variables must be >= 1");
  if (d == 0) throw ConfigError("feature dimension d must be >= 1");
  if (layers == 0) throw ConfigError("number of DML layers must be >= 1");
}

Var mlp_block_forward(Graph& g, const MlpBlockParams& p, Var x) {
  return numerics::matmul(numerics::gelu(numerics::matmul(x, g.param(p.w1))), g.param(p.w2));
}

Var gate_forward(Graph& g, const GateParams& p, Var x) {
  return numerics::hadamard(numerics::sigmoid(numerics::matmul(x, g.param(p.wg))), x);
}

Var layer_norm_forward(Graph& g, const LayerNormParams& p, Var x) {
  return numerics::layer_norm(x, g.param(p.gain), g.param(p.bias));
}

PathPair dml_forward(Graph& g, const DmlLayerParams& p, const PathPair& in, std::size_t batch) {
  using numerics::add;
  using numerics::block_transpose;
  if (p.temporal_mlp.has_value() != in.temporal.has_value() ||
      p.spatial_mlp.has_value() != in.spatial.has_value()) {
    throw DimensionError("dml_forward: path inputs do not match the layer's paths");
  }
  if (in.temporal && in.spatial) {
    const Var& t = *in.temporal;
    const Var& s = *in.spatial;
    if (t.rows() % batch != 0 || s.rows() != batch * t.cols() || s.cols() != t.rows() / batch) {
      throw DimensionError("dml_forward: temporal " + t.value().shape_string() +
                           " and spatial " + s.value().shape_string() +
                           " are not transposes per window");
    }
  }

  std::optional<Var> zt;
  std::optional<Var> zs;
  if (p.temporal_mlp) {
    zt = layer_norm_forward(g, *p.temporal_norm,
                            add(mlp_block_forward(g, *p.temporal_mlp, *in.temporal), *in.temporal));
  }
  if (p.spatial_mlp) {
    zs = layer_norm_forward(g, *p.spatial_norm,
                            add(mlp_block_forward(g, *p.spatial_mlp, *in.spatial), *in.spatial));
  }
  if (!(p.temporal_gate && p.spatial_gate)) return PathPair{zt, zs};

  // Gated features cross to the opposite path only.
  Var to_temporal = block_transpose(gate_forward(g, *p.spatial_gate, *zs), batch);
  Var to_spatial = block_transpose(gate_forward(g, *p.temporal_gate, *zt), batch);
  return PathPair{layer_norm_forward(g, *p.temporal_mix_norm, add(to_temporal, *zt)),
                  layer_norm_forward(g, *p.spatial_mix_norm, add(to_spatial, *zs))};
}

DualMixer::DualMixer(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, 0x6d6f64656cULL));
  const std::size_t l = config_.window;
  const std::size_t d = config_.d;
  const Variant v = config_.variant;

  w_in_ = add_linear(rng, "input.w", config_.n_vars, d);
  for (std::size_t k = 0; k < config_.layers; ++k) {
    const std::string prefix = "layer" + std::to_string(k) + ".";
    DmlLayerParams layer;
    if (has_temporal(v)) {
      layer.temporal_mlp = add_mlp(rng, prefix + "temporal_mlp", d, d);
      layer.temporal_norm = add_norm(prefix + "temporal_norm", d);
    }
    if (has_spatial(v)) {
      layer.spatial_mlp = add_mlp(rng, prefix + "spatial_mlp", l, l);
      layer.spatial_norm = add_norm(prefix + "spatial_norm", l);
    }
    if (has_cross_gates(v)) {
      layer.temporal_gate = add_gate(rng, prefix + "temporal_gate", d);
      layer.spatial_gate = add_gate(rng, prefix + "spatial_gate", l);
      layer.temporal_mix_norm = add_norm(prefix + "temporal_mix_norm", d);
      layer.spatial_mix_norm = add_norm(prefix + "spatial_mix_norm", l);
    }
    layers_.push_back(layer);
  }
  if (has_output_gates(v)) {
    if (has_temporal(v)) out_gate_t_ = add_gate(rng, "output.temporal_gate", d);
    if (has_spatial(v)) out_gate_s_ = add_gate(rng, "output.spatial_gate", d);
  }
  w_r_ = add_linear(rng, "regression.w", l * d, 1);
}

ParamId DualMixer::add_linear(Rng& rng, const std::string& name, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor w(fan_in, fan_out);
  for (double& x : w.values()) x = rng.uniform(-a, a);
  return params_.add(name, std::move(w));
}

MlpBlockParams DualMixer::add_mlp(Rng& rng, const std::string& name, std::size_t in, std::size_t out) {
  MlpBlockParams p;
  p.w1 = add_linear(rng, name + ".w1", in, 2 * out);
  p.w2 = add_linear(rng, name + ".w2", 2 * out, out);
  return p;
}

GateParams DualMixer::add_gate(Rng& rng, const std::string& name, std::size_t dim) {
  return GateParams{add_linear(rng, name + ".wg", dim, dim)};
}

LayerNormParams DualMixer::add_norm(const std::string& name, std::size_t dim) {
  LayerNormParams p;
  p.gain = params_.add(name + ".gain", Tensor::ones(1, dim));
  p.bias = params_.add(name + ".bias", Tensor::zeros(1, dim));
  return p;
}

DualMixer DualMixer::from_parameters(const ModelConfig& config, const ParameterStore& params) {
  DualMixer model(config);
  if (params.size() != model.params_.size()) {
    throw ContractError("parameter set has " + std::to_string(params.size()) +
                        " tensors, model variant expects " +
                        std::to_string(model.params_.size()));
  }
  for (auto& p : model.params_.all()) {
    auto id = params.find(p.name);
    if (!id) throw ContractError("missing parameter '" + p.name + "'");
    const Tensor& src = params[*id].value;
    if (!src.same_shape(p.value)) {
      throw DimensionError("parameter '" + p.name + "' has shape " + src.shape_string() +
                           ", expected " + p.value.shape_string());
    }
    p.value = src;
    p.grad.fill(0.0);
  }
  return model;
}

Var DualMixer::extract(Graph& g, Var x, std::size_t batch) const {
  const std::size_t l = config_.window;
  if (batch == 0 || x.rows() != batch * l || x.cols() != config_.n_vars) {
    throw DimensionError("model input " + x.value().shape_string() + " does not match " +
                         std::to_string(batch) + " windows of " + std::to_string(l) + "x" +
                         std::to_string(config_.n_vars));
  }
  const Variant v = config_.variant;
  Var projected = numerics::matmul(x, g.param(w_in_));

  PathPair state;
  if (has_temporal(v)) state.temporal = projected;
  if (has_spatial(v)) state.spatial = numerics::block_transpose(projected, batch);
  for (const auto& layer : layers_) state = dml_forward(g, layer, state, batch);

  std::optional<Var> merged;
  if (state.temporal) {
    merged = out_gate_t_ ? gate_forward(g, *out_gate_t_, *state.temporal) : *state.temporal;
  }
  if (state.spatial) {
    Var s = numerics::block_transpose(*state.spatial, batch);
    if (out_gate_s_) s = gate_forward(g, *out_gate_s_, s);
    merged = merged ? numerics::add(*merged, s) : s;
  }
  return *merged;
}

std::pair<Var, Var> DualMixer::regress(Graph& g, Var features, std::size_t batch) const {
  const std::size_t width = config_.window * config_.d;
  Var flat = numerics::reshape(features, batch, width);
  return {flat, numerics::matmul(flat, g.param(w_r_))};
}

ForwardResult DualMixer::forward(Graph& g, Var x, std::size_t batch) const {
  Var features = extract(g, x, batch);
  auto [flat, rul] = regress(g, features, batch);
  return ForwardResult{features, flat, rul};
}

DualMixer::Prediction DualMixer::predict(const Tensor& window) const {
  Graph g(params_);
  ForwardResult out = forward(g, g.constant(window), 1);
  return Prediction{out.features.value(), out.rul.value().item()};
}

std::vector<double> DualMixer::predict_batch(const std::vector<const Tensor*>& windows,
                                             std::size_t chunk) const {
  std::vector<double> out;
  out.reserve(windows.size());
  if (chunk == 0) chunk = 1;
  for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
    const std::size_t end = std::min(windows.size(), begin + chunk);
    std::vector<const Tensor*> part(windows.begin() + static_cast<std::ptrdiff_t>(begin),
                                    windows.begin() + static_cast<std::ptrdiff_t>(end));
    Graph g(params_);
    ForwardResult r = forward(g, g.constant(stack_windows(part)), part.size());
    for (double v : r.rul.value().values()) out.push_back(v);
  }
  return out;
}

DualMixer make_variant(ModelConfig base, Variant variant) {
  base.variant = variant;
  return DualMixer(base);
}

Tensor stack_windows(const std::vector<const Tensor*>& windows) {
  if (windows.empty()) throw DimensionError("stack_windows: no windows");
  const std::size_t rows = windows.front()->rows();
  const std::size_t cols = windows.front()->cols();
  std::vector<double> data;
  data.reserve(windows.size() * rows * cols);
  for (const Tensor* w : windows) {
    if (w->rows() != rows || w->cols() != cols) {
      throw DimensionError("stack_windows: window " + w->shape_string() + " differs from " +
                           windows.front()->shape_string());
    }
    data.insert(data.end(), w->values().begin(), w->values().end());
  }
  return Tensor(windows.size() * rows, cols, std::move(data));
}

}  // namespace dualmixer::model
