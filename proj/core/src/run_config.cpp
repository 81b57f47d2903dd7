#include "dualmixer/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dualmixer/error.hpp"
#include "dualmixer/hash.hpp"
#include "json.hpp"

namespace dualmixer::harness {

using nlohmann::json;

std::string to_string(TrainingMode mode) {
  return mode == TrainingMode::fsgri ? "fsgri" : "standard";
}

TrainingMode parse_mode(const std::string& text) {
  if (text == "standard") return TrainingMode::standard;
  if (text == "fsgri") return TrainingMode::fsgri;
  throw ConfigError("unknown training mode '" + text + "' (expected standard or fsgri)");
}

namespace {

json to_object(const RunConfig& c) {
  return json{{"dataset", c.dataset},
              {"data_dir", c.data_dir},
              {"mode", to_string(c.mode)},
              {"variant", std::string(model::to_string(c.variant))},
              {"seed", c.seed},
              {"batch", c.batch},
              {"lr", c.lr},
              {"window", c.window},
              {"stride", c.stride},
              {"epochs", c.epochs},
              {"layers", c.layers},
              {"d", c.d},
              {"m", c.m},
              {"beta", c.beta},
              {"sigma1", c.sigma1},
              {"sigma2", c.sigma2},
              {"lambda", c.lambda},
              {"tau", c.tau},
              {"out_dir", c.out_dir},
              {"holdout", c.holdout},
              {"cache", c.cache},
              {"synth_units", c.synth_units},
              {"synth_test_units", c.synth_test_units},
              {"synth_vars", c.synth_vars},
              {"synth_noise", c.synth_noise}};
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  static const std::set<std::string> datasets = {"fd001", "fd002", "fd003", "fd004", "synth"};
  if (!datasets.count(dataset)) {
    throw ConfigError("unknown dataset '" + dataset + "' (expected fd001..fd004 or synth)");
  }
  if (batch == 0) throw ConfigError("batch must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (window == 0) throw ConfigError("window must be >= 1");
  if (stride == 0) throw ConfigError("stride must be >= 1");
  model_config(1).validate();
  auto f = fsgri_config();
  // The anchor-batch constraint only binds when FSGRI actually runs.
  if (mode == TrainingMode::standard) f.batch = std::max(f.batch, f.negatives + 1);
  f.validate();
  if (is_synthetic()) synth_spec().validate();
}

std::string RunConfig::cmapss_name() const {
  std::string s = dataset;
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

model::ModelConfig RunConfig::model_config(std::size_t n_vars) const {
  model::ModelConfig mc;
  mc.window = window;
  mc.n_vars = n_vars;
  mc.d = d;
  mc.layers = layers;
  mc.variant = variant;
  mc.seed = seed;
  return mc;
}

fsgri::FsgriConfig RunConfig::fsgri_config() const {
  fsgri::FsgriConfig f;
  f.negatives = m;
  f.beta = beta;
  f.sigma1 = sigma1;
  f.sigma2 = sigma2;
  f.lambda = lambda;
  f.tau = tau;
  f.batch = batch;
  return f;
}

synth::SynthSpec RunConfig::synth_spec() const {
  synth::SynthSpec s;
  s.n_units = synth_units;
  s.n_vars = synth_vars;
  s.noise_std = synth_noise;
  s.seed = seed;
  s.window = window;
  s.min_cycles = std::max<std::size_t>(s.min_cycles, 2 * window);
  s.max_cycles = std::max(s.max_cycles, s.min_cycles);
  return s;
}

std::uint64_t RunConfig::hash() const {
  json j = to_object(*this);
  j.erase("out_dir");
  j.erase("data_dir");
  return fnv1a64(j.dump());
}

std::uint64_t RunConfig::data_hash() const {
  json j{{"dataset", dataset}, {"window", window}, {"stride", stride}, {"holdout", holdout}};
  if (is_synthetic()) {
    j["seed"] = seed;
    j["synth_units"] = synth_units;
    j["synth_test_units"] = synth_test_units;
    j["synth_vars"] = synth_vars;
    j["synth_noise"] = synth_noise;
  }
  if (holdout) j["seed"] = seed;
  return fnv1a64(j.dump());
}

std::string RunConfig::to_json(int indent) const { return to_object(*this).dump(indent); }

RunConfig RunConfig::from_json(const std::string& text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const json known = to_object(RunConfig{});
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  take(j, "dataset", c.dataset);
  take(j, "data_dir", c.data_dir);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("variant")) c.variant = model::parse_variant(j.at("variant").get<std::string>());
  take(j, "seed", c.seed);
  take(j, "batch", c.batch);
  take(j, "lr", c.lr);
  take(j, "window", c.window);
  take(j, "stride", c.stride);
  take(j, "epochs", c.epochs);
  take(j, "layers", c.layers);
  take(j, "d", c.d);
  take(j, "m", c.m);
  take(j, "beta", c.beta);
  take(j, "sigma1", c.sigma1);
  take(j, "sigma2", c.sigma2);
  take(j, "lambda", c.lambda);
  take(j, "tau", c.tau);
  take(j, "out_dir", c.out_dir);
  take(j, "holdout", c.holdout);
  take(j, "cache", c.cache);
  take(j, "synth_units", c.synth_units);
  take(j, "synth_test_units", c.synth_test_units);
  take(j, "synth_vars", c.synth_vars);
  take(j, "synth_noise", c.synth_noise);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), std::move(base));
}

RunConfig RunConfig::from_json(const std::string& text) { return from_json(text, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path) { return load(path, RunConfig{}); }

}  // namespace dualmixer::harness
