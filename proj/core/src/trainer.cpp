#include "dualmixer/trainer.hpp"

#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dualmixer/adam.hpp"
#include "dualmixer/checkpoint.hpp"
#include "dualmixer/dataset_cache.hpp"
#include "dualmixer/error.hpp"
#include "dualmixer/hash.hpp"
#include "dualmixer/log.hpp"
#include "dualmixer/synth.hpp"
#include "json.hpp"

#ifndef DUALMIXER_GIT_DESCRIBE
#define DUALMIXER_GIT_DESCRIBE "unknown"
#endif

namespace dualmixer::harness {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kEpochStream = 0x45504f4348ULL;
constexpr std::uint64_t kHoldoutStream = 0x484f4c44ULL;
constexpr const char* kMapeNote =
    "MAPE excludes samples whose true label is below 0.01; predictions clamped to [0,1]";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

numerics::Adam make_optimizer(const RunConfig& cfg) {
  numerics::AdamConfig ac;
  ac.lr = cfg.lr;
  return numerics::Adam(ac);
}

json epoch_json(const EpochRecord& e) {
  return json{{"epoch", e.epoch},
              {"loss", e.loss},
              {"contrastive", e.contrastive},
              {"regression", e.regression},
              {"seconds", e.seconds}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string git_describe() { return DUALMIXER_GIT_DESCRIBE; }

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) {
  return derive_seed(derive_seed(run_seed, kEpochStream), epoch);
}

TrainingTrace train_standard(model::DualMixer& model, const data::WindowDataset& train,
                             const RunConfig& cfg, const EpochCallback& on_epoch) {
  if (train.empty()) throw ContractError("standard training on an empty training set");
  if (cfg.batch == 0) throw ConfigError("batch must be >= 1");
  numerics::Adam opt = make_optimizer(cfg);
  TrainingTrace trace;
  trace.anchor_batch_size = cfg.batch;

  std::vector<std::size_t> order(train.size());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto t0 = Clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(epoch_seed(cfg.seed, e));
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch);
      std::vector<const numerics::Tensor*> windows;
      numerics::Tensor labels(end - begin, 1);
      for (std::size_t k = begin; k < end; ++k) {
        windows.push_back(&train.samples[order[k]].values);
        labels[k - begin] = train.samples[order[k]].label;
      }
      numerics::Graph g(&model.parameters());
      auto out = model.forward(g, g.constant(model::stack_windows(windows)), windows.size());
      auto err = numerics::sub(out.rul, g.constant(labels));
      auto loss = numerics::mean(numerics::hadamard(err, err));
      g.backward(loss);
      opt.step(model.parameters());
      loss_sum += loss.value().item();
      ++batches;
      trace.encodings += windows.size();
      trace.max_encodings_per_batch = std::max(trace.max_encodings_per_batch, windows.size());
    }
    EpochRecord rec{e + 1, loss_sum / static_cast<double>(batches), 0.0,
                    loss_sum / static_cast<double>(batches), seconds_since(t0)};
    trace.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return trace;
}

TrainingTrace train_fsgri(model::DualMixer& model, const data::WindowDataset& train,
                          const RunConfig& cfg, const EpochCallback& on_epoch) {
  const fsgri::FsgriConfig fc = cfg.fsgri_config();
  fc.validate();
  numerics::Adam opt = make_optimizer(cfg);
  TrainingTrace trace;
  trace.anchor_batch_size = fc.anchor_batch_size();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto t0 = Clock::now();
    fsgri::EpochStats s = fsgri::train_epoch_fsgri(model, train, fc, opt, epoch_seed(cfg.seed, e));
    trace.encodings += s.encodings;
    trace.max_encodings_per_batch = std::max(trace.max_encodings_per_batch, s.max_encodings_per_batch);
    EpochRecord rec{e + 1, s.mean_loss, s.mean_contrastive, s.mean_regression, seconds_since(t0)};
    trace.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return trace;
}

TrainingTrace train(model::DualMixer& model, const data::WindowDataset& train_set,
                    const RunConfig& cfg, const EpochCallback& on_epoch) {
  return cfg.mode == TrainingMode::fsgri ? train_fsgri(model, train_set, cfg, on_epoch)
                                         : train_standard(model, train_set, cfg, on_epoch);
}

namespace {

data::PreparedData prepare_fresh(const RunConfig& cfg) {
  data::PipelineOptions opts;
  opts.window = cfg.window;
  opts.stride = cfg.stride;
  if (cfg.is_synthetic()) {
    opts.select_sensors = false;
    auto split = synth::make_split(cfg.synth_spec(), cfg.synth_test_units);
    return data::prepare(split.train, split.test, split.test_rul, opts);
  }
  const std::filesystem::path dir(cfg.data_dir);
  if (!data::cmapss_available(dir, cfg.cmapss_name())) {
    throw IoError("C-MAPSS files for " + cfg.cmapss_name() + " not found in " + dir.string() +
                  " (expected train_/test_/RUL_" + cfg.cmapss_name() + ".txt)");
  }
  auto files = data::load_cmapss(dir, cfg.cmapss_name());
  return data::prepare(files.train, files.test, files.test_rul, opts);
}

void split_holdout(RunData& rd, std::uint64_t seed) {
  auto& ds = rd.data.train;
  if (ds.units.size() < 2) return;
  std::vector<std::size_t> order(ds.units.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kHoldoutStream));
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_hold = std::max<std::size_t>(1, ds.units.size() / 10);
  std::vector<bool> held(ds.units.size(), false);
  for (std::size_t k = 0; k < n_hold; ++k) held[order[k]] = true;

  data::WindowDataset kept;
  for (std::size_t u = 0; u < ds.units.size(); ++u) {
    const auto& span = ds.units[u];
    if (held[u]) {
      for (std::size_t i = 0; i < span.count; ++i) rd.validation.push_back(ds.samples[span.begin + i]);
      continue;
    }
    kept.units.push_back(data::UnitSpan{span.unit_id, kept.samples.size(), span.count});
    for (std::size_t i = 0; i < span.count; ++i) kept.samples.push_back(ds.samples[span.begin + i]);
  }
  ds = std::move(kept);
}

}  // namespace

RunData load_run_data(const RunConfig& cfg) {
  cfg.validate();
  RunData rd;
  const std::uint64_t h = cfg.data_hash();
  const std::filesystem::path cache = std::filesystem::path(cfg.out_dir) / "dataset.cache";
  std::optional<data::PreparedData> cached;
  if (cfg.cache) {
    try {
      cached = data::load_dataset_cache(cache, h);
    } catch (const Error& e) {
      log::warning(std::string("ignoring unreadable dataset cache: ") + e.what());
    }
  }
  if (cached) {
    rd.data = std::move(*cached);
  } else {
    rd.data = prepare_fresh(cfg);
    if (cfg.cache) {
      std::filesystem::create_directories(cfg.out_dir);
      data::save_dataset_cache(cache, rd.data, h);
    }
  }
  if (cfg.holdout) split_holdout(rd, cfg.seed);
  return rd;
}

RunOutcome run_training(const RunConfig& cfg, const RunData& rd, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto t0 = Clock::now();
  model::DualMixer model(cfg.model_config(rd.data.n_vars));
  TrainingTrace trace = train(model, rd.data.train, cfg, on_epoch);

  RunReport r;
  r.dataset = cfg.dataset;
  r.mode = to_string(cfg.mode);
  r.variant = std::string(model::to_string(cfg.variant));
  r.config_hash = cfg.hash();
  r.seed = cfg.seed;
  r.git_describe = git_describe();
  r.parameter_count = model.parameter_count();
  r.anchor_batch_size = trace.anchor_batch_size;
  r.epochs = trace.epochs;
  EvalResult ev = evaluate(model, rd.data.test);
  r.rmse = ev.rmse;
  r.mape = ev.mape;
  r.test_samples = ev.samples;
  r.mape_samples = ev.mape_samples;
  if (!rd.validation.empty()) r.validation_rmse = evaluate(model, rd.validation).rmse;
  r.wall_clock_seconds = seconds_since(t0);
  return RunOutcome{std::move(r), std::move(model)};
}

std::string metrics_csv(const std::vector<EpochRecord>& epochs) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,loss,contrastive,regression,seconds\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.loss << ',' << e.contrastive << ',' << e.regression << ','
       << e.seconds << '\n';
  }
  return os.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failure on " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_run_outputs(const RunConfig& cfg, const RunOutcome& outcome) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "config.json", cfg.to_json() + "\n");
  write_text_atomic(dir / "metrics.csv", metrics_csv(outcome.report.epochs));
  const auto ckpt_tmp = dir / "model.ckpt.tmp";
  model::save_checkpoint(outcome.model, ckpt_tmp);
  std::filesystem::rename(ckpt_tmp, dir / "model.ckpt");
  // Report last: its presence marks a completed run.
  write_text_atomic(dir / "report.json", outcome.report.to_json() + "\n");
}

std::string RunReport::to_json() const {
  json epochs_json = json::array();
  for (const auto& e : epochs) epochs_json.push_back(epoch_json(e));
  json j{{"dataset", dataset},
         {"mode", mode},
         {"variant", variant},
         {"config_hash", hex64(config_hash)},
         {"seed", seed},
         {"git_describe", git_describe},
         {"parameter_count", parameter_count},
         {"anchor_batch_size", anchor_batch_size},
         {"epochs", epochs_json},
         {"rmse", rmse},
         {"mape", optional_number(mape)},
         {"mape_floor", kMapeFloor},
         {"mape_note", kMapeNote},
         {"test_samples", test_samples},
         {"mape_samples", mape_samples},
         {"validation_rmse", optional_number(validation_rmse)},
         {"wall_clock_seconds", wall_clock_seconds}};
  return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  RunReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.git_describe = j.at("git_describe").get<std::string>();
    r.parameter_count = j.at("parameter_count").get<std::size_t>();
    r.anchor_batch_size = j.at("anchor_batch_size").get<std::size_t>();
    for (const auto& e : j.at("epochs")) {
      r.epochs.push_back(EpochRecord{e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(),
                                     e.at("contrastive").get<double>(),
                                     e.at("regression").get<double>(), e.at("seconds").get<double>()});
    }
    r.rmse = j.at("rmse").get<double>();
    if (!j.at("mape").is_null()) r.mape = j.at("mape").get<double>();
    r.test_samples = j.at("test_samples").get<std::size_t>();
    r.mape_samples = j.at("mape_samples").get<std::size_t>();
    if (!j.at("validation_rmse").is_null()) r.validation_rmse = j.at("validation_rmse").get<double>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::optional<RunReport> RunReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace dualmixer::harness
