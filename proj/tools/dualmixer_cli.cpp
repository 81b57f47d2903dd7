// dualmixer: train, evaluate, ablate, grid-search and export Dual-Mixer RUL models.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualmixer/checkpoint.hpp"
#include "dualmixer/error.hpp"
#include "dualmixer/experiments.hpp"
#include "dualmixer/log.hpp"
#include "dualmixer/runtime.hpp"
#include "dualmixer/synth.hpp"
#include "dualmixer/trainer.hpp"

namespace fs = std::filesystem;
using namespace dualmixer;
using harness::RunConfig;

namespace {

// Flags shared by every run-style subcommand. Values land in `cli`; only the
// flags actually given are copied over the config file.
struct SharedFlags {
  RunConfig cli;
  std::string config_path;
  std::string mode_text;
  std::string variant_text;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  template <typename T>
  void add(CLI::App* app, const std::string& name, T RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_option(name, cli.*field, help);
    overrides.emplace_back(opt, [this, field](RunConfig& c) { c.*field = cli.*field; });
  }

  void attach(CLI::App* app) {
    auto* ds = app->add_option("--dataset", cli.dataset, "fd001..fd004 or synth")
                   ->check(CLI::IsMember({"fd001", "fd002", "fd003", "fd004", "synth"},
                                         CLI::ignore_case));
    overrides.emplace_back(ds, [this](RunConfig& c) { c.dataset = cli.dataset; });
    add(app, "--data-dir", &RunConfig::data_dir, "directory holding the C-MAPSS text files");
    auto* mode = app->add_option("--mode", mode_text, "standard or fsgri")
                     ->check(CLI::IsMember({"standard", "fsgri"}));
    overrides.emplace_back(mode, [this](RunConfig& c) { c.mode = harness::parse_mode(mode_text); });
    auto* var = app->add_option("--variant", variant_text, "full, oCm, oCO, oO, oT or oS")
                    ->check(CLI::IsMember({"full", "oCm", "oCO", "oO", "oT", "oS"}));
    overrides.emplace_back(var,
                           [this](RunConfig& c) { c.variant = model::parse_variant(variant_text); });
    add(app, "--seed", &RunConfig::seed, "random seed");
    app->add_option("--config", config_path, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
    add(app, "--out", &RunConfig::out_dir, "output directory");

    add(app, "--d", &RunConfig::d, "feature dimension");
    add(app, "--layers", &RunConfig::layers, "number of dual-path mixer layers");
    add(app, "--tau", &RunConfig::tau, "contrastive temperature");
    add(app, "--beta", &RunConfig::beta, "excluded band width as a fraction of the unit length");
    add(app, "--sigma1", &RunConfig::sigma1, "negative sampling width (fraction of length)");
    add(app, "--sigma2", &RunConfig::sigma2, "positive augmentation noise std");
    add(app, "--lambda", &RunConfig::lambda, "distance weight scale");
    add(app, "--m", &RunConfig::m, "negatives per anchor");
    add(app, "--batch", &RunConfig::batch, "batch size");
    add(app, "--lr", &RunConfig::lr, "Adam learning rate");
    add(app, "--epochs", &RunConfig::epochs, "training epochs");
    add(app, "--window", &RunConfig::window, "window length");
    add(app, "--stride", &RunConfig::stride, "window stride");
    auto* ho = app->add_flag("--holdout", cli.holdout, "hold out 10% of training units for validation");
    overrides.emplace_back(ho, [this](RunConfig& c) { c.holdout = cli.holdout; });
    auto* nc = app->add_flag("--no-cache", "do not read or write the dataset cache");
    overrides.emplace_back(nc, [](RunConfig& c) { c.cache = false; });
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(c);
    }
    c.validate();
    return c;
  }
};

void print_epoch(const harness::EpochRecord& e) {
  if (log::level() != log::Level::info) return;
  std::fprintf(stderr, "epoch %4zu  loss %.6f  contrastive %.6f  regression %.6f  (%.1fs)\n",
               e.epoch, e.loss, e.contrastive, e.regression, e.seconds);
}

void print_report(const harness::RunReport& r) {
  std::printf("%s %s %s seed=%llu  rmse=%.6f  mape=%s  params=%zu\n", r.dataset.c_str(),
              r.mode.c_str(), r.variant.c_str(), static_cast<unsigned long long>(r.seed), r.rmse,
              r.mape ? std::to_string(*r.mape).c_str() : "undefined", r.parameter_count);
}

model::DualMixer load_model(const RunConfig& cfg, const std::string& checkpoint) {
  const fs::path path = checkpoint.empty() ? fs::path(cfg.out_dir) / "model.ckpt" : fs::path(checkpoint);
  return model::load_checkpoint(path);
}

std::vector<std::size_t> parse_list(const std::vector<std::size_t>& given,
                                    std::vector<std::size_t> fallback) {
  return given.empty() ? fallback : given;
}

int run_train(const RunConfig& cfg) {
  auto data = harness::load_run_data(cfg);
  std::fprintf(stderr, "%zu training windows, %zu test samples, %zu variables\n",
               data.data.train.size(), data.data.test.size(), data.data.n_vars);
  auto outcome = harness::run_training(cfg, data, print_epoch);
  harness::write_run_outputs(cfg, outcome);
  print_report(outcome.report);
  return 0;
}

int run_eval(const RunConfig& cfg, const std::string& checkpoint) {
  auto data = harness::load_run_data(cfg);
  auto m = load_model(cfg, checkpoint);
  auto ev = harness::evaluate(m, data.data.test);
  std::printf("rmse=%.6f  mape=%s  samples=%zu  mape_samples=%zu\n", ev.rmse,
              ev.mape ? std::to_string(*ev.mape).c_str() : "undefined", ev.samples,
              ev.mape_samples);
  return 0;
}

int run_ablate(const RunConfig& cfg) {
  auto data = harness::load_run_data(cfg);
  auto rows = harness::run_ablation(cfg, data);
  std::cout << harness::ablation_csv(rows);
  return 0;
}

int run_grid(const RunConfig& cfg, const std::vector<std::size_t>& layers,
             const std::vector<std::size_t>& dims) {
  auto data = harness::load_run_data(cfg);
  auto cells = harness::grid_search(cfg, data, parse_list(layers, {2, 4, 6, 8, 10, 12}),
                                    parse_list(dims, {16, 32, 64, 128}));
  std::cout << harness::grid_csv(cells);
  return 0;
}

int run_export(const RunConfig& cfg, const std::string& checkpoint, const std::string& split,
               const std::string& features_path) {
  auto data = harness::load_run_data(cfg);
  auto m = load_model(cfg, checkpoint);
  const auto& samples = split == "train" ? data.data.train.samples : data.data.test;
  const fs::path out = features_path.empty() ? fs::path(cfg.out_dir) / "features.csv"
                                             : fs::path(features_path);
  harness::export_features(m, samples, out);
  std::fprintf(stderr, "wrote %zu rows to %s\n", samples.size(), out.string().c_str());
  return 0;
}

int run_synth(const RunConfig& cfg, std::size_t units, std::size_t test_units, std::size_t vars,
              double noise) {
  synth::SynthSpec spec = cfg.synth_spec();
  spec.n_units = units;
  spec.n_vars = vars;
  spec.noise_std = noise;
  spec.validate();
  auto split = synth::make_split(spec, test_units);
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  auto write = [&](const fs::path& p, const auto& fn) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    fn(out);
  };
  write(dir / "train_SYN.txt",
        [&](std::ostream& o) { data::write_cmapss(o, synth::to_cmapss_layout(split.train)); });
  write(dir / "test_SYN.txt",
        [&](std::ostream& o) { data::write_cmapss(o, synth::to_cmapss_layout(split.test)); });
  write(dir / "RUL_SYN.txt", [&](std::ostream& o) { data::write_rul_file(o, split.test_rul); });
  std::fprintf(stderr, "wrote train_SYN.txt, test_SYN.txt, RUL_SYN.txt to %s\n",
               dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-Mixer remaining-useful-life toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only print warnings and results");

  SharedFlags train_flags, eval_flags, ablate_flags, grid_flags, export_flags, synth_flags;

  auto* train = app.add_subcommand("train", "train one model and write report.json, metrics.csv");
  train_flags.attach(train);

  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint on the test split");
  eval_flags.attach(eval);
  std::string eval_ckpt;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path (default: <out>/model.ckpt)");

  auto* ablate = app.add_subcommand("ablate", "train all six variants and write ablation.csv");
  ablate_flags.attach(ablate);

  auto* grid = app.add_subcommand("grid", "layers x d grid search, writes grid.csv");
  grid_flags.attach(grid);
  std::vector<std::size_t> grid_layers, grid_dims;
  grid->add_option("--grid-layers", grid_layers, "layer counts (default 2,4,6,8,10,12)")
      ->delimiter(',');
  grid->add_option("--grid-d", grid_dims, "feature dimensions (default 16,32,64,128)")
      ->delimiter(',');

  auto* exp = app.add_subcommand("export", "write features.csv for a saved checkpoint");
  export_flags.attach(exp);
  std::string export_ckpt, export_split = "test", export_path;
  exp->add_option("--checkpoint", export_ckpt, "checkpoint path (default: <out>/model.ckpt)");
  exp->add_option("--split", export_split, "test or train")->check(CLI::IsMember({"test", "train"}));
  exp->add_option("--features", export_path, "output CSV (default: <out>/features.csv)");

  auto* syn = app.add_subcommand("synth", "write a synthetic dataset in C-MAPSS text layout");
  synth_flags.attach(syn);
  std::size_t syn_units = 20, syn_test = 20, syn_vars = 6;
  double syn_noise = 0.05;
  syn->add_option("--units", syn_units, "training units");
  syn->add_option("--test-units", syn_test, "test units");
  syn->add_option("--vars", syn_vars, "synthetic channels");
  syn->add_option("--noise", syn_noise, "noise standard deviation");

  CLI11_PARSE(app, argc, argv);
  log::set_level(quiet ? log::Level::warning : log::Level::info);
  tune_allocator();

  try {
    if (*train) return run_train(train_flags.resolve());
    if (*eval) return run_eval(eval_flags.resolve(), eval_ckpt);
    if (*ablate) return run_ablate(ablate_flags.resolve());
    if (*grid) return run_grid(grid_flags.resolve(), grid_layers, grid_dims);
    if (*exp) return run_export(export_flags.resolve(), export_ckpt, export_split, export_path);
    if (*syn) return run_synth(synth_flags.resolve(), syn_units, syn_test, syn_vars, syn_noise);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
