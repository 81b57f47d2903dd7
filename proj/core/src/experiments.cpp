#include "dualmixer/experiments.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dualmixer/error.hpp"
#include "dualmixer/hash.hpp"
#include "dualmixer/log.hpp"

namespace dualmixer::harness {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("nan");
}

}  // namespace

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const RunData& data,
                                      bool write_outputs) {
  cfg.validate();
  std::vector<AblationRow> rows;
  for (model::Variant v : model::all_variants()) {
    RunConfig vc = cfg;
    vc.variant = v;
    vc.out_dir = (std::filesystem::path(cfg.out_dir) / std::string(model::to_string(v))).string();
    log::info("ablation: training variant " + std::string(model::to_string(v)));
    RunOutcome out = run_training(vc, data);
    if (write_outputs) write_run_outputs(vc, out);
    rows.push_back(AblationRow{v, out.report.parameter_count, out.report.rmse, out.report.mape});
  }
  if (write_outputs) {
    write_text_atomic(std::filesystem::path(cfg.out_dir) / "ablation.csv", ablation_csv(rows));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,parameter_count,rmse,mape\n";
  for (const auto& r : rows) {
    out += std::string(model::to_string(r.variant)) + ',' + std::to_string(r.parameter_count) +
           ',' + format_double(r.rmse) + ',' + format_optional(r.mape) + '\n';
  }
  return out;
}

std::vector<GridCell> grid_search(const RunConfig& cfg, const RunData& data,
                                  const std::vector<std::size_t>& layers_list,
                                  const std::vector<std::size_t>& d_list) {
  if (layers_list.empty() || d_list.empty()) throw ConfigError("grid lists must be non-empty");
  cfg.validate();
  std::vector<GridCell> cells;
  for (std::size_t n : layers_list) {
    for (std::size_t d : d_list) {
      RunConfig cc = cfg;
      cc.layers = n;
      cc.d = d;
      cc.out_dir = (std::filesystem::path(cfg.out_dir) /
                    ("N" + std::to_string(n) + "_d" + std::to_string(d)))
                       .string();
      cc.validate();
      GridCell cell;
      cell.layers = n;
      cell.d = d;
      cell.config_hash = cc.hash();
      cell.reference_default = n == 6 && d == 32;

      std::optional<RunReport> prior;
      try {
        prior = RunReport::load(std::filesystem::path(cc.out_dir) / "report.json");
      } catch (const ParseError& e) {
        log::warning("grid: ignoring unreadable report in " + cc.out_dir + ": " + e.what());
      }
      if (prior && prior->config_hash == cell.config_hash) {
        cell.rmse = prior->rmse;
        cell.mape = prior->mape;
        cell.resumed = true;
        log::info("grid: reusing completed cell " + cc.out_dir);
      } else {
        log::info("grid: training cell " + cc.out_dir);
        RunOutcome out = run_training(cc, data);
        write_run_outputs(cc, out);
        cell.rmse = out.report.rmse;
        cell.mape = out.report.mape;
      }
      cells.push_back(cell);
      write_text_atomic(std::filesystem::path(cfg.out_dir) / "grid.csv", grid_csv(cells));
    }
  }
  return cells;
}

std::string grid_csv(const std::vector<GridCell>& cells) {
  std::string out = "layers,d,rmse,mape,reference_default,config_hash\n";
  for (const auto& c : cells) {
    out += std::to_string(c.layers) + ',' + std::to_string(c.d) + ',' + format_double(c.rmse) +
           ',' + format_optional(c.mape) + ',' + (c.reference_default ? "1" : "0") + ',' +
           hex64(c.config_hash) + '\n';
  }
  return out;
}

void export_features(const model::DualMixer& model, const std::vector<data::WindowSample>& samples,
                     const std::filesystem::path& out_path) {
  const auto& mc = model.config();
  const std::size_t width = mc.window * mc.d;
  Inference inf = infer(model, samples, true);

  std::string text = "unit_id,anchor_index,true_rul,predicted_rul";
  for (std::size_t f = 0; f < width; ++f) text += ",f" + std::to_string(f);
  text += '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    text += std::to_string(s.unit_id) + ',' + std::to_string(s.anchor_index) + ',' +
            format_double(s.label) + ',' + format_double(inf.predictions[i]);
    for (double v : inf.features[i]) {
      text += ',';
      text += format_double(v);
    }
    text += '\n';
  }
  write_text_atomic(out_path, text);
}

}  // namespace dualmixer::harness
