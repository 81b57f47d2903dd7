#include "dualmixer/synth.hpp"

#include <cmath>

#include "dualmixer/error.hpp"
#include "dualmixer/rng.hpp"

namespace dualmixer::synth {

namespace {

constexpr std::uint64_t kTestStream = 0x54455354ULL;
constexpr std::uint64_t kDirectionStream = 0x444952ULL;

// Each variable degrades in one direction for every unit, like a physical
// sensor; only magnitudes and offsets vary per unit.
std::vector<double> directions(const SynthSpec& spec) {
  Rng rng(derive_seed(spec.seed, kDirectionStream));
  std::vector<double> dir(spec.n_vars);
  for (auto& d : dir) d = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return dir;
}

data::RawSeries generate_unit(const SynthSpec& spec, const std::vector<double>& dir, int unit_id,
                              std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t span = spec.max_cycles - spec.min_cycles + 1;
  const std::size_t length = spec.min_cycles + rng.index(span);
  std::vector<double> offset(spec.n_vars), slope(spec.n_vars);
  for (std::size_t v = 0; v < spec.n_vars; ++v) {
    offset[v] = rng.uniform(0.0, 0.5);
    slope[v] = dir[v] * rng.uniform(0.5, 1.5);
  }
  data::RawSeries s;
  s.unit_id = unit_id;
  s.settings = numerics::Tensor(length, data::kSettingColumns);
  s.sensors = numerics::Tensor(length, spec.n_vars);
  const double l = static_cast<double>(length);
  for (std::size_t r = 0; r < length; ++r) {
    s.cycles.push_back(static_cast<int>(r + 1));
    const double wear = std::pow(static_cast<double>(r + 1) / l, spec.gamma);
    for (std::size_t v = 0; v < spec.n_vars; ++v) {
      double x = offset[v] + slope[v] * wear;
      if (spec.noise_std > 0.0) x += spec.noise_std * rng.normal();
      s.sensors(r, v) = x;
    }
  }
  return s;
}

std::vector<data::RawSeries> generate_units(const SynthSpec& spec, const std::vector<double>& dir,
                                            std::size_t n_units, std::uint64_t unit_seed) {
  std::vector<data::RawSeries> out;
  out.reserve(n_units);
  for (std::size_t u = 0; u < n_units; ++u) {
    out.push_back(generate_unit(spec, dir, static_cast<int>(u + 1), derive_seed(unit_seed, u)));
  }
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_units < 1) throw ConfigError("synthetic data needs at least one unit");
  if (n_vars < 2) throw ConfigError("synthetic data needs n_vars >= 2");
  if (min_cycles < 2 * window) {
    throw ConfigError("synthetic min_cycles must be >= 2 * window (" + std::to_string(2 * window) +
                      ")");
  }
  if (max_cycles < min_cycles) throw ConfigError("synthetic max_cycles < min_cycles");
  if (!(gamma > 0.0)) throw ConfigError("degradation exponent must be > 0");
  if (!(noise_std >= 0.0)) throw ConfigError("noise std must be >= 0");
}

std::vector<data::RawSeries> generate(const SynthSpec& spec) {
  spec.validate();
  return generate_units(spec, directions(spec), spec.n_units, spec.seed);
}

std::vector<data::RawSeries> generate_held_out(const SynthSpec& spec, std::size_t n_units,
                                               std::uint64_t stream) {
  spec.validate();
  return generate_units(spec, directions(spec), n_units, derive_seed(spec.seed, stream));
}

int oracle_rul(const data::RawSeries& unit, int cycle) {
  const int length = static_cast<int>(unit.length());
  if (cycle < 1 || cycle > length) {
    throw ContractError("cycle " + std::to_string(cycle) + " outside unit " +
                        std::to_string(unit.unit_id) + " (1.." + std::to_string(length) + ")");
  }
  return length - cycle;
}

SynthSplit make_split(const SynthSpec& spec, std::size_t n_test_units) {
  SynthSplit split;
  split.train = generate(spec);
  if (n_test_units == 0) return split;
  const std::uint64_t test_seed = derive_seed(spec.seed, kTestStream);
  auto full = generate_units(spec, directions(spec), n_test_units, test_seed);
  Rng cut_rng(derive_seed(test_seed, kTestStream));
  for (auto& s : full) {
    const std::size_t length = s.length();
    const std::size_t lo = length * 3 / 10;
    const std::size_t keep = lo + cut_rng.index(length - lo + 1);
    data::RawSeries t;
    t.unit_id = s.unit_id;
    t.cycles.assign(s.cycles.begin(), s.cycles.begin() + static_cast<std::ptrdiff_t>(keep));
    t.settings = numerics::Tensor(keep, s.settings.cols());
    t.sensors = numerics::Tensor(
        keep, s.sensors.cols(),
        std::vector<double>(s.sensors.values().begin(),
                            s.sensors.values().begin() +
                                static_cast<std::ptrdiff_t>(keep * s.sensors.cols())));
    split.test_rul.push_back(static_cast<int>(length - keep));
    split.test.push_back(std::move(t));
  }
  return split;
}

std::vector<data::RawSeries> to_cmapss_layout(const std::vector<data::RawSeries>& series) {
  std::vector<data::RawSeries> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    const std::size_t n = s.length();
    const std::size_t k = s.sensors.cols();
    if (k == 0) throw DimensionError("series without sensor channels");
    numerics::Tensor wide(n, data::kSensorColumns);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < data::kSensorColumns; ++c) wide(r, c) = 100.0 + static_cast<double>(c);
      for (std::size_t j = 0; j < data::kSelectedSensors.size(); ++j)
        wide(r, data::kSelectedSensors[j] - 1) = s.sensors(r, j % k);
    }
    out.push_back(data::RawSeries{s.unit_id, s.cycles, s.settings, std::move(wide)});
  }
  return out;
}

}  // namespace dualmixer::synth
