#pragma once

#include <vector>

#include "dualmixer/pipeline.hpp"
#include "dualmixer/rng.hpp"
#include "dualmixer/synth.hpp"

namespace fixture {

using dualmixer::data::WindowDataset;
using dualmixer::data::WindowSample;

/// Units of the given window counts; values random, labels falling linearly
/// to zero at each unit's last window.
inline WindowDataset units(const std::vector<std::size_t>& counts, std::size_t window,
                           std::size_t n_vars, std::uint64_t seed) {
  dualmixer::Rng rng(seed);
  WindowDataset ds;
  int id = 1;
  for (std::size_t n : counts) {
    ds.units.push_back({id, ds.samples.size(), n});
    for (std::size_t i = 0; i < n; ++i) {
      WindowSample s;
      s.values = dualmixer::numerics::Tensor(window, n_vars);
      for (auto& v : s.values.values()) v = rng.uniform();
      s.true_rul_cycles = static_cast<int>(n - 1 - i);
      s.label = static_cast<double>(n - 1 - i) / static_cast<double>(n);
      s.unit_id = id;
      s.anchor_index = i;
      ds.samples.push_back(std::move(s));
    }
    ++id;
  }
  return ds;
}

/// Small synthetic split prepared like a real run: selection off, min-max
/// normalisation, windows and labels.
inline dualmixer::data::PreparedData synthetic(std::size_t window, std::size_t n_vars,
                                               std::size_t n_units, std::uint64_t seed,
                                               std::size_t n_test = 5) {
  dualmixer::synth::SynthSpec spec;
  spec.n_units = n_units;
  spec.n_vars = n_vars;
  spec.window = window;
  spec.seed = seed;
  auto split = dualmixer::synth::make_split(spec, n_test);
  dualmixer::data::PipelineOptions opts;
  opts.window = window;
  opts.select_sensors = false;
  return dualmixer::data::prepare(split.train, split.test, split.test_rul, opts);
}

}  // namespace fixture
