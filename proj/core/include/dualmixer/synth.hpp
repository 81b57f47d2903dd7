#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dualmixer/cmapss.hpp"

namespace dualmixer::synth {

/// Run-to-failure generator. Variable v of unit u follows
/// a_uv + b_uv * (t / L_u)^gamma + noise, t = 1..L_u.
struct SynthSpec {
  std::size_t n_units = 20;
  std::size_t min_cycles = 120;
  std::size_t max_cycles = 220;
  std::size_t n_vars = 6;
  double gamma = 2.0;
  double noise_std = 0.05;
  std::uint64_t seed = 1;
  std::size_t window = 30;  ///< only used to validate min_cycles >= 2 * window

  void validate() const;
};

/// Units 1..n_units, each with zero operating settings. The sign of b_uv
/// depends on the variable only, so every unit degrades the same way.
std::vector<data::RawSeries> generate(const SynthSpec& spec);

/// Further complete units from the same population as generate(spec)
/// (same degradation directions), drawn from an independent stream.
std::vector<data::RawSeries> generate_held_out(const SynthSpec& spec, std::size_t n_units,
                                               std::uint64_t stream);

/// Remaining cycles at `cycle` (1-based): length - cycle.
int oracle_rul(const data::RawSeries& unit, int cycle);

/// Training units plus an independently drawn test split whose units are
/// truncated at a random cycle, with the true remaining cycles.
struct SynthSplit {
  std::vector<data::RawSeries> train;
  std::vector<data::RawSeries> test;
  std::vector<int> test_rul;
};
SynthSplit make_split(const SynthSpec& spec, std::size_t n_test_units);

/// Widens series to the 21-sensor C-MAPSS layout: the synthetic channels
/// fill the 14 selected sensor slots (cycling if fewer), the remaining slots
/// are constant. Selecting variables from the result recovers the channels.
std::vector<data::RawSeries> to_cmapss_layout(const std::vector<data::RawSeries>& series);

}  // namespace dualmixer::synth
