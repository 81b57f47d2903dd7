#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualmixer/tensor.hpp"

namespace dualmixer::data {

using numerics::Tensor;

inline constexpr std::size_t kSettingColumns = 3;
inline constexpr std::size_t kSensorColumns = 21;
/// unit, cycle, 3 settings, 21 sensors
inline constexpr std::size_t kCmapssColumns = 2 + kSettingColumns + kSensorColumns;

/// 1-based sensor indices kept for modelling (T24 ... W32).
inline constexpr std::array<std::size_t, 14> kSelectedSensors = {2,  3,  4,  7,  8,  9,  11,
                                                                  12, 13, 14, 15, 17, 20, 21};
inline constexpr std::array<const char*, kSensorColumns> kSensorSymbols = {
    "T2",   "T24", "T30", "T50", "P2",   "P15",    "P30",     "Nf",  "Nc",  "Epr", "Ps30",
    "Phi",  "NRf", "NRc", "BPR", "FarB", "htBleed", "Nf_dmd", "PCNfr_dmd", "W31", "W32"};

/// One engine's run: cycle numbers 1..n with settings (n x 3) and sensors (n x k).
struct RawSeries {
  int unit_id = 0;
  std::vector<int> cycles;
  Tensor settings;
  Tensor sensors;

  std::size_t length() const noexcept { return cycles.size(); }
  friend bool operator==(const RawSeries&, const RawSeries&) = default;
};

/// Parses C-MAPSS whitespace-separated text (26 columns). Rows are grouped by
/// unit in order of first appearance; cycles must run 1, 2, ... per unit.
std::vector<RawSeries> parse_cmapss(std::istream& in, const std::string& source = "<stream>");
std::vector<RawSeries> parse_cmapss(const std::filesystem::path& path);

/// One true remaining-cycle count per line.
std::vector<int> parse_rul_file(std::istream& in, const std::string& source = "<stream>");
std::vector<int> parse_rul_file(const std::filesystem::path& path);

/// Writes series in the same 26-column layout (shortest round-trip digits).
/// Works for any sensor width, producing 5 + k columns.
void write_cmapss(std::ostream& out, const std::vector<RawSeries>& series);
void write_rul_file(std::ostream& out, const std::vector<int>& ruls);

/// Keeps the 14 informative sensors, preserving order.
RawSeries select_variables(const RawSeries& series);
std::vector<RawSeries> select_variables(const std::vector<RawSeries>& series);

}  // namespace dualmixer::data
