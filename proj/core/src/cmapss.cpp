#include "dualmixer/cmapss.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include "dualmixer/error.hpp"
#include "dualmixer/log.hpp"

namespace dualmixer::data {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double to_double(std::string_view token, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* first = token.data();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw ParseError(source + ":" + std::to_string(line) + ": non-numeric value '" +
                     std::string(token) + "'");
  }
  return v;
}

int to_int(std::string_view token, const std::string& source, std::size_t line) {
  const double v = to_double(token, source, line);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ParseError(source + ":" + std::to_string(line) + ": expected an integer, got '" +
                     std::string(token) + "'");
  }
  return static_cast<int>(v);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("failed to format value");
  return std::string(buf, ptr);
}

struct Pending {
  int unit_id = 0;
  std::vector<int> cycles;
  std::vector<double> settings;
  std::vector<double> sensors;
};

}  // namespace

std::vector<RawSeries> parse_cmapss(std::istream& in, const std::string& source) {
  std::vector<Pending> units;
  std::map<int, std::size_t> slot;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != kCmapssColumns) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(kCmapssColumns) + " columns, found " +
                       std::to_string(tokens.size()));
    }
    const int unit = to_int(tokens[0], source, line_no);
    const int cycle = to_int(tokens[1], source, line_no);
    auto [it, inserted] = slot.try_emplace(unit, units.size());
    if (inserted) units.push_back(Pending{unit, {}, {}, {}});
    Pending& p = units[it->second];
    const int expected = static_cast<int>(p.cycles.size()) + 1;
    if (cycle != expected) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": unit " + std::to_string(unit) +
                       " cycle " + std::to_string(cycle) + " out of sequence (expected " +
                       std::to_string(expected) + ")");
    }
    p.cycles.push_back(cycle);
    for (std::size_t k = 0; k < kSettingColumns; ++k)
      p.settings.push_back(to_double(tokens[2 + k], source, line_no));
    for (std::size_t k = 0; k < kSensorColumns; ++k)
      p.sensors.push_back(to_double(tokens[2 + kSettingColumns + k], source, line_no));
  }
  if (in.bad()) throw IoError("read failure on " + source);

  std::vector<RawSeries> out;
  out.reserve(units.size());
  for (auto& p : units) {
    const std::size_t n = p.cycles.size();
    out.push_back(RawSeries{p.unit_id, std::move(p.cycles),
                            Tensor(n, kSettingColumns, std::move(p.settings)),
                            Tensor(n, kSensorColumns, std::move(p.sensors))});
  }
  return out;
}

std::vector<RawSeries> parse_cmapss(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_cmapss(in, path.string());
}

std::vector<int> parse_rul_file(std::istream& in, const std::string& source) {
  std::vector<int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected 1 column, found " +
                       std::to_string(tokens.size()));
    }
    const int v = to_int(tokens[0], source, line_no);
    if (v < 0) throw ParseError(source + ":" + std::to_string(line_no) + ": negative RUL");
    out.push_back(v);
  }
  return out;
}

std::vector<int> parse_rul_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_rul_file(in, path.string());
}

void write_cmapss(std::ostream& out, const std::vector<RawSeries>& series) {
  for (const auto& s : series) {
    for (std::size_t r = 0; r < s.length(); ++r) {
      out << s.unit_id << ' ' << s.cycles[r];
      for (double v : s.settings.row(r)) out << ' ' << format_double(v);
      for (double v : s.sensors.row(r)) out << ' ' << format_double(v);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failure");
}

void write_rul_file(std::ostream& out, const std::vector<int>& ruls) {
  for (int r : ruls) out << r << '\n';
  if (!out) throw IoError("write failure");
}

RawSeries select_variables(const RawSeries& series) {
  if (series.sensors.cols() != kSensorColumns) {
    throw DimensionError("select_variables expects " + std::to_string(kSensorColumns) +
                         " sensor columns, got " + std::to_string(series.sensors.cols()));
  }
  const std::size_t n = series.length();
  Tensor kept(n, kSelectedSensors.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < kSelectedSensors.size(); ++k)
      kept(r, k) = series.sensors(r, kSelectedSensors[k] - 1);
  return RawSeries{series.unit_id, series.cycles, series.settings, std::move(kept)};
}

std::vector<RawSeries> select_variables(const std::vector<RawSeries>& series) {
  std::vector<RawSeries> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(select_variables(s));
  return out;
}

}  // namespace dualmixer::data
