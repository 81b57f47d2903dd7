#include "dualmixer/dataset_cache.hpp"

#include <fstream>

#include "dualmixer/binary_io.hpp"
#include "dualmixer/error.hpp"

namespace dualmixer::data {

namespace {

constexpr char kMagic[] = "DMXDATA1";

void write_sample(std::ostream& out, const WindowSample& s) {
  io::write_pod<std::int32_t>(out, s.unit_id);
  io::write_pod<std::uint64_t>(out, s.anchor_index);
  io::write_pod<std::int32_t>(out, s.true_rul_cycles);
  io::write_pod<double>(out, s.label);
  io::write_pod<std::uint64_t>(out, s.values.rows());
  io::write_pod<std::uint64_t>(out, s.values.cols());
  for (double v : s.values.values()) io::write_pod<double>(out, v);
}

WindowSample read_sample(std::istream& in) {
  WindowSample s;
  s.unit_id = io::read_pod<std::int32_t>(in);
  s.anchor_index = io::read_pod<std::uint64_t>(in);
  s.true_rul_cycles = io::read_pod<std::int32_t>(in);
  s.label = io::read_pod<double>(in);
  const auto rows = io::read_pod<std::uint64_t>(in);
  const auto cols = io::read_pod<std::uint64_t>(in);
  if (rows * cols > (std::uint64_t{1} << 28)) throw ParseError("dataset cache sample too large");
  std::vector<double> data(rows * cols);
  for (double& v : data) v = io::read_pod<double>(in);
  s.values = Tensor(rows, cols, std::move(data));
  return s;
}

}  // namespace

void save_dataset_cache(const std::filesystem::path& path, const PreparedData& data,
                        std::uint64_t config_hash) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dataset cache " + tmp.string());
    io::write_bytes(out, std::string(kMagic, 8));
    io::write_pod<std::uint64_t>(out, config_hash);
    io::write_pod<std::uint64_t>(out, data.n_vars);
    for (double v : data.stats.min.values()) io::write_pod<double>(out, v);
    for (double v : data.stats.max.values()) io::write_pod<double>(out, v);
    io::write_pod<std::uint64_t>(out, data.train.units.size());
    for (const auto& u : data.train.units) {
      io::write_pod<std::int32_t>(out, u.unit_id);
      io::write_pod<std::uint64_t>(out, u.begin);
      io::write_pod<std::uint64_t>(out, u.count);
    }
    io::write_pod<std::uint64_t>(out, data.train.samples.size());
    for (const auto& s : data.train.samples) write_sample(out, s);
    io::write_pod<std::uint64_t>(out, data.test.size());
    for (const auto& s : data.test) write_sample(out, s);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<PreparedData> load_dataset_cache(const std::filesystem::path& path,
                                               std::uint64_t config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  if (io::read_bytes(in, 8) != std::string(kMagic, 8)) throw ParseError("bad dataset cache magic");
  if (io::read_pod<std::uint64_t>(in) != config_hash) return std::nullopt;
  PreparedData d;
  d.n_vars = io::read_pod<std::uint64_t>(in);
  d.stats.min = Tensor(1, d.n_vars);
  d.stats.max = Tensor(1, d.n_vars);
  for (double& v : d.stats.min.values()) v = io::read_pod<double>(in);
  for (double& v : d.stats.max.values()) v = io::read_pod<double>(in);
  const auto units = io::read_pod<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < units; ++k) {
    UnitSpan u;
    u.unit_id = io::read_pod<std::int32_t>(in);
    u.begin = io::read_pod<std::uint64_t>(in);
    u.count = io::read_pod<std::uint64_t>(in);
    d.train.units.push_back(u);
  }
  const auto n_train = io::read_pod<std::uint64_t>(in);
  d.train.samples.reserve(n_train);
  for (std::uint64_t k = 0; k < n_train; ++k) d.train.samples.push_back(read_sample(in));
  const auto n_test = io::read_pod<std::uint64_t>(in);
  d.test.reserve(n_test);
  for (std::uint64_t k = 0; k < n_test; ++k) d.test.push_back(read_sample(in));
  return d;
}

}  // namespace dualmixer::data
