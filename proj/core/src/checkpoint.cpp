#include "dualmixer/checkpoint.hpp"

#include <fstream>

#include "dualmixer/binary_io.hpp"
#include "dualmixer/error.hpp"

namespace dualmixer::model {

namespace {

constexpr char kMagic[] = "DMXCKPT1";
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

std::uint32_t variant_index(Variant v) {
  const auto& all = all_variants();
  for (std::uint32_t i = 0; i < all.size(); ++i) {
    if (all[i] == v) return i;
  }
  throw ContractError("unknown variant");
}

}  // namespace

void save_checkpoint(const DualMixer& model, std::ostream& out) {
  const ModelConfig& c = model.config();
  io::write_bytes(out, std::string(kMagic, 8));
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.window));
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.n_vars));
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.d));
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.layers));
  io::write_pod<std::uint32_t>(out, variant_index(c.variant));
  io::write_pod<std::uint64_t>(out, c.seed);
  const auto params = model.parameters().all();
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    io::write_bytes(out, p.name);
    io::write_pod<std::uint64_t>(out, p.value.rows());
    io::write_pod<std::uint64_t>(out, p.value.cols());
    for (double v : p.value.values()) io::write_pod<double>(out, v);
  }
}

void save_checkpoint(const DualMixer& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  save_checkpoint(model, out);
}

DualMixer load_checkpoint(std::istream& in) {
  if (io::read_bytes(in, 8) != std::string(kMagic, 8)) {
    throw ParseError("not a Dual-Mixer checkpoint (bad magic)");
  }
  ModelConfig c;
  c.window = io::read_pod<std::uint32_t>(in);
  c.n_vars = io::read_pod<std::uint32_t>(in);
  c.d = io::read_pod<std::uint32_t>(in);
  c.layers = io::read_pod<std::uint32_t>(in);
  const auto vi = io::read_pod<std::uint32_t>(in);
  if (vi >= all_variants().size()) throw ParseError("checkpoint has unknown variant index");
  c.variant = all_variants()[vi];
  c.seed = io::read_pod<std::uint64_t>(in);
  c.validate();

  numerics::ParameterStore store;
  const auto count = io::read_pod<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = io::read_pod<std::uint32_t>(in);
    std::string name = io::read_bytes(in, name_len);
    const auto rows = io::read_pod<std::uint64_t>(in);
    const auto cols = io::read_pod<std::uint64_t>(in);
    if (rows * cols > kMaxElements) throw ParseError("checkpoint tensor too large: " + name);
    std::vector<double> data(rows * cols);
    for (double& v : data) v = io::read_pod<double>(in);
    store.add(std::move(name), numerics::Tensor(rows, cols, std::move(data)));
  }
  return DualMixer::from_parameters(c, store);
}

DualMixer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  return load_checkpoint(in);
}

}  // namespace dualmixer::model
