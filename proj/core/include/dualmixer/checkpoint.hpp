#pragma once

#include <filesystem>
#include <iosfwd>

#include "dualmixer/dual_mixer.hpp"

namespace dualmixer::model {

// Checkpoint layout, all integers and doubles little-endian:
//
//   magic        8 bytes  "DMXCKPT1"
//   window       u32
//   n_vars       u32
//   d            u32
//   layers       u32
//   variant      u32      index into {full, oCm, oCO, oO, oT, oS}
//   seed         u64
//   count        u32      number of parameter records
//   count records, in model creation order:
//     name_len   u32
//     name       name_len bytes, no terminator
//     rows       u64
//     cols       u64
//     values     rows*cols IEEE-754 binary64, row-major

void save_checkpoint(const DualMixer& model, std::ostream& out);
void save_checkpoint(const DualMixer& model, const std::filesystem::path& path);
DualMixer load_checkpoint(std::istream& in);
DualMixer load_checkpoint(const std::filesystem::path& path);

}  // namespace dualmixer::model
