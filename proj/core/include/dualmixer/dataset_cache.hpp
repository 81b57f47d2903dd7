#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "dualmixer/pipeline.hpp"

namespace dualmixer::data {

// Cache layout (little-endian):
//   magic "DMXDATA1" | u64 config_hash | u64 n_vars
//   n_vars f64 minima | n_vars f64 maxima
//   u64 unit_count, then per unit: i32 unit_id, u64 begin, u64 count
//   u64 train_count, then train samples
//   u64 test_count, then test samples
// Sample: i32 unit_id | u64 anchor_index | i32 true_rul | f64 label |
//         u64 rows | u64 cols | rows*cols f64 row-major

void save_dataset_cache(const std::filesystem::path& path, const PreparedData& data,
                        std::uint64_t config_hash);

/// The cached data, or nullopt when the file is missing or was written for a
/// different configuration hash.
std::optional<PreparedData> load_dataset_cache(const std::filesystem::path& path,
                                               std::uint64_t config_hash);

}  // namespace dualmixer::data
