#pragma once

namespace dualmixer {

/// Keeps large tensor buffers on the heap instead of fresh mmaps, which
/// removes most page-fault cost in training loops. No-op outside glibc.
void tune_allocator();

}  // namespace dualmixer
