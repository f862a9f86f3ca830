#pragma once

#include <string>
#include <vector>

#include "savflow/field.hpp"

namespace savflow {

/// Field snapshot: one-line textual header
///   SAVF1 dim N1 [N2 [N3]] L1 [L2 [L3]]\n
/// followed by little-endian 64-bit floats in row-major order.
/// Round-trips bit-exactly.
void write_snapshot(const std::string& path, const Field& f);
Field read_snapshot(const std::string& path);

/// Five stacked component blocks with header SAVQ1 (same layout per block).
void write_qtensor_snapshot(const std::string& path,
                            const std::vector<Field>& components);
std::vector<Field> read_qtensor_snapshot(const std::string& path);

}  // namespace savflow
