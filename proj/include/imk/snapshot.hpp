#pragma once

#include "imk/field.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace imk {

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Binary layout (little endian): "IMKF", u32 version, u32 spatial_dim,
/// u32 dims[spatial_dim], f64 lengths[spatial_dim], f64 re[N], f64 im[N].
void write_snapshot(std::ostream& os, const Field& f);
Field read_snapshot(std::istream& is);

void save_snapshot(const std::string& path, const Field& f);
Field load_snapshot(const std::string& path);

}  // namespace imk
