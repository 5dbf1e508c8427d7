#pragma once

#include <filesystem>
#include <iosfwd>

#include "fracdim/fbm.hpp"

namespace fracdim {

// Binary layout, all little-endian:
//   "FRD1" | u32 version=1 | f64 hurst (NaN if untagged) | u32 d | u64 n_points
//   | f64 t_start | f64 t_end | u64 seed (0 if absent) | n_points*d f64, time-major
inline constexpr char kPathMagic[4] = {'F', 'R', 'D', '1'};
inline constexpr std::uint32_t kPathFormatVersion = 1;

void write_path_binary(std::ostream& os, const SamplePath& path);
SamplePath read_path_binary(std::istream& is);

void write_path_binary(const std::filesystem::path& file, const SamplePath& path);
SamplePath read_path_binary(const std::filesystem::path& file);

/// Header `t,x1,...,xd`, one row per grid point, 17 significant digits.
void write_path_csv(std::ostream& os, const SamplePath& path);
void write_path_csv(const std::filesystem::path& file, const SamplePath& path);

} // namespace fracdim
