#include "fracdim/path_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "fracdim/error.hpp"

namespace fracdim {

namespace {

template <typename U>
void put_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U)))
    throw InvalidArgument("truncated path file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double x) { put_le(os, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

} // namespace

void write_path_binary(std::ostream& os, const SamplePath& path) {
  os.write(kPathMagic, 4);
  put_le<std::uint32_t>(os, kPathFormatVersion);
  put_f64(os, path.hurst() ? path.hurst()->value() : std::numeric_limits<double>::quiet_NaN());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.dim()));
  put_le<std::uint64_t>(os, path.size());
  put_f64(os, path.grid().t_start());
  put_f64(os, path.grid().t_end());
  put_le<std::uint64_t>(os, path.seed().value_or(0));
  for (double v : path.values()) put_f64(os, v);
  if (!os) throw std::runtime_error("failed writing path binary");
}

SamplePath read_path_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kPathMagic, 4) != 0)
    throw InvalidArgument("not a path file (bad magic)");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kPathFormatVersion) throw InvalidArgument("unsupported path format version");
  const double hurst = get_f64(is);
  const auto dim = get_le<std::uint32_t>(is);
  const auto n = get_le<std::uint64_t>(is);
  const double t0 = get_f64(is);
  const double t1 = get_f64(is);
  const auto seed = get_le<std::uint64_t>(is);
  if (dim == 0 || n < 2 || n > (std::uint64_t{1} << 34) / dim)
    throw InvalidArgument("implausible path header");
  std::vector<double> values(static_cast<std::size_t>(n) * dim);
  for (auto& v : values) v = get_f64(is);
  std::optional<HurstParam> h;
  if (!std::isnan(hurst)) h.emplace(hurst);
  std::optional<std::uint64_t> s;
  if (seed != 0) s = seed;
  return SamplePath(TimeGrid(static_cast<std::size_t>(n), t0, t1), dim, std::move(values), h, s);
}

void write_path_binary(const std::filesystem::path& file, const SamplePath& path) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + file.string());
  write_path_binary(os, path);
}

SamplePath read_path_binary(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  return read_path_binary(is);
}

void write_path_csv(std::ostream& os, const SamplePath& path) {
  os << 't';
  for (std::size_t c = 0; c < path.dim(); ++c) os << ",x" << (c + 1);
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < path.size(); ++i) {
    os << path.grid().time(i);
    for (double v : path.point(i)) os << ',' << v;
    os << '\n';
  }
}

void write_path_csv(const std::filesystem::path& file, const SamplePath& path) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + file.string());
  write_path_csv(os, path);
}

} // namespace fracdim
