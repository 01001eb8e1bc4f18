#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "uvgrasp/error.hpp"

// Little-endian primitives shared by the UVCM, CMSK and LLAT formats.
namespace uvgrasp::detail {

inline void
write_u32(std::ostream& out, std::uint32_t value)
{
  const std::array<char, 4> bytes{ static_cast<char>(value & 0xff), static_cast<char>((value >> 8) & 0xff),
                                   static_cast<char>((value >> 16) & 0xff), static_cast<char>((value >> 24) & 0xff) };
  out.write(bytes.data(), 4);
}

inline void
write_u64(std::ostream& out, std::uint64_t value)
{
  write_u32(out, static_cast<std::uint32_t>(value & 0xffffffffu));
  write_u32(out, static_cast<std::uint32_t>(value >> 32));
}

inline void
write_f32(std::ostream& out, float value)
{
  write_u32(out, std::bit_cast<std::uint32_t>(value));
}

inline void
write_f64(std::ostream& out, double value)
{
  write_u64(out, std::bit_cast<std::uint64_t>(value));
}

inline std::uint32_t
read_u32(std::istream& in)
{
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in)
    fail(ErrorCode::ParseError, "truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float
read_f32(std::istream& in)
{
  return std::bit_cast<float>(read_u32(in));
}

inline double
read_f64(std::istream& in)
{
  const std::uint64_t lo = read_u32(in);
  const std::uint64_t hi = read_u32(in);
  return std::bit_cast<double>(lo | (hi << 32));
}

struct GridHeader
{
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
};

inline void
write_grid_header(std::ostream& out, std::string_view magic, const GridHeader& h)
{
  out.write(magic.data(), 4);
  write_u32(out, h.width);
  write_u32(out, h.height);
  write_u32(out, h.channels);
}

inline GridHeader
read_grid_header(std::istream& in, std::string_view magic)
{
  std::array<char, 4> m{};
  in.read(m.data(), 4);
  if (!in || std::string_view(m.data(), 4) != magic)
    fail(ErrorCode::ParseError, "bad magic, expected '" + std::string(magic) + "'");
  GridHeader h;
  h.width = read_u32(in);
  h.height = read_u32(in);
  h.channels = read_u32(in);
  return h;
}

} // namespace uvgrasp::detail
