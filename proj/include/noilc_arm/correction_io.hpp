#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

#include "noilc_arm/errors.hpp"
#include "noilc_arm/noilc.hpp"

namespace noilc_arm {

// Correction-signal file, little-endian:
//   "NOIL" | version u16 | N u32 | T_ilc f64 | N x f64 | CRC32 u32
// The CRC covers every byte before it.
inline constexpr std::array<char, 4> kCorrectionMagic = {'N', 'O', 'I', 'L'};
inline constexpr std::uint16_t kCorrectionVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& buf, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::vector<unsigned char>& buf, std::size_t offset) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, buf.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(len)));
}

}  // namespace detail

inline std::vector<unsigned char> encode_correction(const IlcIterate& it) {
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kCorrectionMagic.begin(), kCorrectionMagic.end());
  detail::put_le<std::uint16_t>(buf, kCorrectionVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(it.u.size()));
  detail::put_le<double>(buf, it.T_ilc);
  for (Eigen::Index i = 0; i < it.u.size(); ++i) detail::put_le<double>(buf, it.u(i));
  detail::put_le<std::uint32_t>(buf, detail::crc32_of(buf.data(), buf.size()));
  return buf;
}

// Throws IntegrityError on bad magic, version, truncation or checksum, and
// LengthMismatchError when expected_N is given and differs.
inline IlcIterate decode_correction(const std::vector<unsigned char>& buf,
                                    std::optional<std::size_t> expected_N = std::nullopt) {
  constexpr std::size_t header = 4 + 2 + 4 + 8;
  if (buf.size() < header + 4) throw IntegrityError("correction file truncated");
  if (!std::equal(kCorrectionMagic.begin(), kCorrectionMagic.end(), buf.begin()))
    throw IntegrityError("correction file has bad magic");
  const auto version = detail::get_le<std::uint16_t>(buf, 4);
  if (version != kCorrectionVersion)
    throw IntegrityError("unsupported correction file version " + std::to_string(version));
  const auto n = detail::get_le<std::uint32_t>(buf, 6);
  if (buf.size() != header + 8 * static_cast<std::size_t>(n) + 4)
    throw IntegrityError("correction file size does not match its header");
  const auto stored = detail::get_le<std::uint32_t>(buf, buf.size() - 4);
  if (stored != detail::crc32_of(buf.data(), buf.size() - 4))
    throw IntegrityError("correction file checksum mismatch");
  if (expected_N && *expected_N != n)
    throw LengthMismatchError("correction file length", *expected_N, n);

  IlcIterate it;
  it.T_ilc = detail::get_le<double>(buf, 10);
  it.u.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) it.u(i) = detail::get_le<double>(buf, header + 8 * i);
  return it;
}

inline void save_correction(const std::filesystem::path& path, const IlcIterate& it) {
  const std::vector<unsigned char> buf = encode_correction(it);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("failed writing " + path.string());
}

inline IlcIterate load_correction(const std::filesystem::path& path,
                                  std::optional<std::size_t> expected_N = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return decode_correction(buf, expected_N);
}

}  // namespace noilc_arm
