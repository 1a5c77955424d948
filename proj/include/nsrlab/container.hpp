#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsrlab/fieldlab.hpp"

namespace nsrlab {

// NSRL field container. Little-endian throughout.
//
//   header (56 bytes)
//     0  char[4]  magic "NSRL"
//     4  u16      format version
//     6  u16      field count
//     8  u32 x4   nx, ny, nz, nt
//    24  f64 x3   domain_length, dt, t0
//    48  u32      CRC-32 of the payload
//    52  u32      flags (bit 0: w derived from u, bit 1: marked as a Navier-Stokes solution)
//   directory (40 bytes per field)
//     0  char[16] name, zero padded
//    16  u32      components
//    20  u32      reserved, zero
//    24  u64      byte offset from the start of the file
//    32  u64      byte length
//   payload: binary64 samples per field in (t, z, y, x, component) order, fields back to back.
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 56;
inline constexpr std::size_t kContainerEntryBytes = 40;

struct ContainerEntry {
  std::string name;
  std::uint32_t components = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

struct ContainerInfo {
  std::uint16_t version = kContainerVersion;
  Grid grid;
  std::uint32_t crc = 0;
  std::uint32_t flags = 0;
  std::vector<ContainerEntry> entries;
};

std::vector<std::uint8_t> encode_container(const FieldStack& stack);
// Throws IntegrityError on bad magic, version, layout or checksum.
FieldStack decode_container(const std::vector<std::uint8_t>& bytes, ContainerInfo* info = nullptr);
ContainerInfo inspect_container(const std::vector<std::uint8_t>& bytes);

void write_container(const std::string& path, const FieldStack& stack);
FieldStack read_container(const std::string& path, ContainerInfo* info = nullptr);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size);

}  // namespace nsrlab
