#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dreamhone/network.hpp"

namespace dreamhone {

/// Checkpoint layout:
///   "DHNET" | u32 version | u64 header length | JSON header | f32 blocks
/// Integers and floats are little-endian. Weight blocks follow layer order,
/// weights before bias.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_network(const Network& net);
/// Throws FormatError (with byte offset) on malformed data and VersionError
/// on an unsupported format version.
Network deserialize_network(const std::string& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace dreamhone
