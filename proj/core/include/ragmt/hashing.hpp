#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ragmt {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First `chars` hex digits of the SHA-256; used for config and corpus stamps.
std::string short_hash(std::string_view data, std::size_t chars = 16);

/// First eight bytes of the SHA-256 as a little-endian integer.
std::uint64_t hash64(std::string_view data);

}  // namespace ragmt
