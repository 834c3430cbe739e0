#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace maskcheck {

/// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::string_view data);

std::string to_hex(const std::uint8_t* data, std::size_t len);

} // namespace maskcheck
