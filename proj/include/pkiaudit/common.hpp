#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pkiaudit {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Timestamp = std::chrono::sys_seconds;

// Malformed user input (domain names, CLI arguments, input lists).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unusable configuration files: mappings, trust stores, log lists, fixtures.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A backend answered, but with something we cannot interpret.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Network-level failure (connect, handshake, timeouts).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::string hex_encode(ByteView data);
std::optional<Bytes> hex_decode(std::string_view hex);

// RFC 3339 "YYYY-MM-DDTHH:MM:SS[.frac](Z|+hh:mm)". Throws InputError.
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp t);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace pkiaudit
