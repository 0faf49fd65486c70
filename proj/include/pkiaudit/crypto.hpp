#pragma once

#include <string>
#include <string_view>

#include "pkiaudit/common.hpp"

namespace pkiaudit {

Bytes sha256(ByteView data);
Bytes sha512(ByteView data);

std::string base64_encode(ByteView data);
// Throws ConfigError on invalid input.
Bytes base64_decode(std::string_view text);

}  // namespace pkiaudit
