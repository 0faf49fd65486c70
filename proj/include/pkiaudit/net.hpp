#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

#include "pkiaudit/common.hpp"

namespace pkiaudit::net {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path_and_query;  // always starts with '/'

  std::string origin() const;
  std::string str() const { return origin() + path_and_query; }
};

// Accepts absolute http(s) URLs only. Throws InputError.
Url parse_url(std::string_view text);
// Resolves a Location header value against the URL that produced it.
Url resolve_location(const Url& base, std::string_view location);

struct HttpResponse {
  int status = 0;
  std::string body;
  std::optional<std::string> location;
};

struct HttpOptions {
  std::chrono::seconds timeout{10};
  bool verify_tls = true;
};

// Single request, no redirect following. Throws TransportError when no
// response was received.
HttpResponse http_get(const Url& url, const HttpOptions& options = {});

// Connect-only TCP probe.
bool tcp_port_open(const std::string& ip, int port, std::chrono::milliseconds timeout);

std::string url_encode(std::string_view s);

}  // namespace pkiaudit::net
