#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "pkiaudit/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <charconv>

namespace pkiaudit::net {

std::string Url::origin() const {
  bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
  std::string out = scheme + "://" + host;
  if (!default_port) out += ":" + std::to_string(port);
  return out;
}

Url parse_url(std::string_view text) {
  Url url;
  auto sep = text.find("://");
  if (sep == std::string_view::npos) throw InputError("not an absolute URL: " + std::string(text));
  url.scheme = to_lower(text.substr(0, sep));
  if (url.scheme != "http" && url.scheme != "https")
    throw InputError("unsupported URL scheme: " + std::string(text));
  auto rest = text.substr(sep + 3);
  auto path_pos = rest.find_first_of("/?#");
  auto authority = rest.substr(0, path_pos);
  url.path_and_query = path_pos == std::string_view::npos ? "/" : std::string(rest.substr(path_pos));
  if (auto hash = url.path_and_query.find('#'); hash != std::string::npos)
    url.path_and_query.erase(hash);
  if (url.path_and_query.empty() || url.path_and_query.front() != '/')
    url.path_and_query.insert(0, "/");
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  url.port = url.scheme == "https" ? 443 : 80;
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    auto port_text = authority.substr(colon + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535)
      throw InputError("invalid port in URL: " + std::string(text));
    url.port = port;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw InputError("URL without host: " + std::string(text));
  url.host = to_lower(authority);
  if (url.host.back() == '.') url.host.pop_back();
  return url;
}

Url resolve_location(const Url& base, std::string_view location) {
  location = trim(location);
  if (location.find("://") != std::string_view::npos) return parse_url(location);
  if (location.starts_with("//")) return parse_url(base.scheme + ":" + std::string(location));
  Url out = base;
  if (location.starts_with("/")) {
    out.path_and_query = std::string(location);
  } else {
    auto dir = base.path_and_query.substr(0, base.path_and_query.find('?'));
    dir = dir.substr(0, dir.rfind('/') + 1);
    out.path_and_query = dir + std::string(location);
  }
  return out;
}

HttpResponse http_get(const Url& url, const HttpOptions& options) {
  httplib::Client client(url.origin());
  client.set_follow_location(false);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);
  client.enable_server_certificate_verification(options.verify_tls);
  auto result = client.Get(url.path_and_query);
  if (!result) throw TransportError(url.str() + ": " + httplib::to_string(result.error()));
  HttpResponse response;
  response.status = result->status;
  response.body = result->body;
  if (result->has_header("Location")) response.location = result->get_header_value("Location");
  return response;
}

bool tcp_port_open(const std::string& ip, int port, std::chrono::milliseconds timeout) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1) return false;
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (fd < 0) return false;
  bool open = false;
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  if (rc == 0) {
    open = true;
  } else if (errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout.count())) == 1) {
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      open = err == 0;
    }
  }
  ::close(fd);
  return open;
}

std::string url_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

}  // namespace pkiaudit::net
