#include <algorithm>
#include <cctype>

#include "pkiaudit/caa.hpp"

namespace pkiaudit::caa {

namespace {

bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// label *("." label), labels of letters, digits and inner hyphens.
bool valid_hostname(std::string_view host) {
  if (host.empty() || host.size() > 253) return false;
  auto labels = split(host, '.');
  for (auto label : labels) {
    if (label.empty() || label.size() > 63) return false;
    if (!alnum(label.front()) || !alnum(label.back())) return false;
    if (!std::all_of(label.begin(), label.end(), [](char c) { return alnum(c) || c == '-'; }))
      return false;
  }
  return true;
}

bool valid_ipv4(std::string_view host) {
  auto parts = split(host, '.');
  if (parts.size() != 4) return false;
  for (auto p : parts) {
    if (p.empty() || p.size() > 3) return false;
    if (!std::all_of(p.begin(), p.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return false;
    if (std::stoi(std::string(p)) > 255) return false;
  }
  return true;
}

bool uri_char(char c) {
  static constexpr std::string_view kExtra = "-._~!$&'()*+,;=:@/?#%[]";
  return alnum(c) || kExtra.find(c) != std::string_view::npos;
}

bool valid_http(std::string_view rest) {
  if (!rest.starts_with("//")) return false;
  rest.remove_prefix(2);
  auto end = rest.find_first_of("/?#");
  auto authority = rest.substr(0, end);
  auto tail = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  std::string_view host = authority;
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos && !authority.starts_with("[")) {
    auto port = authority.substr(colon + 1);
    if (port.empty() || port.size() > 5 ||
        !std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return false;
    host = authority.substr(0, colon);
  }
  bool host_ok = valid_ipv4(host) || (host.find('.') != std::string_view::npos && valid_hostname(host)) ||
                 (host.size() > 2 && host.front() == '[' && host.back() == ']');
  return host_ok && std::all_of(tail.begin(), tail.end(), uri_char);
}

bool valid_local_part(std::string_view local) {
  static constexpr std::string_view kAtext = "!#$%&'*+/=?^_`{|}~.-";
  return !local.empty() && std::all_of(local.begin(), local.end(), [](char c) {
    return alnum(c) || kAtext.find(c) != std::string_view::npos;
  });
}

bool valid_mailto(std::string_view rest) {
  auto query = rest.find('?');
  auto addresses = rest.substr(0, query);
  if (addresses.empty()) return false;
  for (auto addr : split(addresses, ',')) {
    auto at = addr.rfind('@');
    if (at == std::string_view::npos) return false;
    auto domain = addr.substr(at + 1);
    if (!valid_local_part(addr.substr(0, at)) || domain.find('.') == std::string_view::npos ||
        !valid_hostname(domain))
      return false;
  }
  auto tail = query == std::string_view::npos ? std::string_view{} : rest.substr(query);
  return std::all_of(tail.begin(), tail.end(), uri_char);
}

// RFC 3986 scheme followed by ':'.
std::optional<std::string_view> leading_scheme(std::string_view v) {
  if (v.empty() || !std::isalpha(static_cast<unsigned char>(v.front()))) return std::nullopt;
  std::size_t i = 1;
  while (i < v.size() && (alnum(v[i]) || v[i] == '+' || v[i] == '-' || v[i] == '.')) ++i;
  if (i >= v.size() || v[i] != ':') return std::nullopt;
  return v.substr(0, i);
}

bool starts_with_host(std::string_view v) {
  auto end = v.find_first_of("/:?#");
  auto host = v.substr(0, end);
  if (host.find('.') == std::string_view::npos || !valid_hostname(host)) return false;
  auto tld = host.substr(host.rfind('.') + 1);
  return tld.size() >= 2 && std::all_of(tld.begin(), tld.end(), [](char c) {
           return std::isalpha(static_cast<unsigned char>(c));
         });
}

}  // namespace

IodefVerdict validate_iodef(std::string_view raw) {
  auto value = trim(raw);
  if (value.empty()) return {IodefKind::Garbage, "empty value"};

  auto scheme = leading_scheme(value);
  if (scheme) {
    auto lowered = to_lower(*scheme);
    auto rest = value.substr(scheme->size() + 1);
    if (lowered == "mailto" && valid_mailto(rest)) return {IodefKind::Valid, "mailto"};
    if ((lowered == "http" || lowered == "https") && valid_http(rest))
      return {IodefKind::Valid, lowered};
  }
  if (!scheme && value.find('@') != std::string_view::npos)
    return {IodefKind::LikelyEmail, "address without mailto: scheme"};
  if (value.starts_with("//") || starts_with_host(value))
    return {IodefKind::LikelyHttp, "host without http(s) scheme"};
  if (value.find(':') != std::string_view::npos) {
    auto s = scheme ? std::string(*scheme) : std::string(value.substr(0, value.find(':')));
    auto lowered = to_lower(s);
    if (lowered == "mailto" || lowered == "http" || lowered == "https")
      return {IodefKind::InvalidScheme, "malformed " + lowered + " URL"};
    return {IodefKind::InvalidScheme, "unknown scheme '" + s + "'"};
  }
  return {IodefKind::Garbage, "neither URL nor address"};
}

}  // namespace pkiaudit::caa
