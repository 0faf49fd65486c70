#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pkiaudit/common.hpp"
#include "pkiaudit/net.hpp"
#include "pkiaudit/throttle.hpp"

namespace pkiaudit::dns {

/// Lowercase ASCII domain name without a trailing dot. Labels are 1..63
/// octets of [a-z0-9_-] and the whole name is at most 253 octets.
class DomainName {
 public:
  // Throws InputError. Accepts mixed case and a single trailing dot.
  static DomainName parse(std::string_view text);
  static bool is_valid(std::string_view text);

  const std::string& str() const { return value_; }
  std::vector<std::string_view> labels() const;
  std::size_t label_count() const;

  friend bool operator==(const DomainName&, const DomainName&) = default;
  friend auto operator<=>(const DomainName&, const DomainName&) = default;

 private:
  explicit DomainName(std::string value) : value_(std::move(value)) {}
  std::string value_;
};

enum class RrType { SOA, A, CAA, TLSA, TXT };

std::string_view to_string(RrType type);
std::optional<RrType> rrtype_from_string(std::string_view text);
int rrtype_code(RrType type);

enum class Status { NoError, NxDomain, ServFail, Timeout };

std::string_view to_string(Status status);
std::optional<Status> status_from_string(std::string_view text);

// Label prefixes from the collection plan.
inline constexpr std::string_view kTlsaHttpsPrefix = "_443._tcp";
inline constexpr std::string_view kContactEmailPrefix = "_validation-contactemail";
inline constexpr std::string_view kContactPhonePrefix = "_validation-contactphone";

struct DnsQuery {
  DomainName name;
  RrType type;
  std::optional<std::string> prefix;

  DnsQuery(DomainName n, RrType t, std::optional<std::string> p = std::nullopt);

  std::string query_name() const;
};

struct DnsRecord {
  RrType type;
  std::uint32_t ttl = 0;
  std::string data;  // presentation format

  friend bool operator==(const DnsRecord&, const DnsRecord&) = default;
};

struct DnsResponse {
  Status status = Status::NoError;
  std::vector<DnsRecord> records;
  bool authenticated = false;
  std::string queried_name;
  std::string error;  // backend or transport detail, empty on success

  friend bool operator==(const DnsResponse&, const DnsResponse&) = default;
};

struct CaaLookup {
  std::string name;
  DnsResponse response;
};

struct DomainDnsBundle {
  DnsResponse soa;
  DnsResponse a;
  std::vector<CaaLookup> caa_by_ancestor;
  DnsResponse tlsa_443;
  DnsResponse contact_email_txt;
  DnsResponse contact_phone_txt;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // May throw BackendError for payloads it cannot interpret.
  virtual DnsResponse query(const DnsQuery& q) const = 0;
};

/// Immutable in-memory answers keyed by "<query-name>|<rrtype>". Names
/// without an entry answer NOERROR with no records.
class FixtureBackend final : public Backend {
 public:
  struct Entry {
    Status status = Status::NoError;
    bool ad = false;
    std::vector<std::string> records;
  };

  // Throws ConfigError.
  static FixtureBackend from_json_text(std::string_view text);
  static FixtureBackend from_file(const std::filesystem::path& path);

  DnsResponse query(const DnsQuery& q) const override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

/// DNS-over-HTTPS JSON client (dns.google style: name, type, do=1; Status,
/// AD, Answer[{name,type,TTL,data}]).
class DohBackend final : public Backend {
 public:
  using Transport = std::function<net::HttpResponse(const net::Url&)>;

  DohBackend(std::string endpoint, std::shared_ptr<RateLimiter> limiter, RetryPolicy retry,
             Transport transport = {});

  DnsResponse query(const DnsQuery& q) const override;

 private:
  std::string endpoint_;
  std::shared_ptr<RateLimiter> limiter_;
  RetryPolicy retry_;
  Transport transport_;
};

// Interprets one DoH JSON answer. Throws BackendError.
DnsResponse parse_doh_json(std::string_view body, RrType wanted, const std::string& queried_name);

/// The name itself followed by each ancestor obtained by removing the
/// leftmost label, ending at the top-level domain. A two-letter country
/// code preceded by a generic second-level label (co.uk, com.au, ...) is
/// treated as one top-level unit.
std::vector<std::string> caa_ancestor_walk(const DomainName& name);

DnsResponse query_records(const DnsQuery& q, const Backend& backend);

// Individual failures are captured per response, never thrown.
DomainDnsBundle collect_domain_dns(const DomainName& name, const Backend& backend);

}  // namespace pkiaudit::dns
