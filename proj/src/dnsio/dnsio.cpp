#include "pkiaudit/dnsio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pkiaudit::dns {

using nlohmann::json;

namespace {

bool valid_label(std::string_view label) {
  if (label.empty() || label.size() > 63) return false;
  for (char c : label) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

std::optional<std::string> normalize(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.back() == '.') text.remove_suffix(1);
  if (text.empty() || text.size() > 253) return std::nullopt;
  for (unsigned char c : text)
    if (c >= 0x80) return std::nullopt;  // IDNs must arrive punycode-encoded
  std::string lowered = to_lower(text);
  for (auto label : split(lowered, '.'))
    if (!valid_label(label)) return std::nullopt;
  return lowered;
}

// Generic second-level labels that form a single top-level unit under a
// two-letter country code.
constexpr std::array<std::string_view, 12> kSecondLevelUnits = {
    "ac", "co", "com", "edu", "gov", "ltd", "me", "net", "nic", "or", "org", "plc"};

}  // namespace

DomainName DomainName::parse(std::string_view text) {
  auto n = normalize(text);
  if (!n) throw InputError("invalid domain name: '" + std::string(text) + "'");
  return DomainName(std::move(*n));
}

bool DomainName::is_valid(std::string_view text) { return normalize(text).has_value(); }

std::vector<std::string_view> DomainName::labels() const { return split(value_, '.'); }

std::size_t DomainName::label_count() const {
  return static_cast<std::size_t>(std::count(value_.begin(), value_.end(), '.')) + 1;
}

std::string_view to_string(RrType type) {
  switch (type) {
    case RrType::SOA: return "SOA";
    case RrType::A: return "A";
    case RrType::CAA: return "CAA";
    case RrType::TLSA: return "TLSA";
    case RrType::TXT: return "TXT";
  }
  return "?";
}

std::optional<RrType> rrtype_from_string(std::string_view text) {
  for (auto t : {RrType::SOA, RrType::A, RrType::CAA, RrType::TLSA, RrType::TXT})
    if (iequals(text, to_string(t))) return t;
  return std::nullopt;
}

int rrtype_code(RrType type) {
  switch (type) {
    case RrType::SOA: return 6;
    case RrType::A: return 1;
    case RrType::CAA: return 257;
    case RrType::TLSA: return 52;
    case RrType::TXT: return 16;
  }
  return 0;
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::NoError: return "NOERROR";
    case Status::NxDomain: return "NXDOMAIN";
    case Status::ServFail: return "SERVFAIL";
    case Status::Timeout: return "TIMEOUT";
  }
  return "?";
}

std::optional<Status> status_from_string(std::string_view text) {
  for (auto s : {Status::NoError, Status::NxDomain, Status::ServFail, Status::Timeout})
    if (iequals(text, to_string(s))) return s;
  return std::nullopt;
}

DnsQuery::DnsQuery(DomainName n, RrType t, std::optional<std::string> p)
    : name(std::move(n)), type(t), prefix(std::move(p)) {
  if (prefix) {
    auto lowered = to_lower(*prefix);
    for (auto label : split(lowered, '.'))
      if (!valid_label(label)) throw InputError("invalid query prefix: '" + *prefix + "'");
    prefix = std::move(lowered);
  }
}

std::string DnsQuery::query_name() const {
  return prefix ? *prefix + "." + name.str() : name.str();
}

// ---------------------------------------------------------------------------
// Fixture backend

FixtureBackend FixtureBackend::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("DNS fixture is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("DNS fixture must be a JSON object");

  FixtureBackend backend;
  for (const auto& [key, value] : doc.items()) {
    auto bar = key.rfind('|');
    if (bar == std::string::npos) throw ConfigError("DNS fixture key lacks '|': " + key);
    auto name = normalize(std::string_view(key).substr(0, bar));
    auto type = rrtype_from_string(std::string_view(key).substr(bar + 1));
    if (!name || !type) throw ConfigError("invalid DNS fixture key: " + key);
    if (!value.is_object()) throw ConfigError("DNS fixture entry must be an object: " + key);

    Entry entry;
    auto status_text = value.value("status", std::string("NOERROR"));
    auto status = status_from_string(status_text);
    if (!status) throw ConfigError("unknown status '" + status_text + "' in " + key);
    entry.status = *status;
    entry.ad = value.value("ad", false) && entry.status == Status::NoError;
    if (value.contains("records")) {
      if (!value["records"].is_array()) throw ConfigError("records must be an array: " + key);
      for (const auto& r : value["records"]) {
        if (!r.is_string()) throw ConfigError("records must be strings: " + key);
        entry.records.push_back(r.get<std::string>());
      }
    }
    if (entry.status != Status::NoError && !entry.records.empty())
      throw ConfigError("records present on a non-NOERROR fixture entry: " + key);
    backend.entries_[*name + "|" + std::string(to_string(*type))] = std::move(entry);
  }
  return backend;
}

FixtureBackend FixtureBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open DNS fixture " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

DnsResponse FixtureBackend::query(const DnsQuery& q) const {
  DnsResponse response;
  response.queried_name = q.query_name();
  auto it = entries_.find(response.queried_name + "|" + std::string(to_string(q.type)));
  if (it == entries_.end()) return response;
  response.status = it->second.status;
  response.authenticated = it->second.ad;
  for (const auto& data : it->second.records) response.records.push_back({q.type, 0, data});
  return response;
}

// ---------------------------------------------------------------------------
// DNS-over-HTTPS backend

DnsResponse parse_doh_json(std::string_view body, RrType wanted, const std::string& queried_name) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("DoH payload is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("Status") || !doc["Status"].is_number_integer())
    throw BackendError("DoH payload lacks an integer Status");

  DnsResponse response;
  response.queried_name = queried_name;
  switch (doc["Status"].get<int>()) {
    case 0: response.status = Status::NoError; break;
    case 3: response.status = Status::NxDomain; break;
    default: response.status = Status::ServFail; break;
  }
  if (response.status != Status::NoError) return response;
  response.authenticated = doc.value("AD", false);
  if (doc.contains("Answer")) {
    if (!doc["Answer"].is_array()) throw BackendError("DoH Answer is not an array");
    for (const auto& ans : doc["Answer"]) {
      if (!ans.is_object() || !ans.contains("type") || !ans.contains("data"))
        throw BackendError("DoH answer entry lacks type/data");
      // CNAMEs are followed by the recursive resolver; keep final records only.
      if (ans["type"].get<int>() != rrtype_code(wanted)) continue;
      DnsRecord rec{wanted, ans.value("TTL", 0u), ans["data"].get<std::string>()};
      response.records.push_back(std::move(rec));
    }
  }
  return response;
}

DohBackend::DohBackend(std::string endpoint, std::shared_ptr<RateLimiter> limiter,
                       RetryPolicy retry, Transport transport)
    : endpoint_(std::move(endpoint)),
      limiter_(std::move(limiter)),
      retry_(std::move(retry)),
      transport_(std::move(transport)) {
  if (!transport_) transport_ = [](const net::Url& url) { return net::http_get(url); };
}

DnsResponse DohBackend::query(const DnsQuery& q) const {
  auto qname = q.query_name();
  auto url = net::parse_url(endpoint_);
  url.path_and_query += (url.path_and_query.find('?') == std::string::npos ? "?" : "&");
  url.path_and_query += "name=" + net::url_encode(qname) + "&type=" + std::string(to_string(q.type)) +
                        "&do=1";

  std::string last_error;
  for (int attempt = 0; attempt < retry_.attempts(); ++attempt) {
    if (attempt > 0) retry_.wait_before_retry(attempt - 1);
    if (limiter_) limiter_->acquire();
    try {
      auto http = transport_(url);
      if (http.status >= 500) {
        last_error = "HTTP " + std::to_string(http.status);
        continue;
      }
      if (http.status != 200) throw BackendError("DoH HTTP status " + std::to_string(http.status));
      return parse_doh_json(http.body, q.type, qname);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  DnsResponse timeout;
  timeout.status = Status::Timeout;
  timeout.queried_name = qname;
  timeout.error = last_error;
  return timeout;
}

// ---------------------------------------------------------------------------

std::vector<std::string> caa_ancestor_walk(const DomainName& name) {
  auto labels = name.labels();
  std::size_t tld_labels = 1;
  if (labels.size() >= 2) {
    auto last = labels.back();
    auto second = labels[labels.size() - 2];
    bool country = last.size() == 2 && std::isalpha(static_cast<unsigned char>(last[0])) &&
                   std::isalpha(static_cast<unsigned char>(last[1]));
    if (country && std::find(kSecondLevelUnits.begin(), kSecondLevelUnits.end(), second) !=
                       kSecondLevelUnits.end())
      tld_labels = 2;
  }
  std::vector<std::string> walk;
  std::string_view current = name.str();
  std::size_t remaining = labels.size();
  walk.emplace_back(current);
  while (remaining > tld_labels) {
    current.remove_prefix(current.find('.') + 1);
    --remaining;
    walk.emplace_back(current);
  }
  return walk;
}

DnsResponse query_records(const DnsQuery& q, const Backend& backend) {
  auto response = backend.query(q);
  if (response.status != Status::NoError) {
    response.authenticated = false;
    response.records.clear();
  }
  return response;
}

namespace {

DnsResponse guarded_query(const DnsQuery& q, const Backend& backend) {
  try {
    return query_records(q, backend);
  } catch (const std::exception& e) {
    DnsResponse failed;
    failed.status = Status::ServFail;
    failed.queried_name = q.query_name();
    failed.error = e.what();
    return failed;
  }
}

}  // namespace

DomainDnsBundle collect_domain_dns(const DomainName& name, const Backend& backend) {
  DomainDnsBundle bundle;
  bundle.soa = guarded_query(DnsQuery(name, RrType::SOA), backend);
  bundle.a = guarded_query(DnsQuery(name, RrType::A), backend);
  for (auto& ancestor : caa_ancestor_walk(name)) {
    auto response = guarded_query(DnsQuery(DomainName::parse(ancestor), RrType::CAA), backend);
    bundle.caa_by_ancestor.push_back({std::move(ancestor), std::move(response)});
  }
  bundle.tlsa_443 =
      guarded_query(DnsQuery(name, RrType::TLSA, std::string(kTlsaHttpsPrefix)), backend);
  bundle.contact_email_txt =
      guarded_query(DnsQuery(name, RrType::TXT, std::string(kContactEmailPrefix)), backend);
  bundle.contact_phone_txt =
      guarded_query(DnsQuery(name, RrType::TXT, std::string(kContactPhonePrefix)), backend);
  return bundle;
}

}  // namespace pkiaudit::dns
