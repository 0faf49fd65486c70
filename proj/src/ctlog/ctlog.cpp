#include "pkiaudit/ctlog.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pkiaudit/crypto.hpp"

namespace pkiaudit::ct {

using nlohmann::json;

namespace {

std::string fixture_id(const certs::Certificate& c) { return "sha256:" + c.fingerprint_sha256().substr(0, 16); }

std::optional<Timestamp> lenient_time(const json& value) {
  if (!value.is_string()) return std::nullopt;
  auto text = value.get<std::string>();
  if (text.empty()) return std::nullopt;
  // crt.sh omits the zone designator; its timestamps are UTC.
  if (text.back() != 'Z' && text.find('+', 10) == std::string::npos) text += 'Z';
  try {
    return parse_rfc3339(text);
  } catch (const InputError&) {
    return std::nullopt;
  }
}

}  // namespace

FixtureBackend FixtureBackend::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("CT fixture is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("CT fixture must be a JSON array");
  FixtureBackend backend;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("der_base64") || !item["der_base64"].is_string())
      throw ConfigError("CT fixture entry lacks der_base64");
    CtEntry e;
    try {
      e.certificate = certs::Certificate::from_der(base64_decode(item["der_base64"].get<std::string>()));
    } catch (const certs::CertificateParseError& err) {
      throw ConfigError(std::string("CT fixture certificate does not parse: ") + err.what());
    }
    if (item.contains("logged_at") && !item["logged_at"].is_null()) {
      try {
        e.logged_at = parse_rfc3339(item["logged_at"].get<std::string>());
      } catch (const std::exception& err) {
        throw ConfigError(std::string("CT fixture logged_at: ") + err.what());
      }
    }
    e.is_precert = item.value("is_precert", e.certificate.is_precert);
    e.entry_id = fixture_id(e.certificate);
    backend.entries_.push_back(std::move(e));
  }
  return backend;
}

FixtureBackend FixtureBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CT fixture " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::vector<CtEntry> FixtureBackend::by_name(const std::string& name) const {
  std::vector<CtEntry> out;
  for (const auto& e : entries_)
    if (certs::name_matches(e.certificate, name) != certs::NameMatch::NoMatch) out.push_back(e);
  return out;
}

std::vector<CtEntry> FixtureBackend::by_association(int selector, int matching_type, ByteView data) const {
  std::vector<CtEntry> out;
  Bytes wanted(data.begin(), data.end());
  for (const auto& e : entries_)
    if (dane::association_data(selector, matching_type, e.certificate) == wanted) out.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------

CrtShBackend::CrtShBackend(std::string endpoint, std::shared_ptr<RateLimiter> limiter, RetryPolicy retry,
                           Transport transport, std::size_t max_entries)
    : endpoint_(std::move(endpoint)),
      limiter_(std::move(limiter)),
      retry_(std::move(retry)),
      transport_(std::move(transport)),
      max_entries_(max_entries) {
  if (!transport_) transport_ = [](const net::Url& url) { return net::http_get(url); };
}

std::string CrtShBackend::get(const std::string& query) const {
  auto url = net::parse_url(endpoint_);
  url.path_and_query += (url.path_and_query.find('?') == std::string::npos ? "?" : "&") + query;
  std::string last_error;
  for (int attempt = 0; attempt < retry_.attempts(); ++attempt) {
    if (attempt > 0) retry_.wait_before_retry(attempt - 1);
    if (limiter_) limiter_->acquire();
    try {
      auto http = transport_(url);
      if (http.status >= 500 || http.status == 429) {
        last_error = "HTTP " + std::to_string(http.status);
        continue;
      }
      if (http.status != 200) throw BackendError("CT backend HTTP status " + std::to_string(http.status));
      return http.body;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("CT backend unreachable: " + last_error);
}

std::vector<CtEntry> CrtShBackend::download(const std::string& listing) const {
  json doc;
  try {
    doc = json::parse(listing);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("CT listing is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw BackendError("CT listing is not an array");

  // Several listing rows may point at one certificate (one per matching identity).
  std::map<std::int64_t, std::optional<Timestamp>> ids;
  for (const auto& row : doc) {
    if (!row.is_object() || !row.contains("id") || !row["id"].is_number_integer())
      throw BackendError("CT listing row without integer id");
    ids.emplace(row["id"].get<std::int64_t>(), lenient_time(row.value("entry_timestamp", json())));
  }
  if (ids.size() > max_entries_)
    throw BackendError("CT listing has " + std::to_string(ids.size()) + " entries, above the limit of " +
                       std::to_string(max_entries_));

  std::vector<CtEntry> out;
  for (const auto& [id, logged] : ids) {
    auto pem = get("d=" + std::to_string(id));
    std::vector<certs::Certificate> parsed;
    try {
      parsed = certs::parse_pem_bundle(pem);
    } catch (const certs::CertificateParseError& e) {
      throw BackendError("CT entry " + std::to_string(id) + " does not parse: " + e.what());
    }
    if (parsed.size() != 1) throw BackendError("CT entry " + std::to_string(id) + " is not one certificate");
    CtEntry e;
    e.certificate = std::move(parsed.front());
    e.entry_id = "crtsh:" + std::to_string(id);
    e.logged_at = logged;
    e.is_precert = e.certificate.is_precert;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CtEntry> CrtShBackend::by_name(const std::string& name) const {
  return download(get("q=" + net::url_encode(name) + "&output=json&exclude=expired"));
}

std::vector<CtEntry> CrtShBackend::by_association(int selector, int matching_type, ByteView data) const {
  // Exact-octet references are reduced to their SHA-256 digest first.
  Bytes digest;
  if (matching_type == 0) digest = sha256(data);
  else if (matching_type == 1) digest.assign(data.begin(), data.end());
  else throw CapabilityError("CT backend cannot search by SHA-512 digest");
  std::string key = selector == 1 ? "spkisha256" : "sha256";
  return download(get(key + "=" + hex_encode(digest) + "&output=json"));
}

// ---------------------------------------------------------------------------

std::vector<CtEntry> dedupe(std::vector<CtEntry> entries) {
  std::vector<CtEntry> out;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  for (auto& e : entries) {
    auto key = std::make_pair(e.certificate.issuer.text, e.certificate.serial);
    auto [it, fresh] = seen.emplace(key, out.size());
    if (fresh) {
      out.push_back(std::move(e));
    } else if (out[it->second].is_precert && !e.is_precert) {
      out[it->second] = std::move(e);
    }
  }
  return out;
}

CtQueryResult fetch_certs_by_name(const std::string& name, Timestamp at, const Backend& backend) {
  CtQueryResult result;
  result.name = name;
  std::vector<CtEntry> candidates;
  try {
    candidates = backend.by_name(name);
  } catch (const std::exception& e) {
    result.error = e.what();
    return result;
  }
  std::vector<CtEntry> kept;
  for (auto& e : candidates)
    if (certs::name_matches(e.certificate, name) != certs::NameMatch::NoMatch && e.certificate.valid_at(at))
      kept.push_back(std::move(e));
  result.entries = dedupe(std::move(kept));
  result.deduplicated = true;
  return result;
}

CtQueryResult fetch_certs_by_tlsa(const dane::TlsaRecord& record, const Backend& backend) {
  CtQueryResult result;
  result.name = dane::to_presentation(record);
  if (!record.conformant) {
    result.error = "record is not conformant";
    return result;
  }
  std::vector<CtEntry> candidates;
  try {
    candidates = backend.by_association(record.selector, record.matching_type, record.data);
  } catch (const std::exception& e) {
    result.error = e.what();
    return result;
  }
  std::vector<CtEntry> kept;
  for (auto& e : candidates)
    if (dane::tlsa_references(record, e.certificate)) kept.push_back(std::move(e));
  result.entries = dedupe(std::move(kept));
  result.deduplicated = true;
  return result;
}

}  // namespace pkiaudit::ct
