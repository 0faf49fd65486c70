#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pkiaudit/certs.hpp"
#include "pkiaudit/dane.hpp"
#include "pkiaudit/net.hpp"
#include "pkiaudit/throttle.hpp"

namespace pkiaudit::ct {

// The backend cannot answer this kind of lookup at all.
class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

struct CtEntry {
  certs::Certificate certificate;
  std::string entry_id;
  std::optional<Timestamp> logged_at;
  bool is_precert = false;
};

struct CtQueryResult {
  std::string name;
  std::vector<CtEntry> entries;
  bool deduplicated = false;
  std::optional<std::string> error;  // set when the lookup failed; entries are then empty
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Candidate certificates mentioning `name`. Throws BackendError/TransportError.
  virtual std::vector<CtEntry> by_name(const std::string& name) const = 0;
  // Certificates whose association data under (selector, matching) equals `data`.
  virtual std::vector<CtEntry> by_association(int selector, int matching_type, ByteView data) const = 0;
};

/// JSON array of {der_base64, logged_at, is_precert}; immutable after load.
class FixtureBackend final : public Backend {
 public:
  // Throws ConfigError.
  static FixtureBackend from_json_text(std::string_view text);
  static FixtureBackend from_file(const std::filesystem::path& path);

  std::vector<CtEntry> by_name(const std::string& name) const override;
  std::vector<CtEntry> by_association(int selector, int matching_type, ByteView data) const override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<CtEntry> entries_;
};

/// crt.sh-style HTTP interface: `?q=<name>&output=json` lists entries,
/// `?d=<id>` downloads one certificate, `?sha256=` and `?spkisha256=`
/// look up digests.
class CrtShBackend final : public Backend {
 public:
  using Transport = std::function<net::HttpResponse(const net::Url&)>;

  CrtShBackend(std::string endpoint, std::shared_ptr<RateLimiter> limiter, RetryPolicy retry,
               Transport transport = {}, std::size_t max_entries = 200);

  std::vector<CtEntry> by_name(const std::string& name) const override;
  std::vector<CtEntry> by_association(int selector, int matching_type, ByteView data) const override;

 private:
  std::string get(const std::string& query) const;
  std::vector<CtEntry> download(const std::string& listing) const;

  std::string endpoint_;
  std::shared_ptr<RateLimiter> limiter_;
  RetryPolicy retry_;
  Transport transport_;
  std::size_t max_entries_;
};

/// One entry per (issuer DN, serial); a final certificate wins over its
/// precertificate. Order of first appearance is kept.
std::vector<CtEntry> dedupe(std::vector<CtEntry> entries);

/// Certificates whose SANs cover `name` and that are valid at `at`.
CtQueryResult fetch_certs_by_name(const std::string& name, Timestamp at, const Backend& backend);

/// Certificates the record refers to, regardless of validity.
CtQueryResult fetch_certs_by_tlsa(const dane::TlsaRecord& record, const Backend& backend);

}  // namespace pkiaudit::ct
