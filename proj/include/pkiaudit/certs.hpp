#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pkiaudit/caa.hpp"
#include "pkiaudit/common.hpp"
#include "pkiaudit/throttle.hpp"

namespace pkiaudit::certs {

class CertificateParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DistinguishedName {
  std::string text;  // RFC 2253 rendering
  std::string organization;
  std::string common_name;

  friend bool operator==(const DistinguishedName&, const DistinguishedName&) = default;
};

struct Certificate {
  Bytes der;
  DistinguishedName subject;
  DistinguishedName issuer;
  std::vector<std::string> san;  // lowercase dNSName entries
  Timestamp not_before;
  Timestamp not_after;
  Bytes spki_der;
  std::string serial;  // lowercase hex of the serial number
  bool is_ca = false;
  std::vector<Bytes> embedded_scts;  // serialized SCTs from the SCT list extension
  bool is_precert = false;           // carries the CT poison extension
  std::vector<std::string> aia_hosts;

  // Throws CertificateParseError.
  static Certificate from_der(ByteView der);

  std::string fingerprint_sha256() const;
  bool valid_at(Timestamp t) const { return not_before <= t && t <= not_after; }
  bool self_issued() const { return subject == issuer; }
};

// Throws CertificateParseError on any unparseable block.
std::vector<Certificate> parse_pem_bundle(std::string_view pem);
std::string to_pem(const Certificate& cert);

// d2i followed by i2d, for encoding stability checks.
Bytes reencode_der(ByteView der);

struct CertificateChain {
  Certificate leaf;
  std::vector<Certificate> intermediates;
  Timestamp fetched_at;
  std::string sni_used;
  bool tls_errors_suppressed = true;
  std::vector<Bytes> unparseable;  // presented blobs that failed to parse

  std::size_t size() const { return 1 + intermediates.size(); }
  const Certificate& at(std::size_t i) const { return i == 0 ? leaf : intermediates.at(i - 1); }
};

enum class NameMatch { ExactSan, WildcardSan, NoMatch };

/// SAN-only matching; a wildcard covers exactly one leftmost label.
NameMatch name_matches(const Certificate& cert, std::string_view name);

class TrustStore {
 public:
  // Throws ConfigError.
  static TrustStore from_pem_text(std::string_view pem);
  static TrustStore from_pem_file(const std::filesystem::path& path);

  std::size_t size() const { return roots_.size(); }
  const std::vector<Certificate>& roots() const { return roots_; }
  struct Native;
  const Native& native() const { return *native_; }

 private:
  std::vector<Certificate> roots_;
  std::shared_ptr<Native> native_;
};

enum class ChainVerdict { Valid, Expired, Untrusted, Malformed };

struct ChainStatus {
  ChainVerdict verdict = ChainVerdict::Malformed;
  std::string detail;
  std::optional<std::string> anchor;  // subject of the root that anchored a Valid path
};

/// Builds a path from the leaf to a trusted root, checking signatures and
/// validity windows at `at`. Expired only when time is the sole failure.
ChainStatus validate_chain(const CertificateChain& chain, const TrustStore& store, Timestamp at);

struct Sct {
  std::uint8_t version = 0;
  Bytes log_id;  // 32 octets
  std::uint64_t timestamp = 0;  // ms since epoch
  Bytes extensions;
  std::uint8_t hash_algorithm = 4;       // sha256
  std::uint8_t signature_algorithm = 3;  // ecdsa
  Bytes signature;
};

std::optional<Sct> parse_sct(ByteView serialized);
Bytes serialize_sct(const Sct& sct);
// TLS-encoded SignedCertificateTimestampList -> serialized SCTs.
std::optional<std::vector<Bytes>> parse_sct_list(ByteView list);
Bytes serialize_sct_list(const std::vector<Bytes>& scts);

struct CtLog {
  Bytes log_id;
  Bytes key_der;  // SubjectPublicKeyInfo
  std::string operator_name;
  std::string description;
  std::string url;
  std::string state;
  bool rejected() const { return state == "rejected"; }
};

/// Known-logs JSON (operators -> logs -> {log_id, key, url, mmd, state}).
class LogList {
 public:
  static LogList from_json_text(std::string_view text);
  static LogList from_file(const std::filesystem::path& path);

  const CtLog* find(ByteView log_id) const;
  std::size_t size() const { return logs_.size(); }

 private:
  std::map<Bytes, CtLog> logs_;
};

struct SctVerdict {
  Bytes log_id;
  bool known_log = false;
  bool signature_ok = false;
  std::optional<std::string> log_operator;
  bool log_rejected = false;
  std::uint64_t timestamp = 0;
  std::string detail;

  bool trustworthy() const { return known_log && signature_ok && !log_rejected; }
};

/// Checks every embedded SCT of `leaf` as a precertificate entry. `issuer` is
/// the certificate that signed the leaf; without it no signature can verify.
std::vector<SctVerdict> verify_scts(const Certificate& leaf, const Certificate* issuer,
                                    const LogList& logs);

// Leaf TBSCertificate with the SCT list extension removed.
Bytes precert_tbs(const Certificate& leaf);

/// Organization of the CA that signed the leaf, plus domain hints taken from
/// the leaf's AIA URLs.
caa::CaIdentity issuer_identity(const CertificateChain& chain);
caa::CaIdentity issuer_identity(const Certificate& leaf);

// The chain element that issued the leaf, when served.
const Certificate* leaf_issuer(const CertificateChain& chain);

class ChainSource {
 public:
  virtual ~ChainSource() = default;
  // Throws TransportError when no chain could be captured.
  virtual CertificateChain fetch(const std::string& name, const std::string& ip, int port) const = 0;
};

/// PEM bundles at <dir>/<name>.pem, leaf first.
class FixtureChainSource final : public ChainSource {
 public:
  FixtureChainSource(std::filesystem::path dir, Timestamp fetched_at);
  CertificateChain fetch(const std::string& name, const std::string& ip, int port) const override;

 private:
  std::filesystem::path dir_;
  Timestamp fetched_at_;
};

/// Live capture: SNI set to the audited name, certificate validation off,
/// OpenSSL security level 0. At most one handshake per host at a time.
class TlsChainSource final : public ChainSource {
 public:
  TlsChainSource(std::shared_ptr<RateLimiter> limiter, RetryPolicy retry,
                 std::chrono::milliseconds timeout);
  CertificateChain fetch(const std::string& name, const std::string& ip, int port) const override;

 private:
  std::mutex& host_lock(const std::string& host) const;

  std::shared_ptr<RateLimiter> limiter_;
  RetryPolicy retry_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex locks_mutex_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>> host_locks_;
};

// Assembles a chain from presented DER blobs (leaf first). Throws
// CertificateParseError if the leaf itself cannot be parsed.
CertificateChain chain_from_der(const std::vector<Bytes>& blobs, std::string sni, Timestamp fetched_at);

std::string_view to_string(NameMatch m);
std::string_view to_string(ChainVerdict v);

}  // namespace pkiaudit::certs
