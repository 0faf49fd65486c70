#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pkiaudit/certs.hpp"
#include "pkiaudit/common.hpp"

struct evp_pkey_st;

namespace pkiaudit::testpki {

/// Private key with its DER SubjectPublicKeyInfo.
class Key {
 public:
  // Ed25519 key whose 32-byte seed is derived from `label`.
  static Key ed25519(std::string_view label);
  // P-256 key whose scalar is derived from `label`.
  static Key p256(std::string_view label);

  evp_pkey_st* get() const { return pkey_.get(); }
  const Bytes& spki() const { return spki_; }
  bool is_ed25519() const { return ed25519_; }

 private:
  std::shared_ptr<evp_pkey_st> pkey_;
  Bytes spki_;
  bool ed25519_ = false;
};

struct CertSpec {
  std::string common_name;
  std::string organization;
  std::vector<std::string> san;
  Timestamp not_before;
  Timestamp not_after;
  std::string serial_hex = "01";
  bool is_ca = false;
  std::vector<std::string> ca_issuer_urls;  // AIA caIssuers
  bool poison = false;                       // CT precertificate marker
};

struct Issuer {
  const Bytes* der = nullptr;  // null: self-signed with `key`
  const Key* key = nullptr;
};

// DER of a certificate for `subject_key`, signed by `issuer`.
Bytes make_cert(const CertSpec& spec, const Key& subject_key, Issuer issuer);

// Same as make_cert, then embeds `scts` as an SCT list extension and re-signs.
Bytes make_cert_with_scts(const CertSpec& spec, const Key& subject_key, Issuer issuer,
                          const std::vector<Bytes>& scts);

// TBSCertificate DER of make_cert(spec, ...) before any SCT extension is added.
Bytes tbs_without_scts(const CertSpec& spec, const Key& subject_key, Issuer issuer);

/// Independent RFC 6962 precert SCT construction: builds the
/// digitally-signed structure byte by byte and signs it with `log_key`.
Bytes sign_precert_sct(const Key& log_key, std::uint64_t timestamp_ms, const Bytes& issuer_spki,
                       const Bytes& tbs, const Bytes& extensions = {});

// SCTs for a leaf built from `spec`, signed by each log, then the final cert.
Bytes make_leaf_with_logged_scts(const CertSpec& spec, const Key& subject_key, Issuer issuer,
                                 const Bytes& issuer_spki, const std::vector<const Key*>& logs,
                                 std::uint64_t timestamp_ms);

std::string pem(const Bytes& der);

// Log list JSON object for a single log.
struct LogInfo {
  const Key* key;
  std::string description;
  std::string operator_name;
  std::string state = "usable";
};
std::string log_list_json(const std::vector<LogInfo>& logs);

}  // namespace pkiaudit::testpki
