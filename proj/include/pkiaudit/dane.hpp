#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pkiaudit/certs.hpp"
#include "pkiaudit/common.hpp"

namespace pkiaudit::dane {

enum class Usage { PkixTa = 0, PkixEe = 1, DaneTa = 2, DaneEe = 3 };

struct TlsaRecord {
  int usage = -1;
  int selector = -1;
  int matching_type = -1;
  Bytes data;
  std::string raw;                    // payload as received
  bool conformant = false;
  std::vector<std::string> problems;  // empty iff conformant

  bool end_entity() const { return usage == 1 || usage == 3; }
  bool trust_anchor() const { return usage == 0 || usage == 2; }
  bool pkix() const { return usage == 0 || usage == 1; }

  friend bool operator==(const TlsaRecord&, const TlsaRecord&) = default;
};

/// `usage selector matching-type hexdata` or the generic `\# len hex` form.
/// Undecodable payloads yield a non-conformant placeholder.
TlsaRecord parse_tlsa(std::string_view payload);

// Builds a record whose data is derived from `cert`; used for fixtures and tests.
TlsaRecord make_tlsa(int usage, int selector, int matching_type, const certs::Certificate& cert);

std::string to_presentation(const TlsaRecord& record);

// Association data of `cert` under the record's selector and matching type.
Bytes association_data(int selector, int matching_type, const certs::Certificate& cert);

// Whether `cert` is the object the record points to, ignoring usage.
bool tlsa_references(const TlsaRecord& record, const certs::Certificate& cert);

/// Index of the first chain element the record matches. Usages 1 and 3 look
/// only at the leaf, usages 0 and 2 only at the other chain elements.
std::optional<std::size_t> tlsa_match(const TlsaRecord& record, const certs::CertificateChain& chain);

enum class ConstraintClass { None, EndEntityOnly, TrustAnchorOnly, Both };

struct Match {
  std::size_t record;
  std::size_t chain_index;

  friend bool operator==(const Match&, const Match&) = default;
};

inline constexpr std::string_view kFlagNoDnssec = "TLSA without DNSSEC";
inline constexpr std::string_view kFlagInvalidCert = "matching TLSA with invalid certificate";

struct DaneAssessment {
  std::vector<TlsaRecord> records;
  std::optional<Match> matched;
  std::vector<Match> all_matches;
  ConstraintClass constraint_class = ConstraintClass::None;
  bool dnssec_secure = false;
  bool requires_webpki = false;
  // Some match holds, and PKIX usages also have a valid chain.
  bool authenticated = false;
  std::vector<std::string> flags;

  bool has_flag(std::string_view flag) const;
};

ConstraintClass constraint_class_of(const std::vector<TlsaRecord>& records);

/// Without a chain the assessment only carries conformance and DNSSEC status.
DaneAssessment evaluate_dane(std::vector<TlsaRecord> records, const certs::CertificateChain* chain,
                             bool dnssec_secure, const certs::ChainStatus& chain_status);

std::string_view to_string(ConstraintClass c);

}  // namespace pkiaudit::dane
