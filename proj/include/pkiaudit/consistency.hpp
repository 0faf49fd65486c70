#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pkiaudit/caa.hpp"
#include "pkiaudit/certs.hpp"

namespace pkiaudit::consistency {

/// What the web server presented, as seen by the CAA matcher.
struct ServerView {
  caa::MatchState state = caa::MatchState::NoCaa;
  bool name_mismatch = false;  // served leaf does not cover the audited name
};

struct EntryState {
  std::string entry_id;
  caa::MatchState state = caa::MatchState::NoCaa;
};

struct CaaPair {
  caa::MatchState server;
  caa::MatchState ct;
  bool server_name_mismatch = false;
  std::string entry_id;

  friend bool operator==(const CaaPair&, const CaaPair&) = default;
};

struct CaaCtComparison {
  ServerView server;
  std::vector<EntryState> ct_states;
  bool consistent = true;
  std::vector<CaaPair> inconsistency_pairs;
};

/// A CT entry is inconsistent when its state differs from the server's, or
/// when the server's own certificate does not cover the name at all.
CaaCtComparison compare_caa_server_vs_ct(const ServerView& server, std::vector<EntryState> ct);

// Ordered as the rows of the TLSA/CT authentication table.
struct TlsaCtKey {
  bool server_authenticated = false;
  bool ct_authenticated = false;
  bool same_issuer = false;

  friend auto operator<=>(const TlsaCtKey&, const TlsaCtKey&) = default;
};

// Row number 1..8: (T,T,T) is row 1, (F,F,F) row 8.
int classify_tlsa_ct(bool server_auth, bool ct_auth, bool same_issuer);
TlsaCtKey tlsa_ct_key(int row);

enum class PartialKind { IssueMatchesWildMismatch, WildMatchesIssueMismatch };

struct PartialCaaFinding {
  caa::MatchState fqdn_state;
  caa::MatchState wildcard_state;
  PartialKind kind;
};

/// Only for certificates listing both a plain name and a wildcard. One state
/// must be IssuerMatch and the other a mismatch.
std::optional<PartialCaaFinding> partial_caa_check(const std::vector<std::string>& san,
                                                   caa::MatchState fqdn_state,
                                                   caa::MatchState wildcard_state);

struct TlsaCaaFinding {
  std::string entry_id;
  ServerView server;
  caa::MatchState referenced;
};

std::vector<TlsaCaaFinding> tlsa_vs_caa(const ServerView& server, const std::vector<EntryState>& referenced);

enum class ExpiryBucket { ExpiredOver90d, ExpiredWithin90d, ExpiresWithin90d, ExpiresAfter90d };
enum class ForensicKind { StaleRecord, UndeployedValid, Unexplained };

/// A CT certificate referenced by a TLSA record that the server did not match.
struct ReferencedCert {
  std::string entry_id;
  Timestamp not_after;
  certs::ChainVerdict verdict = certs::ChainVerdict::Untrusted;
};

struct ForensicInput {
  std::size_t record_index = 0;
  std::vector<ReferencedCert> certificates;
};

struct ForensicFinding {
  std::size_t record_index = 0;
  ForensicKind kind = ForensicKind::Unexplained;
  std::optional<std::string> entry_id;
  std::optional<ExpiryBucket> bucket;
  std::optional<long> days_to_expiry;  // not_after - at, in whole days
  std::optional<certs::ChainVerdict> verdict;
};

ExpiryBucket expiry_bucket(long days_to_expiry);

/// One finding per referenced certificate, or one Unexplained finding for a
/// record that references nothing found in CT.
std::vector<ForensicFinding> tlsa_mismatch_forensics(const std::vector<ForensicInput>& records, Timestamp at);

std::string_view to_string(PartialKind k);
std::string_view to_string(ExpiryBucket b);
std::string_view to_string(ForensicKind k);
std::string tlsa_ct_row_label(int row);

}  // namespace pkiaudit::consistency
