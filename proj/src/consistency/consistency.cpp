#include "pkiaudit/consistency.hpp"

#include <algorithm>
#include <cmath>

namespace pkiaudit::consistency {

CaaCtComparison compare_caa_server_vs_ct(const ServerView& server, std::vector<EntryState> ct) {
  CaaCtComparison out;
  out.server = server;
  out.ct_states = std::move(ct);
  for (const auto& e : out.ct_states) {
    if (server.name_mismatch || e.state != server.state)
      out.inconsistency_pairs.push_back({server.state, e.state, server.name_mismatch, e.entry_id});
  }
  out.consistent = out.inconsistency_pairs.empty();
  return out;
}

int classify_tlsa_ct(bool server_auth, bool ct_auth, bool same_issuer) {
  return 1 + (server_auth ? 0 : 4) + (ct_auth ? 0 : 2) + (same_issuer ? 0 : 1);
}

TlsaCtKey tlsa_ct_key(int row) {
  int bits = row - 1;
  return {(bits & 4) == 0, (bits & 2) == 0, (bits & 1) == 0};
}

std::string tlsa_ct_row_label(int row) {
  auto k = tlsa_ct_key(row);
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  return std::string("server=") + yn(k.server_authenticated) + ",ct=" + yn(k.ct_authenticated) +
         ",same_issuer=" + yn(k.same_issuer);
}

std::optional<PartialCaaFinding> partial_caa_check(const std::vector<std::string>& san,
                                                   caa::MatchState fqdn_state,
                                                   caa::MatchState wildcard_state) {
  bool has_wild = std::any_of(san.begin(), san.end(), [](const std::string& s) { return s.starts_with("*."); });
  bool has_plain = std::any_of(san.begin(), san.end(), [](const std::string& s) { return !s.starts_with("*."); });
  if (!has_wild || !has_plain) return std::nullopt;
  using caa::MatchState;
  if (fqdn_state == MatchState::IssuerMatch && caa::is_mismatch(wildcard_state))
    return PartialCaaFinding{fqdn_state, wildcard_state, PartialKind::IssueMatchesWildMismatch};
  if (wildcard_state == MatchState::IssuerMatch && caa::is_mismatch(fqdn_state))
    return PartialCaaFinding{fqdn_state, wildcard_state, PartialKind::WildMatchesIssueMismatch};
  return std::nullopt;
}

std::vector<TlsaCaaFinding> tlsa_vs_caa(const ServerView& server, const std::vector<EntryState>& referenced) {
  std::vector<TlsaCaaFinding> out;
  for (const auto& r : referenced)
    if (server.name_mismatch || r.state != server.state) out.push_back({r.entry_id, server, r.state});
  return out;
}

ExpiryBucket expiry_bucket(long days) {
  if (days < -90) return ExpiryBucket::ExpiredOver90d;
  if (days < 0) return ExpiryBucket::ExpiredWithin90d;
  if (days <= 90) return ExpiryBucket::ExpiresWithin90d;
  return ExpiryBucket::ExpiresAfter90d;
}

std::vector<ForensicFinding> tlsa_mismatch_forensics(const std::vector<ForensicInput>& records, Timestamp at) {
  std::vector<ForensicFinding> out;
  for (const auto& rec : records) {
    if (rec.certificates.empty()) {
      out.push_back({rec.record_index, ForensicKind::Unexplained, {}, {}, {}, {}});
      continue;
    }
    for (const auto& c : rec.certificates) {
      auto secs = (c.not_after - at).count();
      long days = static_cast<long>(std::floor(static_cast<double>(secs) / 86400.0));
      bool live = c.verdict == certs::ChainVerdict::Valid && c.not_after >= at;
      out.push_back({rec.record_index, live ? ForensicKind::UndeployedValid : ForensicKind::StaleRecord,
                     c.entry_id, expiry_bucket(days), days, c.verdict});
    }
  }
  return out;
}

std::string_view to_string(PartialKind k) {
  switch (k) {
    case PartialKind::IssueMatchesWildMismatch: return "IssueMatchesWildMismatch";
    case PartialKind::WildMatchesIssueMismatch: return "WildMatchesIssueMismatch";
  }
  return "?";
}

std::string_view to_string(ExpiryBucket b) {
  switch (b) {
    case ExpiryBucket::ExpiredOver90d: return "expired>90d";
    case ExpiryBucket::ExpiredWithin90d: return "expired<=90d";
    case ExpiryBucket::ExpiresWithin90d: return "expires<=90d";
    case ExpiryBucket::ExpiresAfter90d: return "expires>90d";
  }
  return "?";
}

std::string_view to_string(ForensicKind k) {
  switch (k) {
    case ForensicKind::StaleRecord: return "StaleRecord";
    case ForensicKind::UndeployedValid: return "UndeployedValid";
    case ForensicKind::Unexplained: return "Unexplained";
  }
  return "?";
}

}  // namespace pkiaudit::consistency
