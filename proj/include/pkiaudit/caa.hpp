#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pkiaudit/dnsio.hpp"

namespace pkiaudit::caa {

enum class TagKind { Issue, IssueWild, Iodef, Unknown };

// Triage of tags outside issue/issuewild/iodef.
enum class UnknownKind { UnrecognizedKnownElsewhere, Misspelling, MalformedFormat };

enum class IssueKind { Issuer, ExplicitEmpty, Malformed };

struct IssueValue {
  IssueKind kind = IssueKind::Malformed;
  std::optional<std::string> issuer_domain;  // as written
  std::vector<std::pair<std::string, std::string>> parameters;

  friend bool operator==(const IssueValue&, const IssueValue&) = default;
};

struct CaaRecord {
  std::uint8_t flags = 0;
  std::string tag;    // as received
  std::string value;  // raw octets
  TagKind tag_kind = TagKind::Unknown;
  std::optional<UnknownKind> unknown_kind;
  std::optional<IssueValue> issue;  // present for issue and issuewild

  bool critical() const { return (flags & 0x80) != 0; }

  friend bool operator==(const CaaRecord&, const CaaRecord&) = default;
};

/// Total: malformed input is captured in the returned record.
CaaRecord parse_caa_record(int flags, std::string_view tag, std::string_view value);

/// RFC 8659 issue/issuewild value grammar. Total; grammar violations give
/// IssueKind::Malformed.
IssueValue parse_issue_value(std::string_view value);

/// Accepts `flags tag "value"` or the RFC 3597 generic form `\# len hex`.
/// Returns nullopt when neither form can be decoded.
std::optional<CaaRecord> parse_caa_presentation(std::string_view data);
std::string to_presentation(const CaaRecord& record);

int tag_edit_distance(std::string_view a, std::string_view b);

enum class IodefKind { Valid, InvalidScheme, LikelyEmail, LikelyHttp, Garbage };

struct IodefVerdict {
  IodefKind kind = IodefKind::Garbage;
  std::string detail;  // scheme for Valid, reason otherwise
};

IodefVerdict validate_iodef(std::string_view value);

struct RelevantCaaSet {
  std::string source_name;
  int depth = 0;
  std::vector<CaaRecord> records;
};

/// Records of the closest ancestor (self first) with a non-empty CAA RRset.
std::optional<RelevantCaaSet> relevant_caa_set(std::span<const dns::CaaLookup> walk);

/// CAA issuer-domain string -> organization names of the CAs that accept it.
class CaMapping {
 public:
  using Identities = std::set<std::string>;

  // Throws ConfigError. Duplicate keys (also after lowercasing) are merged.
  static CaMapping from_json_text(std::string_view text);
  static CaMapping from_file(const std::filesystem::path& path);

  const Identities* lookup(std::string_view caa_string) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, Identities, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, Identities, std::less<>> entries_;
};

struct CaIdentity {
  std::string organization;
  std::vector<std::string> domain_hints;  // lowercase domains tied to the CA

  bool flagged() const { return organization.empty(); }
};

enum class NameKind { Fqdn, Wildcard };

enum class MatchState {
  NoCaa,
  ImplicitMatch,
  IssuerMatch,
  IssuerMismatch,
  MalformedMismatch,
  EmptyMismatch,
};

struct CaaMatchState {
  MatchState state = MatchState::NoCaa;
  std::optional<TagKind> deciding_tag;

  friend bool operator==(const CaaMatchState&, const CaaMatchState&) = default;
};

/// Classifies the CA that issued a certificate against the relevant CAA set.
///
/// Wildcard names are governed by issuewild records when any exist and by
/// issue records otherwise; FQDNs by issue records. A critical record with an
/// unknown tag always yields IssuerMismatch. An empty governing set is an
/// implicit match. Mismatches without any issuer entry are refined into
/// EmptyMismatch (at least one ";") or MalformedMismatch.
CaaMatchState match_caa(const CaIdentity& issuer, NameKind name_kind,
                        const std::optional<RelevantCaaSet>& relevant, const CaMapping& mapping);

// One line per record; issue, issuewild, iodef, then other tags.
std::vector<std::string> explain_caa(const RelevantCaaSet& relevant, const CaMapping& mapping);

// Bulk parsing of issue values. The serial loop is the reference the
// OpenMP kernel is tested against.
std::vector<IssueValue> parse_issue_values_serial(std::span<const std::string> values);
std::vector<IssueValue> parse_issue_values_parallel(std::span<const std::string> values,
                                                    int threads);

std::string_view to_string(TagKind kind);
std::string_view to_string(UnknownKind kind);
std::string_view to_string(IssueKind kind);
std::string_view to_string(IodefKind kind);
std::string_view to_string(MatchState state);
std::string_view to_string(NameKind kind);
std::optional<MatchState> match_state_from_string(std::string_view text);

bool is_mismatch(MatchState state);

}  // namespace pkiaudit::caa
