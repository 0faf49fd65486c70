#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pkiaudit/caa.hpp"
#include "pkiaudit/certs.hpp"
#include "pkiaudit/consistency.hpp"
#include "pkiaudit/ctlog.hpp"
#include "pkiaudit/dane.hpp"
#include "pkiaudit/dnsio.hpp"
#include "pkiaudit/net.hpp"

namespace pkiaudit::pipeline {

inline constexpr std::string_view kRecordSchema = "pkiaudit.record/1";
inline constexpr std::string_view kSummarySchema = "pkiaudit.summary/1";
inline constexpr int kRedirectCap = 10;

struct InputLine {
  std::optional<int> rank;
  std::string name;
};

// Lines of `domain` or `rank,domain`; blank lines and '#' comments are
// skipped. Throws InputError naming the offending line.
std::vector<InputLine> parse_input_list(std::string_view text);

struct Target {
  std::optional<int> rank;
  std::string name;
  std::vector<std::string> resolved_ips;  // A records of final_name
  bool port80_open = false;
  bool port443_open = false;
  std::string final_name;
  int redirect_hops = 0;
  std::vector<std::string> hop_chain;  // URLs visited, first request included
};

struct DroppedTarget {
  std::string name;
  std::string reason;
};

struct PreparedTargets {
  std::vector<Target> targets;
  std::vector<DroppedTarget> dropped;
};

/// Port probing and plain HTTP fetches during target preparation.
class WebProbe {
 public:
  virtual ~WebProbe() = default;
  virtual bool port_open(const std::string& name, const std::string& ip, int port) const = 0;
  // nullopt when no HTTP response could be obtained.
  virtual std::optional<net::HttpResponse> get(const net::Url& url) const = 0;
};

/// Offline web: optional <dir>/web.json with {"ports": {name: [80, 443]},
/// "http": {url: {status, location}}}. Without a ports entry a name has 80
/// and 443 open iff <dir>/certs/<name>.pem exists; unknown URLs answer 200.
class FixtureWebProbe final : public WebProbe {
 public:
  static FixtureWebProbe from_dir(const std::filesystem::path& dir);

  bool port_open(const std::string& name, const std::string& ip, int port) const override;
  std::optional<net::HttpResponse> get(const net::Url& url) const override;

 private:
  std::filesystem::path certs_dir_;
  std::map<std::string, std::vector<int>> ports_;
  std::map<std::string, net::HttpResponse> http_;
};

class LiveWebProbe final : public WebProbe {
 public:
  LiveWebProbe(std::shared_ptr<RateLimiter> limiter, std::chrono::milliseconds timeout);

  bool port_open(const std::string& name, const std::string& ip, int port) const override;
  std::optional<net::HttpResponse> get(const net::Url& url) const override;

 private:
  std::shared_ptr<RateLimiter> limiter_;
  std::chrono::milliseconds timeout_;
};

/// Resolves, probes ports, follows 3xx redirects (at most kRedirectCap hops,
/// loops stop at the first revisited URL) and keeps each final name once.
PreparedTargets prepare_targets(const std::vector<InputLine>& input, const dns::Backend& dns,
                                const WebProbe& web);

enum class Stage { Dns, Tls, Validate, Ct, Consistency };

struct StageError {
  Stage stage;
  std::string kind;  // exception category, e.g. "TransportError"
  std::string message;
};

struct AuditContext {
  Timestamp at;
  const caa::CaMapping* mapping = nullptr;
  const certs::TrustStore* trust = nullptr;
  const certs::LogList* logs = nullptr;
  const dns::Backend* dns = nullptr;
  const certs::ChainSource* tls = nullptr;
  const ct::Backend* ct = nullptr;  // null skips the CT stage
};

struct IodefResult {
  std::string value;
  caa::IodefVerdict verdict;
};

struct CtCaaState {
  std::string entry_id;
  caa::NameKind name_kind;
  caa::CaaMatchState state;
  std::string issuer_organization;
};

struct TlsaCtRowEntry {
  std::string entry_id;
  int row;
};

struct AuditRecord {
  Target target;
  Timestamp at;
  dns::DomainDnsBundle dns;
  std::optional<caa::RelevantCaaSet> relevant;
  std::vector<IodefResult> iodef;

  std::optional<certs::CertificateChain> chain;
  std::optional<certs::ChainStatus> chain_status;
  std::optional<certs::NameMatch> name_match;
  std::optional<caa::CaIdentity> issuer;
  std::vector<certs::SctVerdict> scts;
  std::optional<caa::CaaMatchState> caa_state;       // name kind of the covering SAN
  std::optional<caa::CaaMatchState> caa_fqdn;        // as an FQDN certificate
  std::optional<caa::CaaMatchState> caa_wildcard;    // when the leaf lists a wildcard

  std::optional<dane::DaneAssessment> dane;

  std::optional<ct::CtQueryResult> ct;
  std::vector<CtCaaState> ct_caa;
  std::optional<consistency::CaaCtComparison> caa_vs_ct;
  std::optional<consistency::PartialCaaFinding> partial;
  std::vector<TlsaCtRowEntry> tlsa_ct;
  std::vector<consistency::ForensicFinding> forensics;
  std::vector<consistency::TlsaCaaFinding> tlsa_caa;

  std::vector<StageError> errors;

  bool has_caa() const { return relevant.has_value(); }
  bool has_tlsa() const;
  bool dnssec() const;
};

/// Stages run DNS, TLS, validation, CT (only with CAA or TLSA present) and
/// consistency. Never throws; failures are recorded per stage.
AuditRecord audit_domain(const Target& target, const AuditContext& ctx);

std::vector<AuditRecord> audit_all_serial(const std::vector<Target>& targets, const AuditContext& ctx);
std::vector<AuditRecord> audit_all_parallel(const std::vector<Target>& targets, const AuditContext& ctx,
                                            int threads);

nlohmann::json to_json(const AuditRecord& record);

/// The fields aggregation needs, recoverable from a JSONL record.
struct RecordSummary {
  std::string name;
  bool dnssec = false;
  bool caa = false;
  bool tlsa = false;
  std::optional<std::string> caa_state;  // served state, else first CT state
  std::optional<std::string> served_state;
  std::optional<long> leaf_age_days;
  std::optional<std::string> chain_verdict;
  std::vector<std::string> issue_strings;
  std::vector<std::string> issuewild_strings;
  std::vector<std::string> iodef_kinds;
  std::vector<std::string> unknown_kinds;
  std::vector<std::string> dane_flags;
  std::vector<int> tlsa_ct_rows;
  std::vector<std::pair<std::string, std::string>> caa_ct_pairs;
  std::optional<std::string> partial;
  std::vector<std::string> forensic_cells;  // "<kind>|<bucket>"
  std::size_t tlsa_caa_findings = 0;
  std::size_t errors = 0;
};

// Throws InputError when required fields are missing.
RecordSummary summary_from_json(const nlohmann::json& record);
RecordSummary summarize(const AuditRecord& record);

struct CaStringShare {
  std::size_t overall = 0;  // domains listing the string
  std::size_t only = 0;     // domains listing nothing else
};

struct SummaryReport {
  std::optional<Timestamp> at;
  std::size_t records = 0;
  std::map<std::string, std::size_t> overlap_counts;  // 7 non-empty subsets of {CAA, DNSSEC, TLSA}
  std::map<std::string, std::size_t> caa_state_histogram;
  std::map<std::string, CaStringShare> issue_shares;
  std::map<std::string, CaStringShare> issuewild_shares;
  std::map<std::string, std::size_t> iodef_triage;
  std::map<std::string, std::size_t> unknown_tag_triage;
  std::map<int, std::size_t> tlsa_ct_matrix;  // rows 1..8
  std::map<std::string, std::size_t> caa_ct_pairs;  // "<server>|<ct>"
  std::map<std::string, std::size_t> age_buckets;   // "<state>|<=3m" or "<state>|>3m"
  std::map<std::string, std::size_t> chain_verdicts;
  std::map<std::string, std::size_t> dane_flags;
  std::map<std::string, std::size_t> partial_findings;
  std::map<std::string, std::size_t> tlsa_forensics;
  std::size_t tlsa_caa_findings = 0;
  std::size_t records_with_errors = 0;
};

// Subset label for the overlap table, e.g. "CAA+DNSSEC".
std::string overlap_label(bool caa, bool dnssec, bool tlsa);

SummaryReport aggregate(const std::vector<RecordSummary>& records, std::optional<Timestamp> at = {});
nlohmann::json to_json(const SummaryReport& summary);

enum class Format { Jsonl, Csv };

std::optional<Format> format_from_string(std::string_view text);

// One "table,key,value" row per histogram cell.
std::string summary_csv(const SummaryReport& summary);
std::string records_jsonl(const std::vector<AuditRecord>& records);

/// Writes records.jsonl or records.csv, plus summary.json (and summary.csv
/// for CSV output) into `dir`. Throws std::runtime_error on I/O failure.
std::vector<std::filesystem::path> emit_report(const std::vector<AuditRecord>& records,
                                               const SummaryReport& summary, Format format,
                                               const std::filesystem::path& dir);

/// Exit status 2 signal: malformed/empty CAA mismatches or partial matches.
bool audit_failure(const RecordSummary& record);

std::string_view to_string(Stage stage);

}  // namespace pkiaudit::pipeline

namespace pkiaudit::pipeline {

/// Where backends and reference data come from. With `fixtures` set every
/// backend is offline: dns.json, certs/, ct.json, web.json, and optionally
/// trust.pem, log_list.json, ca_mapping.json and meta.json ({"at": ...}).
struct EnvironmentOptions {
  std::optional<std::filesystem::path> fixtures;
  std::string doh_url = "https://dns.google/resolve";
  std::string ct_url = "https://crt.sh/";
  std::optional<std::filesystem::path> trust_store;
  std::optional<std::filesystem::path> log_list;
  std::optional<std::filesystem::path> ca_mapping;
  double rate_limit = 10.0;  // queries per second per backend; <= 0 disables
  std::optional<Timestamp> at;
  std::chrono::milliseconds timeout{5000};
};

struct Environment {
  Timestamp at;
  caa::CaMapping mapping;
  certs::TrustStore trust;
  certs::LogList logs;
  std::unique_ptr<dns::Backend> dns;
  std::unique_ptr<certs::ChainSource> tls;
  std::unique_ptr<ct::Backend> ct;
  std::unique_ptr<WebProbe> web;
  bool offline = false;

  AuditContext context() const;
};

// Throws ConfigError.
Environment make_environment(const EnvironmentOptions& options);

// Directory holding the shipped CA mapping and root bundle.
std::filesystem::path default_data_dir();

}  // namespace pkiaudit::pipeline
