#include <fstream>
#include <set>
#include <sstream>

#include "pkiaudit/pipeline.hpp"

namespace pkiaudit::pipeline {

using nlohmann::json;

std::string overlap_label(bool caa, bool dnssec, bool tlsa) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  add(caa, "CAA");
  add(dnssec, "DNSSEC");
  add(tlsa, "TLSA");
  return out;
}

namespace {

void add_shares(std::map<std::string, CaStringShare>& table, const std::vector<std::string>& strings) {
  std::set<std::string> unique(strings.begin(), strings.end());
  for (const auto& s : unique) {
    auto& share = table[s];
    ++share.overall;
    if (unique.size() == 1) ++share.only;
  }
}

}  // namespace

SummaryReport aggregate(const std::vector<RecordSummary>& records, std::optional<Timestamp> at) {
  SummaryReport r;
  r.at = at;
  r.records = records.size();
  for (int mask = 1; mask < 8; ++mask) r.overlap_counts[overlap_label(mask & 1, mask & 2, mask & 4)] = 0;
  for (auto s : {caa::MatchState::NoCaa, caa::MatchState::ImplicitMatch, caa::MatchState::IssuerMatch,
                 caa::MatchState::IssuerMismatch, caa::MatchState::MalformedMismatch, caa::MatchState::EmptyMismatch})
    r.caa_state_histogram[std::string(caa::to_string(s))] = 0;
  for (int row = 1; row <= 8; ++row) r.tlsa_ct_matrix[row] = 0;

  for (const auto& rec : records) {
    if (rec.caa || rec.dnssec || rec.tlsa) ++r.overlap_counts[overlap_label(rec.caa, rec.dnssec, rec.tlsa)];
    if (rec.caa_state) ++r.caa_state_histogram[*rec.caa_state];
    add_shares(r.issue_shares, rec.issue_strings);
    add_shares(r.issuewild_shares, rec.issuewild_strings);
    for (const auto& k : rec.iodef_kinds) ++r.iodef_triage[k];
    for (const auto& k : rec.unknown_kinds) ++r.unknown_tag_triage[k];
    for (int row : rec.tlsa_ct_rows) ++r.tlsa_ct_matrix[row];
    for (const auto& [server, ct] : rec.caa_ct_pairs) ++r.caa_ct_pairs[server + "|" + ct];
    if (rec.caa && rec.served_state && rec.leaf_age_days)
      ++r.age_buckets[*rec.served_state + (*rec.leaf_age_days <= 90 ? "|<=3m" : "|>3m")];
    if (rec.chain_verdict) ++r.chain_verdicts[*rec.chain_verdict];
    for (const auto& f : rec.dane_flags) ++r.dane_flags[f];
    if (rec.partial) ++r.partial_findings[*rec.partial];
    for (const auto& c : rec.forensic_cells) ++r.tlsa_forensics[c];
    r.tlsa_caa_findings += rec.tlsa_caa_findings;
    if (rec.errors > 0) ++r.records_with_errors;
  }
  return r;
}

json to_json(const SummaryReport& s) {
  auto shares = [](const std::map<std::string, CaStringShare>& table) {
    json out = json::object();
    for (const auto& [k, v] : table) out[k] = {{"overall", v.overall}, {"only", v.only}};
    return out;
  };
  json matrix = json::object();
  for (const auto& [row, n] : s.tlsa_ct_matrix) matrix[std::to_string(row)] = {{"label", consistency::tlsa_ct_row_label(row)}, {"count", n}};
  return {{"schema", kSummarySchema},
          {"at", s.at ? json(format_rfc3339(*s.at)) : json(nullptr)},
          {"records", s.records},
          {"overlap_counts", s.overlap_counts},
          {"caa_state_histogram", s.caa_state_histogram},
          {"issue_shares", shares(s.issue_shares)},
          {"issuewild_shares", shares(s.issuewild_shares)},
          {"iodef_triage", s.iodef_triage},
          {"unknown_tag_triage", s.unknown_tag_triage},
          {"tlsa_ct_matrix", matrix},
          {"caa_ct_pairs", s.caa_ct_pairs},
          {"age_buckets", s.age_buckets},
          {"chain_verdicts", s.chain_verdicts},
          {"dane_flags", s.dane_flags},
          {"partial_findings", s.partial_findings},
          {"tlsa_forensics", s.tlsa_forensics},
          {"tlsa_caa_findings", s.tlsa_caa_findings},
          {"records_with_errors", s.records_with_errors}};
}

std::optional<Format> format_from_string(std::string_view text) {
  if (text == "jsonl") return Format::Jsonl;
  if (text == "csv") return Format::Csv;
  return std::nullopt;
}

namespace {

std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string dump(const json& j, int indent = -1) { return j.dump(indent, ' ', false, json::error_handler_t::replace); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string records_csv(const std::vector<AuditRecord>& records) {
  std::string out = "rank,name,dnssec,caa,tlsa,caa_state,chain_verdict,leaf_age_days,partial,dane_flags,errors\n";
  for (const auto& rec : records) {
    auto s = summarize(rec);
    std::string flags;
    for (const auto& f : s.dane_flags) flags += (flags.empty() ? "" : ";") + f;
    out += (rec.target.rank ? std::to_string(*rec.target.rank) : "") + "," + csv_field(s.name) + "," +
           (s.dnssec ? "1" : "0") + "," + (s.caa ? "1" : "0") + "," + (s.tlsa ? "1" : "0") + "," +
           s.caa_state.value_or("") + "," + s.chain_verdict.value_or("") + "," +
           (s.leaf_age_days ? std::to_string(*s.leaf_age_days) : "") + "," + s.partial.value_or("") + "," +
           csv_field(flags) + "," + std::to_string(s.errors) + "\n";
  }
  return out;
}

}  // namespace

std::string summary_csv(const SummaryReport& s) {
  std::string out = "table,key,value\n";
  auto rows = [&](const char* table, const auto& map) {
    for (const auto& [k, v] : map) out += std::string(table) + "," + csv_field(k) + "," + std::to_string(v) + "\n";
  };
  rows("overlap_counts", s.overlap_counts);
  rows("caa_state_histogram", s.caa_state_histogram);
  for (const auto& [k, v] : s.issue_shares) {
    out += "issue_shares_overall," + csv_field(k) + "," + std::to_string(v.overall) + "\n";
    out += "issue_shares_only," + csv_field(k) + "," + std::to_string(v.only) + "\n";
  }
  for (const auto& [k, v] : s.issuewild_shares) {
    out += "issuewild_shares_overall," + csv_field(k) + "," + std::to_string(v.overall) + "\n";
    out += "issuewild_shares_only," + csv_field(k) + "," + std::to_string(v.only) + "\n";
  }
  rows("iodef_triage", s.iodef_triage);
  rows("unknown_tag_triage", s.unknown_tag_triage);
  for (const auto& [row, n] : s.tlsa_ct_matrix)
    out += "tlsa_ct_matrix," + csv_field(consistency::tlsa_ct_row_label(row)) + "," + std::to_string(n) + "\n";
  rows("caa_ct_pairs", s.caa_ct_pairs);
  rows("age_buckets", s.age_buckets);
  rows("chain_verdicts", s.chain_verdicts);
  rows("dane_flags", s.dane_flags);
  rows("partial_findings", s.partial_findings);
  rows("tlsa_forensics", s.tlsa_forensics);
  out += "totals,records," + std::to_string(s.records) + "\n";
  out += "totals,tlsa_caa_findings," + std::to_string(s.tlsa_caa_findings) + "\n";
  out += "totals,records_with_errors," + std::to_string(s.records_with_errors) + "\n";
  return out;
}

std::string records_jsonl(const std::vector<AuditRecord>& records) {
  std::string out;
  for (const auto& r : records) out += dump(to_json(r)) + "\n";
  return out;
}

std::vector<std::filesystem::path> emit_report(const std::vector<AuditRecord>& records,
                                               const SummaryReport& summary, Format format,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& file, const std::string& content) {
    write_file(dir / file, content);
    written.push_back(dir / file);
  };
  if (format == Format::Jsonl) {
    put("records.jsonl", records_jsonl(records));
  } else {
    put("records.csv", records_csv(records));
    put("summary.csv", summary_csv(summary));
  }
  put("summary.json", dump(to_json(summary), 2) + "\n");
  return written;
}

}  // namespace pkiaudit::pipeline
