// pkiaudit: CAA/TLSA/DNSSEC/X.509/CT consistency auditor.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pkiaudit/pipeline.hpp"

namespace {

using namespace pkiaudit;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAuditFailure = 2;

struct Flags {
  std::string fixtures;
  std::string doh_url = "https://dns.google/resolve";
  std::string ct_url = "https://crt.sh/";
  std::string trust_store;
  std::string log_list;
  std::string ca_mapping;
  int concurrency = 16;
  double rate_limit = 10.0;
  std::string at;
  std::string output;
  std::string format = "jsonl";
};

pipeline::Environment environment(const Flags& f) {
  pipeline::EnvironmentOptions o;
  if (!f.fixtures.empty()) o.fixtures = f.fixtures;
  o.doh_url = f.doh_url;
  o.ct_url = f.ct_url;
  if (!f.trust_store.empty()) o.trust_store = f.trust_store;
  if (!f.log_list.empty()) o.log_list = f.log_list;
  if (!f.ca_mapping.empty()) o.ca_mapping = f.ca_mapping;
  o.rate_limit = f.rate_limit;
  if (!f.at.empty()) {
    try {
      o.at = parse_rfc3339(f.at);
    } catch (const InputError& e) {
      throw ConfigError(std::string("--at: ") + e.what());
    }
  }
  return pipeline::make_environment(o);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string dump(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace); }

// ---------------------------------------------------------------------------

int run_audit(const Flags& f, const std::string& input) {
  auto env = environment(f);
  auto format = pipeline::format_from_string(f.format);
  if (!format) throw ConfigError("--format must be jsonl or csv");
  auto lines = pipeline::parse_input_list(read_text(input));
  auto prepared = pipeline::prepare_targets(lines, *env.dns, *env.web);
  for (const auto& d : prepared.dropped) std::cerr << "dropped " << d.name << ": " << d.reason << "\n";

  auto records = pipeline::audit_all_parallel(prepared.targets, env.context(), f.concurrency);
  std::vector<pipeline::RecordSummary> summaries;
  bool failure = false;
  for (const auto& r : records) {
    summaries.push_back(pipeline::summarize(r));
    failure = failure || pipeline::audit_failure(summaries.back());
  }
  auto summary = pipeline::aggregate(summaries, env.at);

  if (f.output.empty()) {
    if (*format == pipeline::Format::Jsonl) std::cout << pipeline::records_jsonl(records);
    else std::cout << pipeline::summary_csv(summary);
  } else {
    for (const auto& p : pipeline::emit_report(records, summary, *format, f.output)) std::cerr << "wrote " << p.string() << "\n";
  }
  std::cerr << records.size() << " audited, " << prepared.dropped.size() << " dropped, "
            << summary.records_with_errors << " with errors\n";
  return failure ? kExitAuditFailure : kExitOk;
}

// Zone-file lines: `owner [ttl] [class] CAA flags tag value`.
std::map<std::string, std::vector<std::string>> read_zone(const std::string& text) {
  std::map<std::string, std::vector<std::string>> out;
  for (auto raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty() || line.front() == ';' || line.front() == '$') continue;
    std::istringstream in{std::string(line)};
    std::string owner, tok;
    in >> owner;
    bool found = false;
    while (in >> tok) {
      if (iequals(tok, "CAA")) {
        found = true;
        break;
      }
    }
    if (!found) continue;
    std::string rest;
    std::getline(in, rest);
    if (!owner.empty() && owner.back() == '.') owner.pop_back();
    out[to_lower(owner)].push_back(std::string(trim(rest)));
  }
  return out;
}

void print_caa_set(const caa::RelevantCaaSet& set, const caa::CaMapping& mapping) {
  std::cout << "relevant set: " << set.source_name << " (depth " << set.depth << ")\n";
  for (const auto& r : set.records) {
    std::cout << "  " << caa::to_presentation(r) << "  [" << caa::to_string(r.tag_kind);
    if (r.unknown_kind) std::cout << ", " << caa::to_string(*r.unknown_kind);
    if (r.issue) std::cout << ", " << caa::to_string(r.issue->kind);
    if (r.tag_kind == caa::TagKind::Iodef) {
      auto v = caa::validate_iodef(r.value);
      std::cout << ", iodef " << caa::to_string(v.kind) << (v.detail.empty() ? "" : " (" + v.detail + ")");
    }
    std::cout << "]\n";
  }
  std::cout << "effect:\n";
  for (const auto& line : caa::explain_caa(set, mapping)) std::cout << "  " << line << "\n";
}

int run_caa_check(const Flags& f, const std::string& target, const std::string& issuer_org, bool wildcard) {
  auto env = environment(f);
  bool bad = false;
  auto classify = [&](const std::optional<caa::RelevantCaaSet>& set, const caa::CaIdentity& who) {
    auto s = caa::match_caa(who, wildcard ? caa::NameKind::Wildcard : caa::NameKind::Fqdn, set, env.mapping);
    std::cout << "issuer \"" << who.organization << "\": " << caa::to_string(s.state);
    if (s.deciding_tag) std::cout << " (decided by " << caa::to_string(*s.deciding_tag) << ")";
    std::cout << "\n";
    bad = bad || s.state == caa::MatchState::MalformedMismatch || s.state == caa::MatchState::EmptyMismatch;
  };

  if (std::filesystem::is_regular_file(target)) {
    for (const auto& [owner, values] : read_zone(read_text(target))) {
      caa::RelevantCaaSet set{owner, 0, {}};
      for (const auto& v : values) {
        auto parsed = caa::parse_caa_presentation(v);
        if (parsed) set.records.push_back(*parsed);
        else std::cout << owner << ": unparseable CAA data: " << v << "\n";
      }
      if (set.records.empty()) continue;
      std::cout << "== " << owner << "\n";
      print_caa_set(set, env.mapping);
      if (!issuer_org.empty()) classify(set, caa::CaIdentity{issuer_org, {}});
    }
    return bad ? kExitAuditFailure : kExitOk;
  }

  auto name = dns::DomainName::parse(target);
  std::vector<dns::CaaLookup> walk;
  for (const auto& n : dns::caa_ancestor_walk(name))
    walk.push_back({n, dns::query_records(dns::DnsQuery(dns::DomainName::parse(n), dns::RrType::CAA), *env.dns)});
  for (const auto& l : walk)
    std::cout << "CAA " << l.name << ": " << dns::to_string(l.response.status) << ", " << l.response.records.size()
              << " record(s)" << (l.response.authenticated ? ", DNSSEC authenticated" : "") << "\n";
  auto set = caa::relevant_caa_set(walk);
  if (set) print_caa_set(*set, env.mapping);
  else std::cout << "no relevant CAA set\n";

  if (!issuer_org.empty()) {
    classify(set, caa::CaIdentity{issuer_org, {}});
  } else {
    auto a = dns::query_records(dns::DnsQuery(name, dns::RrType::A), *env.dns);
    if (!a.records.empty()) {
      try {
        auto chain = env.tls->fetch(name.str(), a.records.front().data, 443);
        classify(set, certs::issuer_identity(chain));
      } catch (const TransportError& e) {
        std::cout << "no served certificate: " << e.what() << "\n";
      }
    }
  }
  return bad ? kExitAuditFailure : kExitOk;
}

int run_dane_check(const Flags& f, const std::string& target) {
  auto env = environment(f);
  auto name = dns::DomainName::parse(target);
  auto tlsa = dns::query_records(dns::DnsQuery(name, dns::RrType::TLSA, std::string(dns::kTlsaHttpsPrefix)), *env.dns);
  std::cout << "TLSA " << tlsa.queried_name << ": " << dns::to_string(tlsa.status) << ", " << tlsa.records.size()
            << " record(s), DNSSEC " << (tlsa.authenticated ? "secure" : "insecure") << "\n";
  if (tlsa.records.empty()) return kExitOk;

  std::optional<certs::CertificateChain> chain;
  certs::ChainStatus status;
  auto a = dns::query_records(dns::DnsQuery(name, dns::RrType::A), *env.dns);
  if (!a.records.empty()) {
    try {
      chain = env.tls->fetch(name.str(), a.records.front().data, 443);
      status = certs::validate_chain(*chain, env.trust, env.at);
      std::cout << "served chain: " << chain->size() << " certificate(s), " << certs::to_string(status.verdict)
                << " (" << status.detail << ")\n";
    } catch (const TransportError& e) {
      std::cout << "no served chain: " << e.what() << "\n";
    }
  }
  std::vector<dane::TlsaRecord> records;
  for (const auto& r : tlsa.records) records.push_back(dane::parse_tlsa(r.data));
  auto assessment = dane::evaluate_dane(records, chain ? &*chain : nullptr, tlsa.authenticated, status);
  for (std::size_t i = 0; i < assessment.records.size(); ++i) {
    const auto& r = assessment.records[i];
    std::cout << "  [" << i << "] " << r.raw << (r.conformant ? "" : "  non-conformant");
    for (const auto& p : r.problems) std::cout << "; " << p;
    for (const auto& m : assessment.all_matches)
      if (m.record == i) std::cout << "  matches chain[" << m.chain_index << "]";
    std::cout << "\n";
  }
  std::cout << "constraints: " << dane::to_string(assessment.constraint_class)
            << ", authenticated: " << (assessment.authenticated ? "yes" : "no")
            << ", requires Web PKI: " << (assessment.requires_webpki ? "yes" : "no") << "\n";
  for (const auto& flag : assessment.flags) std::cout << "flag: " << flag << "\n";
  return kExitOk;
}

int run_ct_fetch(const Flags& f, const std::string& target) {
  auto env = environment(f);
  if (!env.ct) throw ConfigError("no CT backend configured (fixtures lack ct.json)");
  auto name = dns::DomainName::parse(target);
  auto result = ct::fetch_certs_by_name(name.str(), env.at, *env.ct);
  if (result.error) {
    std::cerr << "CT query failed: " << *result.error << "\n";
    return kExitConfig;
  }
  json out = json::array();
  for (const auto& e : result.entries) {
    const auto& c = e.certificate;
    out.push_back({{"entry_id", e.entry_id},
                   {"is_precert", e.is_precert},
                   {"logged_at", e.logged_at ? json(format_rfc3339(*e.logged_at)) : json(nullptr)},
                   {"issuer", c.issuer.text},
                   {"serial", c.serial},
                   {"san", c.san},
                   {"not_before", format_rfc3339(c.not_before)},
                   {"not_after", format_rfc3339(c.not_after)},
                   {"sha256", c.fingerprint_sha256()}});
  }
  std::cout << dump(out) << "\n";
  return kExitOk;
}

int run_report(const Flags& f, const std::string& path) {
  auto format = pipeline::format_from_string(f.format);
  if (!format) throw ConfigError("--format must be jsonl or csv");
  std::vector<pipeline::RecordSummary> summaries;
  std::optional<Timestamp> at;
  std::size_t line_no = 0;
  bool failure = false;
  for (auto line : split(read_text(path), '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto doc = json::parse(line);
      summaries.push_back(pipeline::summary_from_json(doc));
      if (!at) at = parse_rfc3339(doc.at("at").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    failure = failure || pipeline::audit_failure(summaries.back());
  }
  auto summary = pipeline::aggregate(summaries, at);
  std::string text = *format == pipeline::Format::Csv ? pipeline::summary_csv(summary) : dump(pipeline::to_json(summary)) + "\n";
  if (f.output.empty()) {
    std::cout << text;
  } else {
    std::filesystem::create_directories(f.output);
    auto file = std::filesystem::path(f.output) / (*format == pipeline::Format::Csv ? "summary.csv" : "summary.json");
    std::ofstream(file) << text;
    std::cerr << "wrote " << file.string() << "\n";
  }
  return failure ? kExitAuditFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit CAA, TLSA, DNSSEC, served certificates and CT logs for a set of domains"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--fixtures", f.fixtures, "Offline mode: directory with dns.json, certs/, ct.json")->check(CLI::ExistingDirectory);
  app.add_option("--doh-url", f.doh_url, "DNS-over-HTTPS JSON endpoint")->capture_default_str();
  app.add_option("--ct-url", f.ct_url, "crt.sh-style CT search endpoint")->capture_default_str();
  app.add_option("--trust-store", f.trust_store, "PEM bundle of trusted roots")->check(CLI::ExistingFile);
  app.add_option("--log-list", f.log_list, "Known CT logs (JSON)")->check(CLI::ExistingFile);
  app.add_option("--ca-mapping", f.ca_mapping, "CAA string to CA organization mapping (JSON)")->check(CLI::ExistingFile);
  app.add_option("--concurrency", f.concurrency, "Domains audited in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--rate-limit", f.rate_limit, "Queries per second per backend (0 disables)")->capture_default_str();
  app.add_option("--at", f.at, "Reference time (RFC 3339) for all validity checks");
  app.add_option("--output", f.output, "Output directory");
  app.add_option("--format", f.format, "jsonl or csv")->capture_default_str()->check(CLI::IsMember({"jsonl", "csv"}));

  std::function<int()> action;

  auto* audit = app.add_subcommand("audit", "Run the full pipeline over an input list");
  std::string input;
  audit->add_option("--input", input, "Lines of `domain` or `rank,domain`")->required()->check(CLI::ExistingFile);
  audit->callback([&] { action = [&] { return run_audit(f, input); }; });

  auto* caa_cmd = app.add_subcommand("caa", "CAA tools");
  caa_cmd->require_subcommand(1);
  auto* caa_check = caa_cmd->add_subcommand("check", "Parse, classify and explain CAA for a name or zone file");
  std::string caa_target, issuer_org;
  bool wildcard = false;
  caa_check->add_option("target", caa_target, "Domain name or zone file")->required();
  caa_check->add_option("--issuer", issuer_org, "Classify against this CA organization");
  caa_check->add_flag("--wildcard", wildcard, "Classify as a wildcard certificate");
  caa_check->callback([&] { action = [&] { return run_caa_check(f, caa_target, issuer_org, wildcard); }; });

  auto* dane_cmd = app.add_subcommand("dane", "DANE tools");
  dane_cmd->require_subcommand(1);
  auto* dane_check = dane_cmd->add_subcommand("check", "Assess TLSA records at _443._tcp against the served chain");
  std::string dane_target;
  dane_check->add_option("name", dane_target, "Domain name")->required();
  dane_check->callback([&] { action = [&] { return run_dane_check(f, dane_target); }; });

  auto* ct_cmd = app.add_subcommand("ct", "Certificate Transparency tools");
  ct_cmd->require_subcommand(1);
  auto* ct_fetch = ct_cmd->add_subcommand("fetch", "List logged certificates valid for a name");
  std::string ct_target;
  ct_fetch->add_option("name", ct_target, "Domain name")->required();
  ct_fetch->callback([&] { action = [&] { return run_ct_fetch(f, ct_target); }; });

  auto* report = app.add_subcommand("report", "Aggregate a records.jsonl file into a summary");
  std::string records_path;
  report->add_option("records", records_path, "records.jsonl")->required()->check(CLI::ExistingFile);
  report->callback([&] { action = [&] { return run_report(f, records_path); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitConfig;
}
