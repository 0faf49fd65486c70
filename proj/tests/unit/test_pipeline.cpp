#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "pkiaudit/pipeline.hpp"

using namespace pkiaudit;
using namespace pkiaudit::pipeline;

namespace {

const std::filesystem::path kCorpus = std::filesystem::path(PKIAUDIT_FIXTURES) / "corpus";

struct Run {
  Environment env;
  PreparedTargets prepared;
  std::vector<AuditRecord> records;

  Run() {
    EnvironmentOptions o;
    o.fixtures = kCorpus;
    env = make_environment(o);
    std::ifstream in(kCorpus / "input.txt");
    std::stringstream text;
    text << in.rdbuf();
    prepared = prepare_targets(parse_input_list(text.str()), *env.dns, *env.web);
    records = audit_all_serial(prepared.targets, env.context());
  }

  const AuditRecord& get(const std::string& name) const {
    for (const auto& r : records)
      if (r.target.name == name) return r;
    throw std::runtime_error("no record for " + name);
  }
};

const Run& corpus() {
  static Run r;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

RecordSummary summary(bool caa, bool dnssec, bool tlsa) {
  RecordSummary s;
  s.caa = caa;
  s.dnssec = dnssec;
  s.tlsa = tlsa;
  return s;
}

}  // namespace

TEST_CASE("input lists accept ranks and comments") {
  auto lines = parse_input_list("# header\n1,example.com\n\nexample.org  \n 3 , Example.NET\n");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].rank == 1);
  CHECK(lines[0].name == "example.com");
  CHECK_FALSE(lines[1].rank);
  CHECK(lines[2].rank == 3);
  CHECK_THROWS_AS(parse_input_list("x,example.com\n"), InputError);
  CHECK(parse_input_list("1,not a domain\n").at(0).name == "not a domain");
}

TEST_CASE("target preparation resolves, probes and follows redirects") {
  const auto& p = corpus().prepared;
  std::map<std::string, std::string> dropped;
  for (const auto& d : p.dropped) dropped[d.name] = d.reason;
  CHECK(dropped.at("nxdomain.test").find("did not resolve") != std::string::npos);
  CHECK(dropped.at("closed.test").find("neither port") != std::string::npos);
  CHECK(dropped.at("a-timeout.test").find("timed out") != std::string::npos);
  CHECK(dropped.at("redirect-dst.test").find("duplicate") != std::string::npos);

  const auto& src = corpus().get("redirect-src.test").target;
  CHECK(src.final_name == "redirect-dst.test");
  CHECK(src.redirect_hops == 1);
  CHECK(src.hop_chain == std::vector<std::string>{"http://redirect-src.test/", "https://redirect-dst.test/"});

  const auto& loop = corpus().get("loop.test").target;
  CHECK(loop.final_name == "loop.test");
  CHECK(loop.hop_chain.size() == 2);
  CHECK(corpus().get("nocaa.test").target.rank == 1);
}

TEST_CASE("records carry the expected per-domain classification") {
  const auto& le = corpus().get("le-match.test");
  REQUIRE(le.caa_state);
  CHECK(le.caa_state->state == caa::MatchState::IssuerMatch);
  CHECK(le.errors.empty());
  CHECK(le.chain_status->verdict == certs::ChainVerdict::Valid);
  CHECK(le.scts.size() == 2);
  for (const auto& v : le.scts) CHECK(v.trustworthy());

  const auto& nocaa = corpus().get("nocaa.test");
  CHECK_FALSE(nocaa.ct);

  const auto& tlsa = corpus().get("row3.test");
  REQUIRE(tlsa.dane);
  CHECK(tlsa.dane->has_flag(dane::kFlagNoDnssec));

  const auto& inherit = corpus().get("www.inherit.test");
  REQUIRE(inherit.relevant);
  CHECK(inherit.relevant->depth == 1);

  CHECK(corpus().get("mismatch.test").scts.at(0).log_rejected);
  CHECK_FALSE(corpus().get("malformed.test").scts.at(0).known_log);

  const auto& port = corpus().get("only80.test");
  REQUIRE(port.errors.size() == 1);
  CHECK(port.errors[0].kind == "PortClosed");
  CHECK(corpus().get("caa-servfail.test").errors.at(0).stage == Stage::Dns);
}

TEST_CASE("parallel audit equals the serial reference") {
  auto parallel = audit_all_parallel(corpus().prepared.targets, corpus().env.context(), 4);
  CHECK(records_jsonl(parallel) == records_jsonl(corpus().records));
}

TEST_CASE("JSON records round trip into summaries") {
  for (const auto& r : corpus().records) {
    auto direct = summarize(r);
    auto parsed = summary_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(direct.name == parsed.name);
    CHECK(direct.caa_state == parsed.caa_state);
    CHECK(direct.tlsa_ct_rows == parsed.tlsa_ct_rows);
    CHECK(direct.caa_ct_pairs == parsed.caa_ct_pairs);
    CHECK(direct.leaf_age_days == parsed.leaf_age_days);
    CHECK(direct.forensic_cells == parsed.forensic_cells);
  }
  CHECK_THROWS_AS(summary_from_json(nlohmann::json::object()), InputError);
}

TEST_CASE("aggregation counts overlap subsets and age buckets") {
  auto r = aggregate({summary(true, false, false), summary(true, true, false), summary(false, true, true)});
  CHECK(r.overlap_counts.at("CAA") == 1);
  CHECK(r.overlap_counts.at("CAA+DNSSEC") == 1);
  CHECK(r.overlap_counts.at("DNSSEC+TLSA") == 1);
  CHECK(r.overlap_counts.at("TLSA") == 0);

  auto young = summary(true, false, false);
  young.caa_state = "IssuerMatch";
  young.served_state = "IssuerMatch";
  young.leaf_age_days = 10;
  auto old = young;
  old.leaf_age_days = 200;
  auto ages = aggregate({young, old});
  CHECK(ages.age_buckets.at("IssuerMatch|<=3m") == 1);
  CHECK(ages.age_buckets.at("IssuerMatch|>3m") == 1);

  auto empty = aggregate({});
  CHECK(empty.records == 0);
  for (const auto& [_, n] : empty.overlap_counts) CHECK(n == 0);
  for (const auto& [_, n] : empty.tlsa_ct_matrix) CHECK(n == 0);
}

TEST_CASE("reports are written and reproducible") {
  auto dir = std::filesystem::temp_directory_path() / "pkiaudit-report-test";
  std::filesystem::remove_all(dir);
  std::vector<AuditRecord> two(corpus().records.begin(), corpus().records.begin() + 2);
  std::vector<RecordSummary> sums;
  for (const auto& r : two) sums.push_back(summarize(r));
  auto report = aggregate(sums, corpus().env.at);

  auto files = emit_report(two, report, Format::Jsonl, dir / "a");
  CHECK(files.size() == 2);
  auto jsonl = slurp(dir / "a" / "records.jsonl");
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 2);
  emit_report(two, report, Format::Jsonl, dir / "b");
  CHECK(slurp(dir / "a" / "records.jsonl") == slurp(dir / "b" / "records.jsonl"));
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));

  emit_report(two, report, Format::Csv, dir / "c");
  auto csv = slurp(dir / "c" / "summary.csv");
  CHECK(csv.starts_with("table,key,value\n"));
  CHECK(csv.find("overlap_counts,CAA,") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "c" / "records.csv"));
  CHECK(format_from_string("csv") == Format::Csv);
  CHECK_FALSE(format_from_string("xml"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("audit failure signal") {
  RecordSummary s;
  CHECK_FALSE(audit_failure(s));
  s.served_state = "EmptyMismatch";
  s.caa_state = "EmptyMismatch";
  CHECK(audit_failure(s));
  RecordSummary p;
  p.partial = "IssueMatchesWildMismatch";
  CHECK(audit_failure(p));
}
