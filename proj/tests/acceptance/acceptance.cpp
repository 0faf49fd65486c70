// Acceptance checks, one line per criterion.
//
// usage: acceptance [--criterion N]

#include <openssl/sha.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "pki.hpp"
#include "pkiaudit/caa.hpp"
#include "pkiaudit/certs.hpp"
#include "pkiaudit/crypto.hpp"
#include "pkiaudit/dane.hpp"
#include "pkiaudit/pipeline.hpp"

using namespace pkiaudit;
using namespace pkiaudit::testpki;

namespace {

const std::filesystem::path kFixtures = PKIAUDIT_FIXTURES;

struct Outcome {
  enum class Status { Pass, Fail, Skip } status = Status::Fail;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::Fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return ok ? pass(std::move(d)) : fail(std::move(d)); }

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::fixed << v;
  return s.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Timestamp T(const char* s) { return parse_rfc3339(s); }

// ---------------------------------------------------------------------------
// 1. Issue-value grammar against a regular-expression transcription of the ABNF.

struct OracleValue {
  caa::IssueKind kind;
  std::optional<std::string> domain;
  std::vector<std::pair<std::string, std::string>> parameters;
};

OracleValue abnf_oracle(const std::string& v) {
  static const std::string label = "[A-Za-z0-9](?:-*[A-Za-z0-9])*";
  static const std::string wsp = "[ \\t]*";
  static const std::string param = label + wsp + "=" + wsp + "[\\x21-\\x3A\\x3C-\\x7E]*";
  static const std::string params = param + "(?:" + wsp + ";" + wsp + param + ")*";
  static const std::regex grammar("^" + wsp + "(?:(" + label + "(?:\\." + label + ")*)" + wsp + ")?" + "(?:;" + wsp +
                                  "(?:(" + params + ")" + wsp + ")?)?$");
  std::smatch m;
  if (!std::regex_match(v, m, grammar)) return {caa::IssueKind::Malformed, std::nullopt, {}};
  OracleValue out{m[1].matched ? caa::IssueKind::Issuer : caa::IssueKind::ExplicitEmpty, std::nullopt, {}};
  if (m[1].matched) out.domain = m[1].str();
  if (m[2].matched) {
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::stringstream ss(m[2].str());
    std::string part;
    while (std::getline(ss, part, ';')) {
      auto eq = part.find('=');
      out.parameters.emplace_back(strip(part.substr(0, eq)), strip(part.substr(eq + 1)));
    }
  }
  return out;
}

std::vector<std::string> issue_corpus(std::size_t n, std::mt19937& rng) {
  const std::string alnum = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto label = [&] {
    std::string s(1, alnum[pick(0, 61)]);
    int len = pick(0, 10);
    for (int i = 0; i < len; ++i) {
      if (pick(0, 6) == 0) s += std::string(pick(1, 2), '-');
      s += alnum[pick(0, 61)];
    }
    return s;
  };
  auto domain = [&] {
    std::string d = label();
    for (int i = pick(0, 3); i > 0; --i) d += "." + label();
    return d;
  };
  auto ws = [&] {
    static const char* pads[] = {"", "", "", " ", "  ", "\t", " \t"};
    return std::string(pads[pick(0, 6)]);
  };
  auto value = [&] {
    std::string v;
    for (int i = pick(0, 12); i > 0; --i) {
      char c;
      do c = static_cast<char>(pick(0x21, 0x7E));
      while (c == ';');
      v += c;
    }
    return v;
  };
  auto parameters = [&] {
    std::string p = label() + ws() + "=" + ws() + value();
    for (int i = pick(0, 2); i > 0; --i) p += ws() + ";" + ws() + label() + ws() + "=" + ws() + value();
    return p;
  };
  auto valid = [&] {
    std::string v = ws() + domain() + ws();
    if (pick(0, 1)) v += ";" + ws() + (pick(0, 2) ? parameters() + ws() : std::string());
    return v;
  };
  auto empty = [&] {
    std::string v = ws() + ";" + ws();
    if (pick(0, 3) == 0) v += parameters() + ws();
    return pick(0, 9) == 0 ? ws() : v;
  };
  auto mutate = [&](std::string v) {
    static const std::string pool = " \t-.;=_\"/@\x7f\xc3\xa9" "aZ09:";
    for (int i = pick(1, 3); i > 0; --i) {
      std::size_t at = v.empty() ? 0 : static_cast<std::size_t>(pick(0, static_cast<int>(v.size()) - 1));
      char c = pool[pick(0, static_cast<int>(pool.size()) - 1)];
      switch (v.empty() ? 0 : pick(0, 2)) {
        case 0: v.insert(v.begin() + static_cast<long>(at), c); break;
        case 1: v.erase(at, 1); break;
        default: v[at] = c;
      }
    }
    return v;
  };
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (i % 4) {
      case 0: out.push_back(valid()); break;
      case 1: out.push_back(empty()); break;
      case 2: out.push_back(ws() + domain() + ws() + ";" + ws() + parameters()); break;
      default: out.push_back(mutate(pick(0, 1) ? valid() : empty()));
    }
  }
  return out;
}

Outcome criterion1() {
  auto start = Clock::now();
  std::mt19937 rng(8659);
  auto values = issue_corpus(12000, rng);
  auto serial = caa::parse_issue_values_serial(values);
  auto parallel = caa::parse_issue_values_parallel(values, 8);
  std::size_t agree = 0;
  std::map<caa::IssueKind, std::size_t> kinds;
  std::string first_disagreement;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto o = abnf_oracle(values[i]);
    const auto& got = serial[i];
    bool same = got.kind == o.kind && got.issuer_domain == o.domain && got.parameters == o.parameters &&
                parallel[i] == got;
    ++kinds[o.kind];
    if (same) ++agree;
    else if (first_disagreement.empty()) first_disagreement = " first mismatch: \"" + values[i] + "\"";
  }
  double t = seconds_since(start);
  bool covered = kinds[caa::IssueKind::Issuer] >= 1000 && kinds[caa::IssueKind::ExplicitEmpty] >= 1000 &&
                 kinds[caa::IssueKind::Malformed] >= 1000;
  return verdict(agree == values.size() && values.size() >= 10000 && t < 30.0 && covered,
                 std::to_string(agree) + "/" + std::to_string(values.size()) + " agree (issuer " +
                     std::to_string(kinds[caa::IssueKind::Issuer]) + ", empty " +
                     std::to_string(kinds[caa::IssueKind::ExplicitEmpty]) + ", malformed " +
                     std::to_string(kinds[caa::IssueKind::Malformed]) + "), " + fmt(t) + " s < 30 s" +
                     first_disagreement);
}

// ---------------------------------------------------------------------------
// 2. Six-state matcher against the flowchart, exhaustively.

enum ValueBit { kMatch = 1, kOther = 2, kEmpty = 4, kMalformed = 8 };

caa::CaaMatchState flowchart(bool present, bool critical_unknown, int issue, int issuewild, bool wildcard) {
  using caa::MatchState;
  if (!present) return {MatchState::NoCaa, std::nullopt};
  if (critical_unknown) return {MatchState::IssuerMismatch, std::nullopt};
  bool wild = wildcard && issuewild != 0;
  int governing = wild ? issuewild : issue;
  auto tag = wild ? caa::TagKind::IssueWild : caa::TagKind::Issue;
  if (governing == 0) return {MatchState::ImplicitMatch, std::nullopt};
  if (governing & kMatch) return {MatchState::IssuerMatch, tag};
  if (governing & kOther) return {MatchState::IssuerMismatch, tag};
  if (governing & kEmpty) return {MatchState::EmptyMismatch, std::nullopt};
  return {MatchState::MalformedMismatch, std::nullopt};
}

Outcome criterion2() {
  auto mapping = caa::CaMapping::from_file(pipeline::default_data_dir() / "ca_mapping.json");
  caa::CaIdentity issuer{"Network Solutions L.L.C.", {"netsol-ca.example"}};
  std::size_t cases = 0, disagreements = 0;
  std::string first;
  for (int present = 0; present < 2; ++present)
    for (int crit = 0; crit < 2; ++crit)
      for (int iodef = 0; iodef < 2; ++iodef)
        for (int hit = 0; hit < 2; ++hit)
          for (int wildcard = 0; wildcard < 2; ++wildcard)
            for (int issue = 0; issue < 16; ++issue)
              for (int issuewild = 0; issuewild < 16; ++issuewild) {
                std::vector<caa::CaaRecord> records;
                auto add = [&](const char* tag, int bits) {
                  if (bits & kMatch) records.push_back(caa::parse_caa_record(0, tag, hit ? "web.com" : "netsol-ca.example"));
                  if (bits & kOther)
                    records.push_back(caa::parse_caa_record(0, tag, hit ? "letsencrypt.org" : "unknown-ca.example"));
                  if (bits & kEmpty) records.push_back(caa::parse_caa_record(0, tag, ";"));
                  if (bits & kMalformed) records.push_back(caa::parse_caa_record(0, tag, "web .com"));
                };
                add("issue", issue);
                add("issuewild", issuewild);
                if (crit) records.push_back(caa::parse_caa_record(128, "futuretag", "x"));
                if (iodef) records.push_back(caa::parse_caa_record(0, "iodef", "mailto:caa@example.com"));
                std::optional<caa::RelevantCaaSet> relevant;
                if (present && !records.empty()) relevant = caa::RelevantCaaSet{"example.com", 0, records};
                bool effective = relevant.has_value();
                auto expected = flowchart(effective, crit, issue, issuewild, wildcard);
                auto got = caa::match_caa(issuer, wildcard ? caa::NameKind::Wildcard : caa::NameKind::Fqdn, relevant,
                                          mapping);
                ++cases;
                if (!(got == expected)) {
                  ++disagreements;
                  if (first.empty())
                    first = "; first: issue=" + std::to_string(issue) + " wild=" + std::to_string(issuewild) +
                            " got " + std::string(caa::to_string(got.state));
                }
              }

  auto example = caa::match_caa(caa::CaIdentity{"Network Solutions L.L.C.", {}}, caa::NameKind::Fqdn,
                                caa::RelevantCaaSet{"example.com", 0, {caa::parse_caa_record(0, "issue", "web.com")}},
                                mapping);
  bool worked = example.state == caa::MatchState::IssuerMatch;
  return verdict(disagreements == 0 && worked,
                 std::to_string(cases) + " combinations, " + std::to_string(disagreements) +
                     " disagreements; web.com vs Network Solutions L.L.C. -> " +
                     std::string(caa::to_string(example.state)) + first);
}

// ---------------------------------------------------------------------------
// 3. TLSA round trip over all usage/selector/matching combinations.

Bytes digest(const Bytes& in, int mtype) {
  if (mtype == 0) return in;
  Bytes out(mtype == 1 ? SHA256_DIGEST_LENGTH : SHA512_DIGEST_LENGTH);
  if (mtype == 1) SHA256(in.data(), in.size(), out.data());
  else SHA512(in.data(), in.size(), out.data());
  return out;
}

Outcome criterion3() {
  auto start = Clock::now();
  Key root_key = Key::ed25519("accept-root"), int_key = Key::ed25519("accept-int"), leaf_key = Key::ed25519("accept-leaf");
  CertSpec r{"Accept Root", "Accept", {}, T("2020-01-01T00:00:00Z"), T("2035-01-01T00:00:00Z"), "01", true};
  auto root = make_cert(r, root_key, Issuer{nullptr, &root_key});
  CertSpec i{"Accept Int", "Accept", {}, T("2020-01-01T00:00:00Z"), T("2035-01-01T00:00:00Z"), "02", true};
  auto inter = make_cert(i, int_key, Issuer{&root, &root_key});
  CertSpec l{"tlsa.example", "", {"tlsa.example"}, T("2024-01-01T00:00:00Z"), T("2025-01-01T00:00:00Z"), "03"};
  auto leaf = make_cert(l, leaf_key, Issuer{&inter, &int_key});
  auto chain = certs::chain_from_der({leaf, inter, root}, "tlsa.example", T("2024-06-01T00:00:00Z"));

  int positives = 0, combos = 0;
  std::size_t perturbations = 0, false_accepts = 0;
  for (int usage = 0; usage < 4; ++usage)
    for (int selector = 0; selector < 2; ++selector)
      for (int mtype = 0; mtype < 3; ++mtype) {
        ++combos;
        bool ee = usage == 1 || usage == 3;
        const Bytes& cert = ee ? leaf : inter;
        const Bytes& spki = ee ? leaf_key.spki() : int_key.spki();
        auto data = digest(selector == 0 ? cert : spki, mtype);
        auto record = dane::parse_tlsa(std::to_string(usage) + " " + std::to_string(selector) + " " +
                                       std::to_string(mtype) + " " + hex_encode(data));
        if (record.conformant && dane::tlsa_match(record, chain) == std::size_t(ee ? 0 : 1)) ++positives;
        for (std::size_t k = 0; k < record.data.size(); ++k)
          for (std::uint8_t delta : {0x01, 0x80, 0xFF}) {
            auto bent = record;
            bent.data[k] ^= delta;
            ++perturbations;
            if (dane::tlsa_match(bent, chain)) ++false_accepts;
          }
      }
  double t = seconds_since(start);
  return verdict(positives == 24 && combos == 24 && false_accepts == 0 && t < 5.0,
                 std::to_string(positives) + "/24 match, " + std::to_string(false_accepts) + "/" +
                     std::to_string(perturbations) + " perturbations accepted, " + fmt(t) + " s < 5 s");
}

// ---------------------------------------------------------------------------
// 4. Relevant-set resolution over random ancestor configurations.

Outcome criterion4() {
  std::mt19937 rng(6844);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const std::vector<std::string> rr_pool{"0 issue \"letsencrypt.org\"", "0 issuewild \";\"", "128 tbs \"x\"",
                                         "0 iodef \"mailto:a@b.example\"", "not a caa record"};
  const std::vector<std::string> tails{"com", "org", "co.uk", "com.au", "example", "de"};
  std::size_t agree = 0, walks_ok = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<std::string> labels;
    for (int i = pick(0, 5); i > 0; --i) labels.push_back("l" + std::to_string(pick(0, 99)));
    std::string name;
    for (const auto& lab : labels) name += lab + ".";
    name += tails[static_cast<std::size_t>(pick(0, 5))];
    auto walk = dns::caa_ancestor_walk(dns::DomainName::parse(name));

    // Walk shape: self first, each step drops one label.
    bool shape = walk.front() == name;
    for (std::size_t i = 1; i < walk.size(); ++i) {
      auto dot = walk[i - 1].find('.');
      shape = shape && dot != std::string::npos && walk[i - 1].substr(dot + 1) == walk[i];
    }
    if (shape) ++walks_ok;

    std::vector<dns::CaaLookup> lookups;
    std::optional<std::size_t> expected;
    std::size_t expected_count = 0;
    for (std::size_t i = 0; i < walk.size(); ++i) {
      dns::CaaLookup l{walk[i], {}};
      l.response.queried_name = walk[i];
      int roll = pick(0, 99);
      std::size_t caa_rrs = 0;
      if (roll < 40) {
      } else if (roll < 55) {
        l.response.status = dns::Status::NxDomain;
      } else if (roll < 65) {
        l.response.status = dns::Status::ServFail;
      } else {
        for (int k = pick(1, 3); k > 0; --k) {
          l.response.records.push_back({dns::RrType::CAA, 300, rr_pool[static_cast<std::size_t>(pick(0, 4))]});
          ++caa_rrs;
        }
      }
      if (pick(0, 4) == 0) l.response.records.push_back({dns::RrType::TXT, 300, "\"v=spf1 -all\""});
      if (!expected && l.response.status == dns::Status::NoError && caa_rrs > 0) {
        expected = i;
        expected_count = caa_rrs;
      }
      lookups.push_back(std::move(l));
    }
    auto got = caa::relevant_caa_set(lookups);
    bool same = expected ? (got && got->depth == static_cast<int>(*expected) && got->source_name == walk[*expected] &&
                            got->records.size() == expected_count)
                         : !got.has_value();
    if (same) ++agree;
  }
  return verdict(agree == trials && walks_ok == trials,
                 std::to_string(agree) + "/" + std::to_string(trials) + " agree, " + std::to_string(walks_ok) + "/" +
                     std::to_string(trials) + " walks well-formed");
}

// ---------------------------------------------------------------------------
// 5. SCT verification against the reference signer.

Outcome criterion5() {
  Key root_key = Key::ed25519("sct-root"), int_key = Key::ed25519("sct-int"), leaf_key = Key::ed25519("sct-leaf");
  Key log_a = Key::p256("sct-log-a"), log_b = Key::p256("sct-log-b");
  CertSpec r{"SCT Root", "SCT", {}, T("2020-01-01T00:00:00Z"), T("2035-01-01T00:00:00Z"), "01", true};
  auto root = make_cert(r, root_key, Issuer{nullptr, &root_key});
  CertSpec i{"SCT Int", "SCT", {}, T("2020-01-01T00:00:00Z"), T("2035-01-01T00:00:00Z"), "02", true};
  auto inter = make_cert(i, int_key, Issuer{&root, &root_key});
  CertSpec l{"sct.example", "", {"sct.example", "www.sct.example"}, T("2024-01-01T00:00:00Z"),
             T("2024-12-01T00:00:00Z"), "5C7"};
  Issuer by{&inter, &int_key};
  auto logs = certs::LogList::from_json_text(log_list_json({{&log_a, "A", "Op A"}, {&log_b, "B", "Op B"}}));
  auto issuer_cert = certs::Certificate::from_der(inter);
  const std::uint64_t ts = 1704067200000ULL;

  auto tbs = tbs_without_scts(l, leaf_key, by);
  Bytes sct_a = sign_precert_sct(log_a, ts, int_key.spki(), tbs);
  Bytes sct_b = sign_precert_sct(log_b, ts + 1, int_key.spki(), tbs, Bytes{0x00, 0x01});
  auto check = [&](const std::vector<Bytes>& scts) {
    auto cert = certs::Certificate::from_der(make_cert_with_scts(l, leaf_key, by, scts));
    return certs::verify_scts(cert, &issuer_cert, logs);
  };
  auto positive = check({sct_a, sct_b});
  bool positives_ok = positive.size() == 2 && positive[0].signature_ok && positive[1].signature_ok;

  // The checked-in corpus was signed by the same reference signer.
  auto corpus = kFixtures / "corpus";
  auto corpus_logs = certs::LogList::from_file(corpus / "log_list.json");
  certs::FixtureChainSource source(corpus / "certs", T("2024-03-15T12:00:00Z"));
  auto served = source.fetch("le-match.test", "192.0.2.2", 443);
  auto corpus_verdicts = certs::verify_scts(served.leaf, certs::leaf_issuer(served), corpus_logs);
  bool corpus_ok = corpus_verdicts.size() == 2 && corpus_verdicts[0].signature_ok && corpus_verdicts[1].signature_ok;

  std::mt19937 rng(6962);
  auto flip = [&](Bytes& b, std::size_t from, std::size_t to) {
    std::size_t bit = std::uniform_int_distribution<std::size_t>(from * 8, to * 8 - 1)(rng);
    b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  };
  std::size_t trials = 0, false_accepts = 0;
  const std::size_t per_kind = 40;
  for (std::size_t k = 0; k < per_kind; ++k) {
    // Signature bytes: the last field, after its 2-byte length.
    Bytes s = sct_a;
    auto parsed = *certs::parse_sct(sct_a);
    std::size_t sig_start = sct_a.size() - parsed.signature.size();
    flip(s, sig_start, s.size());
    ++trials;
    if (check({s})[0].signature_ok) ++false_accepts;

    // Timestamp: octets 33..40.
    Bytes t = sct_a;
    flip(t, 33, 41);
    ++trials;
    if (check({t})[0].signature_ok) ++false_accepts;

    // TBS: the log signed different bytes than the certificate carries.
    Bytes bent = tbs;
    flip(bent, 0, bent.size());
    ++trials;
    if (check({sign_precert_sct(log_a, ts, int_key.spki(), bent)})[0].signature_ok) ++false_accepts;
  }
  return verdict(positives_ok && corpus_ok && trials >= 100 && false_accepts == 0,
                 std::string("reference SCTs ") + (positives_ok ? "verify" : "FAIL") + ", corpus SCTs " +
                     (corpus_ok ? "verify" : "FAIL") + ", " + std::to_string(false_accepts) + "/" +
                     std::to_string(trials) + " mutations accepted");
}

// ---------------------------------------------------------------------------
// 6 and 7. Offline corpus against the golden report.

struct CorpusRun {
  std::vector<pipeline::AuditRecord> records;
  pipeline::SummaryReport summary;
  std::string jsonl;
  std::string summary_json;
  double seconds = 0;
};

CorpusRun run_corpus(const std::filesystem::path& out_dir) {
  auto start = Clock::now();
  pipeline::EnvironmentOptions options;
  options.fixtures = kFixtures / "corpus";
  auto env = pipeline::make_environment(options);
  auto input = pipeline::parse_input_list(slurp(kFixtures / "corpus" / "input.txt"));
  auto prepared = pipeline::prepare_targets(input, *env.dns, *env.web);
  CorpusRun run;
  run.records = pipeline::audit_all_parallel(prepared.targets, env.context(), 8);
  std::vector<pipeline::RecordSummary> summaries;
  for (const auto& r : run.records) summaries.push_back(pipeline::summarize(r));
  run.summary = pipeline::aggregate(summaries, env.at);
  std::filesystem::remove_all(out_dir);
  pipeline::emit_report(run.records, run.summary, pipeline::Format::Jsonl, out_dir);
  run.seconds = seconds_since(start);
  run.jsonl = slurp(out_dir / "records.jsonl");
  run.summary_json = slurp(out_dir / "summary.json");
  return run;
}

std::filesystem::path scratch(const char* name) { return std::filesystem::temp_directory_path() / name; }

Outcome criterion6() {
  auto a = run_corpus(scratch("pkiaudit-accept-6a"));
  auto b = run_corpus(scratch("pkiaudit-accept-6b"));
  auto golden = slurp(kFixtures / "golden" / "summary.json");
  int rows = 0;
  for (const auto& [row, n] : a.summary.tlsa_ct_matrix)
    if (n > 0) ++rows;
  const auto& pairs = a.summary.caa_ct_pairs;
  bool match_vs_mismatch = pairs.count("IssuerMatch|IssuerMismatch") && pairs.at("IssuerMatch|IssuerMismatch") > 0;
  bool name_vs_match = pairs.count("NameMismatch|IssuerMatch") && pairs.at("NameMismatch|IssuerMatch") > 0;
  bool stable = a.summary_json == b.summary_json && a.jsonl == b.jsonl;
  bool equal = a.summary_json == golden;
  return verdict(rows == 8 && match_vs_mismatch && name_vs_match && stable && equal,
                 std::to_string(rows) + "/8 TLSA-CT rows populated, server/CT pairs " +
                     (match_vs_mismatch && name_vs_match ? "present" : "MISSING") + ", reruns " +
                     (stable ? "identical" : "DIFFER") + ", golden summary " + (equal ? "equal" : "DIFFERS"));
}

Outcome criterion7() {
  auto run = run_corpus(scratch("pkiaudit-accept-7"));
  auto golden = slurp(kFixtures / "golden" / "records.jsonl");
  const auto& s = run.summary;
  bool six = true;
  for (const auto& [state, n] : s.caa_state_histogram) six = six && n > 0;
  six = six && s.caa_state_histogram.size() == 6;
  bool insecure_tlsa = s.dane_flags.count(std::string(dane::kFlagNoDnssec)) > 0;
  bool secure_tlsa = s.overlap_counts.at("DNSSEC+TLSA") + s.overlap_counts.at("CAA+DNSSEC+TLSA") > 0;
  bool partial = s.partial_findings.count("IssueMatchesWildMismatch") && s.partial_findings.count("WildMatchesIssueMismatch");
  bool iodef = true;
  for (const char* k : {"InvalidScheme", "LikelyEmail", "LikelyHttp", "Garbage"}) iodef = iodef && s.iodef_triage.count(k);
  bool equal = run.jsonl == golden;
  bool fast = run.seconds < 10.0;
  return verdict(run.records.size() == 50 && six && insecure_tlsa && secure_tlsa && partial && iodef && equal && fast,
                 std::to_string(run.records.size()) + " domains in " + fmt(run.seconds) + " s < 10 s, six states " +
                     (six ? "covered" : "MISSING") + ", TLSA with/without DNSSEC " +
                     (secure_tlsa && insecure_tlsa ? "covered" : "MISSING") + ", partial " +
                     (partial ? "covered" : "MISSING") + ", iodef triage " + (iodef ? "covered" : "MISSING") +
                     ", golden JSONL " + (equal ? "equal" : "DIFFERS"));
}

// ---------------------------------------------------------------------------
// 8. Live smoke test, only with network access.

Outcome criterion8() {
  pipeline::EnvironmentOptions options;
  options.timeout = std::chrono::milliseconds(3000);
  auto env = pipeline::make_environment(options);
  // A reachable port is not enough: some sandboxes accept every connection.
  auto probe = dns::query_records(dns::DnsQuery(dns::DomainName::parse("example.com"), dns::RrType::A), *env.dns);
  if (probe.status != dns::Status::NoError || probe.records.empty())
    return {Outcome::Status::Skip, "no working resolver (" + std::string(dns::to_string(probe.status)) +
                                       "); live smoke test not run"};
  std::vector<pipeline::InputLine> input;
  for (const char* n : {"google.com", "cloudflare.com", "wikipedia.org", "letsencrypt.org", "github.com"})
    input.push_back({std::nullopt, n});
  auto prepared = pipeline::prepare_targets(input, *env.dns, *env.web);
  auto records = pipeline::audit_all_parallel(prepared.targets, env.context(), 5);
  std::size_t errors = 0;
  for (const auto& r : records) errors += r.errors.size();
  return verdict(errors == 0 && records.size() == 5,
                 std::to_string(records.size()) + "/5 audited, " + std::to_string(prepared.dropped.size()) +
                     " dropped, " + std::to_string(errors) + " pipeline errors");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                  criterion5, criterion6, criterion7, criterion8};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) selected.push_back(std::atoi(argv[++i]));
  }
  if (selected.empty())
    for (int i = 1; i <= 8; ++i) selected.push_back(i);

  bool ok = true;
  for (int n : selected) {
    if (n < 1 || n > 8) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* label = o.status == Outcome::Status::Pass ? "PASS" : o.status == Outcome::Status::Skip ? "SKIP" : "FAIL";
    std::cout << "criterion " << n << ": " << label << "  " << o.detail << "\n";
    ok = ok && o.status != Outcome::Status::Fail;
  }
  return ok ? 0 : 1;
}
