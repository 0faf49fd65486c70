#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "pkiaudit/consistency.hpp"

using namespace pkiaudit;
using namespace pkiaudit::consistency;
using caa::MatchState;

TEST_CASE("server versus CT states") {
  auto c = compare_caa_server_vs_ct({MatchState::IssuerMatch, false},
                                    {{"a", MatchState::IssuerMatch}, {"b", MatchState::IssuerMismatch}});
  CHECK_FALSE(c.consistent);
  REQUIRE(c.inconsistency_pairs.size() == 1);
  CHECK(c.inconsistency_pairs[0] == CaaPair{MatchState::IssuerMatch, MatchState::IssuerMismatch, false, "b"});

  auto same = compare_caa_server_vs_ct({MatchState::IssuerMatch, false}, {{"a", MatchState::IssuerMatch}});
  CHECK(same.consistent);
  CHECK(same.inconsistency_pairs.empty());

  auto named = compare_caa_server_vs_ct({MatchState::IssuerMatch, true}, {{"a", MatchState::IssuerMatch}});
  CHECK_FALSE(named.consistent);
  REQUIRE(named.inconsistency_pairs.size() == 1);
  CHECK(named.inconsistency_pairs[0].server_name_mismatch);

  CHECK(compare_caa_server_vs_ct({MatchState::IssuerMismatch, false}, {}).consistent);
}

TEST_CASE("TLSA/CT rows are exhaustive and ordered") {
  CHECK(classify_tlsa_ct(true, true, true) == 1);
  CHECK(classify_tlsa_ct(true, false, true) == 3);
  CHECK(classify_tlsa_ct(false, true, false) == 6);
  CHECK(classify_tlsa_ct(false, false, false) == 8);
  std::set<int> rows;
  for (bool s : {true, false})
    for (bool c : {true, false})
      for (bool i : {true, false}) {
        int row = classify_tlsa_ct(s, c, i);
        rows.insert(row);
        auto key = tlsa_ct_key(row);
        CHECK(key.server_authenticated == s);
        CHECK(key.ct_authenticated == c);
        CHECK(key.same_issuer == i);
      }
  CHECK(rows.size() == 8);
  CHECK(tlsa_ct_row_label(3) == "server=yes,ct=no,same_issuer=yes");
}

TEST_CASE("partial CAA findings need both name kinds") {
  std::vector<std::string> both{"example.com", "*.example.com"};
  auto a = partial_caa_check(both, MatchState::IssuerMatch, MatchState::IssuerMismatch);
  REQUIRE(a);
  CHECK(a->kind == PartialKind::IssueMatchesWildMismatch);
  auto b = partial_caa_check(both, MatchState::IssuerMismatch, MatchState::IssuerMatch);
  REQUIRE(b);
  CHECK(b->kind == PartialKind::WildMatchesIssueMismatch);
  CHECK_FALSE(partial_caa_check(both, MatchState::IssuerMatch, MatchState::IssuerMatch));
  CHECK_FALSE(partial_caa_check(both, MatchState::IssuerMatch, MatchState::ImplicitMatch));
  CHECK(partial_caa_check(both, MatchState::IssuerMatch, MatchState::EmptyMismatch));
  CHECK_FALSE(partial_caa_check({"*.example.com"}, MatchState::IssuerMatch, MatchState::IssuerMismatch));
  CHECK_FALSE(partial_caa_check({"example.com"}, MatchState::IssuerMatch, MatchState::IssuerMismatch));
}

TEST_CASE("TLSA-referenced certificates versus CAA") {
  auto f = tlsa_vs_caa({MatchState::IssuerMatch, false}, {{"x", MatchState::IssuerMismatch}});
  REQUIRE(f.size() == 1);
  CHECK(f[0].entry_id == "x");
  CHECK(tlsa_vs_caa({MatchState::IssuerMatch, false}, {{"x", MatchState::IssuerMatch}}).empty());
  CHECK(tlsa_vs_caa({MatchState::IssuerMatch, true}, {{"x", MatchState::IssuerMatch}}).size() == 1);
}

TEST_CASE("forensic buckets around the 90 day marks") {
  CHECK(expiry_bucket(-400) == ExpiryBucket::ExpiredOver90d);
  CHECK(expiry_bucket(-91) == ExpiryBucket::ExpiredOver90d);
  CHECK(expiry_bucket(-90) == ExpiryBucket::ExpiredWithin90d);
  CHECK(expiry_bucket(-1) == ExpiryBucket::ExpiredWithin90d);
  CHECK(expiry_bucket(0) == ExpiryBucket::ExpiresWithin90d);
  CHECK(expiry_bucket(90) == ExpiryBucket::ExpiresWithin90d);
  CHECK(expiry_bucket(91) == ExpiryBucket::ExpiresAfter90d);
}

TEST_CASE("forensics classify referenced certificates") {
  auto at = parse_rfc3339("2024-03-15T12:00:00Z");
  auto days = [&](int d) { return at + std::chrono::days(d); };
  std::vector<ForensicInput> in{
      {0, {{"old", days(-400), certs::ChainVerdict::Valid}}},
      {1, {{"live", days(120), certs::ChainVerdict::Valid}, {"distrusted", days(120), certs::ChainVerdict::Untrusted}}},
      {2, {}}};
  auto f = tlsa_mismatch_forensics(in, at);
  REQUIRE(f.size() == 4);
  CHECK(f[0].kind == ForensicKind::StaleRecord);
  CHECK(f[0].bucket == ExpiryBucket::ExpiredOver90d);
  CHECK(f[0].days_to_expiry == -400);
  CHECK(f[1].kind == ForensicKind::UndeployedValid);
  CHECK(f[1].bucket == ExpiryBucket::ExpiresAfter90d);
  CHECK(f[2].kind == ForensicKind::StaleRecord);
  CHECK(f[3].kind == ForensicKind::Unexplained);
  CHECK(f[3].record_index == 2);
  CHECK_FALSE(f[3].entry_id);
}
