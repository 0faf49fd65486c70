#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>

#include "pkiaudit/dnsio.hpp"

using namespace pkiaudit;
using namespace pkiaudit::dns;

namespace {

std::vector<std::string> walk(const char* name) { return caa_ancestor_walk(DomainName::parse(name)); }

RetryPolicy no_wait(std::vector<std::chrono::milliseconds>* waits = nullptr) {
  RetryPolicy p;
  p.sleep = [waits](std::chrono::milliseconds d) {
    if (waits) waits->push_back(d);
  };
  return p;
}

}  // namespace

TEST_CASE("domain names are normalized and validated") {
  CHECK(DomainName::parse("WWW.Example.COM.").str() == "www.example.com");
  CHECK(DomainName::parse("a.b.c").label_count() == 3);
  CHECK_FALSE(DomainName::is_valid(""));
  CHECK_FALSE(DomainName::is_valid("a..b"));
  CHECK_FALSE(DomainName::is_valid("bad label.com"));
  CHECK_FALSE(DomainName::is_valid(std::string(64, 'a') + ".com"));
  CHECK(DomainName::is_valid(std::string(63, 'a') + ".com"));
  CHECK_THROWS_AS(DomainName::parse("x..y"), InputError);
}

TEST_CASE("ancestor walk strips the leftmost label") {
  CHECK(walk("example.com") == std::vector<std::string>{"example.com", "com"});
  CHECK(walk("a.b.c.example.org") ==
        std::vector<std::string>{"a.b.c.example.org", "b.c.example.org", "c.example.org", "example.org", "org"});
  CHECK(walk("www.example.co.uk") == std::vector<std::string>{"www.example.co.uk", "example.co.uk", "co.uk"});
  CHECK(walk("com") == std::vector<std::string>{"com"});
  // Country codes without a generic second level keep plain stripping.
  CHECK(walk("www.example.de") == std::vector<std::string>{"www.example.de", "example.de", "de"});
}

TEST_CASE("ancestor walk elements are successive suffixes") {
  for (const char* name : {"a.b", "x.y.z.w", "deep.er.still.example.net", "m.shop.com.au"}) {
    auto w = walk(name);
    REQUIRE_FALSE(w.empty());
    CHECK(w.front() == name);
    for (std::size_t i = 1; i < w.size(); ++i) {
      auto prev = w[i - 1];
      CHECK(prev.substr(prev.find('.') + 1) == w[i]);
    }
  }
}

TEST_CASE("query names carry the label prefix") {
  DnsQuery q(DomainName::parse("example.com"), RrType::TLSA, std::string(kTlsaHttpsPrefix));
  CHECK(q.query_name() == "_443._tcp.example.com");
  CHECK(DnsQuery(DomainName::parse("example.com"), RrType::A).query_name() == "example.com");
}

TEST_CASE("fixture backend echoes entries and defaults to empty NOERROR") {
  auto backend = FixtureBackend::from_json_text(R"({
    "example.com|CAA": {"records": ["0 issue \"letsencrypt.org\""], "ad": true},
    "nxdomain-test.invalid|A": {"status": "NXDOMAIN"},
    "_validation-contactemail.example.com|TXT": {"records": ["\"admin@example.com\""]}
  })");
  auto caa = backend.query(DnsQuery(DomainName::parse("example.com"), RrType::CAA));
  CHECK(caa.status == Status::NoError);
  CHECK(caa.records.size() == 1);
  CHECK(caa.authenticated);

  auto nx = backend.query(DnsQuery(DomainName::parse("nxdomain-test.invalid"), RrType::A));
  CHECK(nx.status == Status::NxDomain);
  CHECK(nx.records.empty());

  auto none = backend.query(DnsQuery(DomainName::parse("example.com"), RrType::TLSA, std::string(kTlsaHttpsPrefix)));
  CHECK(none.status == Status::NoError);
  CHECK(none.records.empty());

  auto bundle = collect_domain_dns(DomainName::parse("www.example.co.uk"), backend);
  CHECK(bundle.caa_by_ancestor.size() == walk("www.example.co.uk").size());

  auto contact = collect_domain_dns(DomainName::parse("example.com"), backend);
  REQUIRE(contact.contact_email_txt.records.size() == 1);
  CHECK(contact.contact_email_txt.records[0].data == "\"admin@example.com\"");
}

TEST_CASE("fixture backend rejects malformed documents") {
  CHECK_THROWS_AS(FixtureBackend::from_json_text("[]"), ConfigError);
  CHECK_THROWS_AS(FixtureBackend::from_json_text(R"({"nobar": {}})"), ConfigError);
  CHECK_THROWS_AS(FixtureBackend::from_json_text(R"({"a.com|MX": {}})"), ConfigError);
  CHECK_THROWS_AS(FixtureBackend::from_json_text(R"({"a.com|A": {"status": "NXDOMAIN", "records": ["1.2.3.4"]}})"),
                  ConfigError);
}

TEST_CASE("DoH JSON answers are decoded") {
  auto r = parse_doh_json(
      R"({"Status":0,"AD":true,"Answer":[{"name":"example.com.","type":5,"TTL":60,"data":"alias.example.net."},
          {"name":"alias.example.net.","type":257,"TTL":300,"data":"0 issue \"pki.goog\""}]})",
      RrType::CAA, "example.com");
  CHECK(r.status == Status::NoError);
  CHECK(r.authenticated);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].ttl == 300);
  CHECK(parse_doh_json(R"({"Status":3})", RrType::A, "x").status == Status::NxDomain);
  CHECK(parse_doh_json(R"({"Status":2})", RrType::A, "x").status == Status::ServFail);
  CHECK_THROWS_AS(parse_doh_json("not json", RrType::A, "x"), BackendError);
  CHECK_THROWS_AS(parse_doh_json(R"({"Answer":[]})", RrType::A, "x"), BackendError);
}

TEST_CASE("DoH client retries twice, then reports a timeout") {
  std::atomic<int> calls{0};
  std::vector<std::chrono::milliseconds> waits;
  DohBackend backend("https://dns.example/resolve", nullptr, no_wait(&waits), [&](const net::Url& url) {
    ++calls;
    CHECK(url.path_and_query.find("name=example.com&type=A&do=1") != std::string::npos);
    throw TransportError("connect timeout");
    return net::HttpResponse{};
  });
  auto r = backend.query(DnsQuery(DomainName::parse("example.com"), RrType::A));
  CHECK(calls == 3);
  CHECK(r.status == Status::Timeout);
  CHECK(r.error == "connect timeout");
  CHECK(waits == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500), std::chrono::milliseconds(2000)});
}

TEST_CASE("DoH client recovers after a transient server error") {
  int calls = 0;
  DohBackend backend("https://dns.example/resolve", nullptr, no_wait(), [&](const net::Url&) {
    return ++calls == 1 ? net::HttpResponse{503, "", std::nullopt}
                        : net::HttpResponse{200, R"({"Status":0,"Answer":[{"type":1,"data":"192.0.2.1"}]})",
                                            std::nullopt};
  });
  auto r = backend.query(DnsQuery(DomainName::parse("example.com"), RrType::A));
  CHECK(calls == 2);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].data == "192.0.2.1");
}

TEST_CASE("collection captures backend failures per response") {
  struct Failing : Backend {
    DnsResponse query(const DnsQuery& q) const override {
      if (q.type == RrType::CAA) throw BackendError("garbled payload");
      DnsResponse r;
      r.queried_name = q.query_name();
      return r;
    }
  } failing;
  auto bundle = collect_domain_dns(DomainName::parse("example.com"), failing);
  REQUIRE(bundle.caa_by_ancestor.size() == 2);
  CHECK(bundle.caa_by_ancestor[0].response.status == Status::ServFail);
  CHECK(bundle.caa_by_ancestor[0].response.error == "garbled payload");
  CHECK(bundle.a.status == Status::NoError);
}

TEST_CASE("rate limiter spaces acquisitions") {
  RateLimiter limiter(50.0, 1.0);
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) limiter.acquire();
  auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(elapsed >= std::chrono::milliseconds(90));
  RateLimiter off(0.0);
  for (int i = 0; i < 1000; ++i) off.acquire();
}
