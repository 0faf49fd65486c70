#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "pkiaudit/pipeline.hpp"

namespace pkiaudit::pipeline {

using nlohmann::json;

std::vector<InputLine> parse_input_list(std::string_view text) {
  std::vector<InputLine> out;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    InputLine item;
    auto comma = line.find(',');
    std::string_view name = line;
    if (comma != std::string_view::npos) {
      auto rank_text = trim(line.substr(0, comma));
      name = trim(line.substr(comma + 1));
      int rank = 0;
      auto [end, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
      if (ec != std::errc() || end != rank_text.data() + rank_text.size() || rank < 0)
        throw InputError("line " + std::to_string(line_no) + ": rank is not a non-negative integer");
      item.rank = rank;
    }
    if (name.empty()) throw InputError("line " + std::to_string(line_no) + ": missing domain");
    item.name = std::string(name);
    out.push_back(std::move(item));
  }
  return out;
}

// ---------------------------------------------------------------------------

FixtureWebProbe FixtureWebProbe::from_dir(const std::filesystem::path& dir) {
  FixtureWebProbe probe;
  probe.certs_dir_ = dir / "certs";
  auto path = dir / "web.json";
  if (!std::filesystem::exists(path)) return probe;
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("web fixture is not valid JSON: ") + e.what());
  }
  try {
    if (doc.contains("ports"))
      for (const auto& [name, ports] : doc["ports"].items()) probe.ports_[name] = ports.get<std::vector<int>>();
    if (doc.contains("http")) {
      for (const auto& [url, answer] : doc["http"].items()) {
        net::HttpResponse r;
        r.status = answer.at("status").get<int>();
        if (answer.contains("location")) r.location = answer["location"].get<std::string>();
        probe.http_[net::parse_url(url).str()] = r;
      }
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("web fixture: ") + e.what());
  }
  return probe;
}

bool FixtureWebProbe::port_open(const std::string& name, const std::string&, int port) const {
  if (auto it = ports_.find(name); it != ports_.end())
    return std::find(it->second.begin(), it->second.end(), port) != it->second.end();
  return (port == 80 || port == 443) && std::filesystem::exists(certs_dir_ / (name + ".pem"));
}

std::optional<net::HttpResponse> FixtureWebProbe::get(const net::Url& url) const {
  if (auto it = http_.find(url.str()); it != http_.end()) return it->second;
  return net::HttpResponse{200, {}, std::nullopt};
}

LiveWebProbe::LiveWebProbe(std::shared_ptr<RateLimiter> limiter, std::chrono::milliseconds timeout)
    : limiter_(std::move(limiter)), timeout_(timeout) {}

bool LiveWebProbe::port_open(const std::string&, const std::string& ip, int port) const {
  if (limiter_) limiter_->acquire();
  return net::tcp_port_open(ip, port, timeout_);
}

std::optional<net::HttpResponse> LiveWebProbe::get(const net::Url& url) const {
  if (limiter_) limiter_->acquire();
  try {
    net::HttpOptions options;
    options.timeout = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    if (options.timeout.count() < 1) options.timeout = std::chrono::seconds(1);
    options.verify_tls = false;
    return net::http_get(url, options);
  } catch (const TransportError&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Resolution {
  std::vector<std::string> ips;
  std::optional<std::string> failure;
};

Resolution resolve(const dns::DomainName& name, const dns::Backend& backend) {
  auto r = dns::query_records(dns::DnsQuery(name, dns::RrType::A), backend);
  Resolution out;
  if (r.status == dns::Status::Timeout) {
    out.failure = "resolution timed out";
  } else if (r.status != dns::Status::NoError) {
    out.failure = "did not resolve (" + std::string(dns::to_string(r.status)) + ")";
  } else {
    for (const auto& rec : r.records) out.ips.push_back(rec.data);
    if (out.ips.empty()) out.failure = "did not resolve to an IP address";
  }
  return out;
}

}  // namespace

PreparedTargets prepare_targets(const std::vector<InputLine>& input, const dns::Backend& dns,
                                const WebProbe& web) {
  PreparedTargets out;
  std::set<std::string> finals;
  for (const auto& line : input) {
    std::optional<dns::DomainName> name;
    try {
      name = dns::DomainName::parse(line.name);
    } catch (const InputError& e) {
      out.dropped.push_back({line.name, e.what()});
      continue;
    }
    auto res = resolve(*name, dns);
    if (res.failure) {
      out.dropped.push_back({name->str(), *res.failure});
      continue;
    }
    Target t;
    t.rank = line.rank;
    t.name = name->str();
    t.final_name = t.name;
    t.resolved_ips = res.ips;
    const auto& ip = res.ips.front();
    t.port80_open = web.port_open(t.name, ip, 80);
    t.port443_open = web.port_open(t.name, ip, 443);
    if (!t.port80_open && !t.port443_open) {
      out.dropped.push_back({t.name, "neither port 80 nor 443 open"});
      continue;
    }

    auto url = net::parse_url((t.port80_open ? "http://" : "https://") + t.name + "/");
    std::set<std::string> visited;
    t.hop_chain.push_back(url.str());
    visited.insert(url.str());
    while (t.redirect_hops < kRedirectCap) {
      auto response = web.get(url);
      if (!response || response->status < 300 || response->status > 399 || !response->location) break;
      net::Url next;
      try {
        next = net::resolve_location(url, *response->location);
      } catch (const InputError&) {
        break;
      }
      if (!visited.insert(next.str()).second) break;
      url = next;
      t.hop_chain.push_back(url.str());
      ++t.redirect_hops;
    }

    if (url.host != t.name) {
      std::optional<dns::DomainName> final_name;
      if (dns::DomainName::is_valid(url.host)) final_name = dns::DomainName::parse(url.host);
      auto final_res = final_name ? resolve(*final_name, dns) : Resolution{{}, "invalid redirect host"};
      if (final_res.failure) {
        out.dropped.push_back({t.name, "redirect target " + url.host + ": " + *final_res.failure});
        continue;
      }
      t.final_name = final_name->str();
      t.resolved_ips = final_res.ips;
      t.port80_open = web.port_open(t.final_name, t.resolved_ips.front(), 80);
      t.port443_open = web.port_open(t.final_name, t.resolved_ips.front(), 443);
    }
    if (!finals.insert(t.final_name).second) {
      out.dropped.push_back({t.name, "duplicate final name " + t.final_name});
      continue;
    }
    out.targets.push_back(std::move(t));
  }
  return out;
}

}  // namespace pkiaudit::pipeline
