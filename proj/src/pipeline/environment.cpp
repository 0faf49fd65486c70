#include <fstream>
#include <sstream>

#include "pkiaudit/pipeline.hpp"

#ifndef PKIAUDIT_DATA_DIR
#define PKIAUDIT_DATA_DIR "data"
#endif

namespace pkiaudit::pipeline {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PKIAUDIT_DATA_DIR")) return env;
  return PKIAUDIT_DATA_DIR;
}

AuditContext Environment::context() const {
  return {at, &mapping, &trust, &logs, dns.get(), tls.get(), ct.get()};
}

namespace {

std::filesystem::path pick(const std::optional<std::filesystem::path>& flag,
                           const std::optional<std::filesystem::path>& fixtures, const char* fixture_file,
                           const std::filesystem::path& fallback) {
  if (flag) return *flag;
  if (fixtures && std::filesystem::exists(*fixtures / fixture_file)) return *fixtures / fixture_file;
  return fallback;
}

std::optional<Timestamp> fixture_time(const std::filesystem::path& dir) {
  auto path = dir / "meta.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    auto doc = nlohmann::json::parse(buffer.str());
    return parse_rfc3339(doc.at("at").get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError("fixture meta.json: " + std::string(e.what()));
  }
}

}  // namespace

Environment make_environment(const EnvironmentOptions& options) {
  Environment env;
  const auto& fx = options.fixtures;
  if (fx && !std::filesystem::is_directory(*fx)) throw ConfigError("fixture directory not found: " + fx->string());

  if (options.at) env.at = *options.at;
  else if (auto t = fx ? fixture_time(*fx) : std::nullopt) env.at = *t;
  else env.at = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());

  auto data = default_data_dir();
  env.mapping = caa::CaMapping::from_file(pick(options.ca_mapping, fx, "ca_mapping.json", data / "ca_mapping.json"));
  env.trust = certs::TrustStore::from_pem_file(pick(options.trust_store, fx, "trust.pem", data / "mozilla_roots.pem"));
  auto log_path = pick(options.log_list, fx, "log_list.json", data / "log_list.json");
  env.logs = std::filesystem::exists(log_path) ? certs::LogList::from_file(log_path)
                                               : certs::LogList::from_json_text(R"({"operators":[]})");

  if (fx) {
    env.offline = true;
    env.dns = std::make_unique<dns::FixtureBackend>(dns::FixtureBackend::from_file(*fx / "dns.json"));
    env.tls = std::make_unique<certs::FixtureChainSource>(*fx / "certs", env.at);
    if (std::filesystem::exists(*fx / "ct.json"))
      env.ct = std::make_unique<ct::FixtureBackend>(ct::FixtureBackend::from_file(*fx / "ct.json"));
    env.web = std::make_unique<FixtureWebProbe>(FixtureWebProbe::from_dir(*fx));
    return env;
  }

  try {
    net::parse_url(options.doh_url);
    net::parse_url(options.ct_url);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  auto limiter = [&] { return std::make_shared<RateLimiter>(options.rate_limit, 1.0); };
  env.dns = std::make_unique<dns::DohBackend>(options.doh_url, limiter(), RetryPolicy::standard());
  env.tls = std::make_unique<certs::TlsChainSource>(limiter(), RetryPolicy::standard(), options.timeout);
  env.ct = std::make_unique<ct::CrtShBackend>(options.ct_url, limiter(), RetryPolicy::standard());
  env.web = std::make_unique<LiveWebProbe>(limiter(), options.timeout);
  return env;
}

}  // namespace pkiaudit::pipeline
