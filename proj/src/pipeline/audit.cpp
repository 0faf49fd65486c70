#include <algorithm>
#include <set>

#include "pkiaudit/pipeline.hpp"

namespace pkiaudit::pipeline {

bool AuditRecord::has_tlsa() const { return !dns.tlsa_443.records.empty(); }

bool AuditRecord::dnssec() const { return dns.soa.authenticated || dns.a.authenticated; }

namespace {

std::string kind_of(const std::exception& e) {
  if (dynamic_cast<const TransportError*>(&e)) return "TransportError";
  if (dynamic_cast<const ct::CapabilityError*>(&e)) return "CapabilityError";
  if (dynamic_cast<const BackendError*>(&e)) return "BackendError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const InputError*>(&e)) return "InputError";
  if (dynamic_cast<const certs::CertificateParseError*>(&e)) return "CertificateParseError";
  return "InternalError";
}

template <typename F>
bool guarded(AuditRecord& rec, Stage stage, F&& body) {
  try {
    body();
    return true;
  } catch (const std::exception& e) {
    rec.errors.push_back({stage, kind_of(e), e.what()});
  } catch (...) {
    rec.errors.push_back({stage, "InternalError", "unknown failure"});
  }
  return false;
}

caa::NameKind kind_for(const certs::Certificate& cert, const std::string& name) {
  return certs::name_matches(cert, name) == certs::NameMatch::WildcardSan ? caa::NameKind::Wildcard
                                                                          : caa::NameKind::Fqdn;
}

bool has_wildcard(const certs::Certificate& cert) {
  return std::any_of(cert.san.begin(), cert.san.end(), [](const std::string& s) { return s.starts_with("*."); });
}

void dns_errors(AuditRecord& rec) {
  auto note = [&](const dns::DnsResponse& r) {
    bool failed = r.status == dns::Status::ServFail || r.status == dns::Status::Timeout;
    if (!r.error.empty() || failed) {
      auto detail = r.error.empty() ? "resolver answered " + std::string(dns::to_string(r.status)) : r.error;
      rec.errors.push_back({Stage::Dns, std::string(dns::to_string(r.status)), r.queried_name + ": " + detail});
    }
  };
  note(rec.dns.soa);
  note(rec.dns.a);
  for (const auto& l : rec.dns.caa_by_ancestor) note(l.response);
  note(rec.dns.tlsa_443);
  note(rec.dns.contact_email_txt);
  note(rec.dns.contact_phone_txt);
}

void run_dns(AuditRecord& rec, const dns::DomainName& name, const AuditContext& ctx) {
  guarded(rec, Stage::Dns, [&] {
    rec.dns = dns::collect_domain_dns(name, *ctx.dns);
    dns_errors(rec);
    rec.relevant = caa::relevant_caa_set(rec.dns.caa_by_ancestor);
    if (rec.relevant) {
      for (const auto& r : rec.relevant->records)
        if (r.tag_kind == caa::TagKind::Iodef) rec.iodef.push_back({r.value, caa::validate_iodef(r.value)});
    }
  });
}

void run_tls(AuditRecord& rec, const std::string& name, const AuditContext& ctx) {
  if (!rec.target.port443_open) {
    rec.errors.push_back({Stage::Tls, "PortClosed", "port 443 is not open"});
    return;
  }
  if (rec.target.resolved_ips.empty()) {
    rec.errors.push_back({Stage::Tls, "NoAddress", "no resolved address"});
    return;
  }
  guarded(rec, Stage::Tls, [&] { rec.chain = ctx.tls->fetch(name, rec.target.resolved_ips.front(), 443); });
}

void run_validate(AuditRecord& rec, const std::string& name, const AuditContext& ctx) {
  if (!rec.chain) return;
  guarded(rec, Stage::Validate, [&] {
    const auto& chain = *rec.chain;
    rec.chain_status = certs::validate_chain(chain, *ctx.trust, ctx.at);
    rec.name_match = certs::name_matches(chain.leaf, name);
    rec.issuer = certs::issuer_identity(chain);
    rec.scts = certs::verify_scts(chain.leaf, certs::leaf_issuer(chain), *ctx.logs);
    rec.caa_fqdn = caa::match_caa(*rec.issuer, caa::NameKind::Fqdn, rec.relevant, *ctx.mapping);
    if (has_wildcard(chain.leaf))
      rec.caa_wildcard = caa::match_caa(*rec.issuer, caa::NameKind::Wildcard, rec.relevant, *ctx.mapping);
    rec.caa_state = *rec.name_match == certs::NameMatch::WildcardSan ? rec.caa_wildcard : rec.caa_fqdn;
  });
}

void run_dane(AuditRecord& rec) {
  if (!rec.has_tlsa()) return;
  guarded(rec, Stage::Validate, [&] {
    std::vector<dane::TlsaRecord> records;
    for (const auto& r : rec.dns.tlsa_443.records) records.push_back(dane::parse_tlsa(r.data));
    certs::ChainStatus status = rec.chain_status.value_or(certs::ChainStatus{});
    rec.dane = dane::evaluate_dane(std::move(records), rec.chain ? &*rec.chain : nullptr,
                                   rec.dns.tlsa_443.authenticated, status);
  });
}

void run_ct(AuditRecord& rec, const std::string& name, const AuditContext& ctx) {
  if (!ctx.ct || (!rec.has_caa() && !rec.has_tlsa())) return;
  guarded(rec, Stage::Ct, [&] {
    rec.ct = ct::fetch_certs_by_name(name, ctx.at, *ctx.ct);
    if (rec.ct->error) {
      rec.errors.push_back({Stage::Ct, "QueryError", *rec.ct->error});
      return;
    }
    for (const auto& e : rec.ct->entries) {
      auto kind = kind_for(e.certificate, name);
      auto identity = certs::issuer_identity(e.certificate);
      rec.ct_caa.push_back(
          {e.entry_id, kind, caa::match_caa(identity, kind, rec.relevant, *ctx.mapping), identity.organization});
    }
  });
}

consistency::ServerView server_view(const AuditRecord& rec) {
  return {rec.caa_state->state, rec.name_match == certs::NameMatch::NoMatch};
}

void run_caa_consistency(AuditRecord& rec) {
  if (rec.caa_state && rec.caa_fqdn && rec.caa_wildcard && rec.chain)
    rec.partial = consistency::partial_caa_check(rec.chain->leaf.san, rec.caa_fqdn->state, rec.caa_wildcard->state);
  if (rec.has_caa() && rec.caa_state && rec.ct && !rec.ct->error) {
    std::vector<consistency::EntryState> states;
    for (const auto& c : rec.ct_caa) states.push_back({c.entry_id, c.state.state});
    rec.caa_vs_ct = consistency::compare_caa_server_vs_ct(server_view(rec), std::move(states));
  }
}

void run_tlsa_consistency(AuditRecord& rec, const std::string& name, const AuditContext& ctx) {
  if (!rec.dane) return;
  const auto& assessment = *rec.dane;

  if (rec.ct && !rec.ct->error) {
    std::string server_org = rec.issuer ? rec.issuer->organization : std::string();
    for (const auto& e : rec.ct->entries) {
      bool ct_auth = std::any_of(assessment.records.begin(), assessment.records.end(), [&](const auto& r) {
        return r.conformant && r.end_entity() && dane::tlsa_references(r, e.certificate);
      });
      auto org = certs::issuer_identity(e.certificate).organization;
      bool same = rec.chain && !server_org.empty() && iequals(org, server_org);
      rec.tlsa_ct.push_back({e.entry_id, consistency::classify_tlsa_ct(assessment.authenticated, ct_auth, same)});
    }
  }

  if (!ctx.ct) return;
  std::vector<consistency::ForensicInput> forensic_inputs;
  std::vector<consistency::EntryState> referenced;
  std::set<std::string> referenced_ids;
  for (std::size_t i = 0; i < assessment.records.size(); ++i) {
    const auto& record = assessment.records[i];
    if (!record.conformant) continue;
    auto found = ct::fetch_certs_by_tlsa(record, *ctx.ct);
    if (found.error) {
      rec.errors.push_back({Stage::Ct, "QueryError", *found.error});
      continue;
    }
    consistency::ForensicInput input{i, {}};
    for (const auto& e : found.entries) {
      certs::CertificateChain probe{e.certificate, {}, ctx.at, name, false, {}};
      if (rec.chain) probe.intermediates = rec.chain->intermediates;
      auto verdict = certs::validate_chain(probe, *ctx.trust, ctx.at).verdict;
      input.certificates.push_back({e.entry_id, e.certificate.not_after, verdict});
      if (!e.certificate.is_ca && referenced_ids.insert(e.entry_id).second) {
        auto kind = kind_for(e.certificate, name);
        auto state = caa::match_caa(certs::issuer_identity(e.certificate), kind, rec.relevant, *ctx.mapping);
        referenced.push_back({e.entry_id, state.state});
      }
    }
    forensic_inputs.push_back(std::move(input));
  }
  if (!assessment.matched) rec.forensics = consistency::tlsa_mismatch_forensics(forensic_inputs, ctx.at);
  if (rec.caa_state && rec.has_caa()) rec.tlsa_caa = consistency::tlsa_vs_caa(server_view(rec), referenced);
}

}  // namespace

AuditRecord audit_domain(const Target& target, const AuditContext& ctx) {
  AuditRecord rec;
  rec.target = target;
  rec.at = ctx.at;
  const std::string& requested = target.final_name.empty() ? target.name : target.final_name;
  std::optional<dns::DomainName> name;
  if (!guarded(rec, Stage::Dns, [&] { name = dns::DomainName::parse(requested); })) return rec;
  const std::string& n = name->str();

  run_dns(rec, *name, ctx);
  run_tls(rec, n, ctx);
  run_validate(rec, n, ctx);
  run_dane(rec);
  run_ct(rec, n, ctx);
  guarded(rec, Stage::Consistency, [&] {
    run_caa_consistency(rec);
    run_tlsa_consistency(rec, n, ctx);
  });
  return rec;
}

std::vector<AuditRecord> audit_all_serial(const std::vector<Target>& targets, const AuditContext& ctx) {
  std::vector<AuditRecord> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(audit_domain(t, ctx));
  return out;
}

std::vector<AuditRecord> audit_all_parallel(const std::vector<Target>& targets, const AuditContext& ctx,
                                            int threads) {
  std::vector<AuditRecord> out(targets.size());
  const long n = static_cast<long>(targets.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : 1)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = audit_domain(targets[static_cast<std::size_t>(i)], ctx);
  return out;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Dns: return "dns";
    case Stage::Tls: return "tls";
    case Stage::Validate: return "validate";
    case Stage::Ct: return "ct";
    case Stage::Consistency: return "consistency";
  }
  return "?";
}

}  // namespace pkiaudit::pipeline
