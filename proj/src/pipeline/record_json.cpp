#include <cmath>

#include "pkiaudit/pipeline.hpp"

namespace pkiaudit::pipeline {

using nlohmann::json;

namespace {

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

json response_json(const dns::DnsResponse& r) {
  json records = json::array();
  for (const auto& rec : r.records)
    records.push_back({{"type", dns::to_string(rec.type)}, {"ttl", rec.ttl}, {"data", rec.data}});
  json out = {{"status", dns::to_string(r.status)},
              {"authenticated", r.authenticated},
              {"queried_name", r.queried_name},
              {"records", records}};
  if (!r.error.empty()) out["error"] = r.error;
  return out;
}

json state_json(const std::optional<caa::CaaMatchState>& s) {
  if (!s) return nullptr;
  return {{"state", caa::to_string(s->state)},
          {"deciding_tag", s->deciding_tag ? json(caa::to_string(*s->deciding_tag)) : json(nullptr)}};
}

json caa_record_json(const caa::CaaRecord& r) {
  json out = {{"flags", r.flags},
              {"tag", r.tag},
              {"value", r.value},
              {"tag_kind", caa::to_string(r.tag_kind)},
              {"unknown_kind", r.unknown_kind ? json(caa::to_string(*r.unknown_kind)) : json(nullptr)}};
  if (r.issue) {
    json params = json::array();
    for (const auto& [k, v] : r.issue->parameters) params.push_back({k, v});
    out["issue"] = {{"kind", caa::to_string(r.issue->kind)},
                    {"issuer_domain", opt(r.issue->issuer_domain)},
                    {"parameters", params}};
  } else {
    out["issue"] = nullptr;
  }
  return out;
}

json cert_json(const certs::Certificate& c) {
  return {{"subject", c.subject.text},
          {"issuer", c.issuer.text},
          {"san", c.san},
          {"not_before", format_rfc3339(c.not_before)},
          {"not_after", format_rfc3339(c.not_after)},
          {"serial", c.serial},
          {"sha256", c.fingerprint_sha256()},
          {"is_ca", c.is_ca},
          {"is_precert", c.is_precert},
          {"sct_count", c.embedded_scts.size()}};
}

json chain_json(const AuditRecord& rec) {
  if (!rec.chain) return nullptr;
  const auto& chain = *rec.chain;
  json certs = json::array();
  for (std::size_t i = 0; i < chain.size(); ++i) certs.push_back(cert_json(chain.at(i)));
  json out = {{"sni", chain.sni_used},
              {"fetched_at", format_rfc3339(chain.fetched_at)},
              {"certificates", certs},
              {"unparseable_count", chain.unparseable.size()}};
  out["status"] = rec.chain_status ? json{{"verdict", certs::to_string(rec.chain_status->verdict)},
                                          {"detail", rec.chain_status->detail},
                                          {"anchor", opt(rec.chain_status->anchor)}}
                                   : json(nullptr);
  out["name_match"] = rec.name_match ? json(certs::to_string(*rec.name_match)) : json(nullptr);
  out["issuer"] = rec.issuer ? json{{"organization", rec.issuer->organization},
                                    {"domain_hints", rec.issuer->domain_hints},
                                    {"flagged", rec.issuer->flagged()}}
                             : json(nullptr);
  json scts = json::array();
  for (const auto& s : rec.scts)
    scts.push_back({{"log_id", hex_encode(s.log_id)},
                    {"known_log", s.known_log},
                    {"signature_ok", s.signature_ok},
                    {"log_operator", opt(s.log_operator)},
                    {"log_rejected", s.log_rejected},
                    {"trustworthy", s.trustworthy()},
                    {"timestamp", s.timestamp},
                    {"detail", s.detail}});
  out["scts"] = scts;
  return out;
}

json dane_json(const AuditRecord& rec) {
  if (!rec.dane) return nullptr;
  const auto& a = *rec.dane;
  json records = json::array();
  for (const auto& r : a.records)
    records.push_back({{"raw", r.raw},
                       {"usage", r.usage},
                       {"selector", r.selector},
                       {"matching_type", r.matching_type},
                       {"data", hex_encode(r.data)},
                       {"conformant", r.conformant},
                       {"problems", r.problems}});
  auto match = [](const dane::Match& m) { return json{{"record", m.record}, {"chain_index", m.chain_index}}; };
  json all = json::array();
  for (const auto& m : a.all_matches) all.push_back(match(m));
  return {{"records", records},
          {"matched", a.matched ? match(*a.matched) : json(nullptr)},
          {"all_matches", all},
          {"constraint_class", dane::to_string(a.constraint_class)},
          {"dnssec_secure", a.dnssec_secure},
          {"requires_webpki", a.requires_webpki},
          {"authenticated", a.authenticated},
          {"flags", a.flags}};
}

json ct_json(const AuditRecord& rec) {
  if (!rec.ct) return nullptr;
  json entries = json::array();
  for (std::size_t i = 0; i < rec.ct->entries.size(); ++i) {
    const auto& e = rec.ct->entries[i];
    json item = cert_json(e.certificate);
    item["entry_id"] = e.entry_id;
    item["logged_at"] = e.logged_at ? json(format_rfc3339(*e.logged_at)) : json(nullptr);
    item["is_precert"] = e.is_precert;
    if (i < rec.ct_caa.size()) {
      item["name_kind"] = caa::to_string(rec.ct_caa[i].name_kind);
      item["caa"] = state_json(rec.ct_caa[i].state);
      item["issuer_organization"] = rec.ct_caa[i].issuer_organization;
    }
    entries.push_back(std::move(item));
  }
  return {{"name", rec.ct->name},
          {"deduplicated", rec.ct->deduplicated},
          {"error", opt(rec.ct->error)},
          {"entries", entries}};
}

json consistency_json(const AuditRecord& rec) {
  json out;
  if (rec.caa_vs_ct) {
    json pairs = json::array();
    for (const auto& p : rec.caa_vs_ct->inconsistency_pairs)
      pairs.push_back({{"server", caa::to_string(p.server)},
                       {"ct", caa::to_string(p.ct)},
                       {"server_name_mismatch", p.server_name_mismatch},
                       {"entry_id", p.entry_id}});
    out["caa_vs_ct"] = {{"server_state", caa::to_string(rec.caa_vs_ct->server.state)},
                        {"server_name_mismatch", rec.caa_vs_ct->server.name_mismatch},
                        {"consistent", rec.caa_vs_ct->consistent},
                        {"pairs", pairs}};
  } else {
    out["caa_vs_ct"] = nullptr;
  }
  out["partial"] = rec.partial ? json{{"kind", consistency::to_string(rec.partial->kind)},
                                      {"fqdn_state", caa::to_string(rec.partial->fqdn_state)},
                                      {"wildcard_state", caa::to_string(rec.partial->wildcard_state)}}
                               : json(nullptr);
  json rows = json::array();
  for (const auto& r : rec.tlsa_ct)
    rows.push_back({{"entry_id", r.entry_id}, {"row", r.row}, {"label", consistency::tlsa_ct_row_label(r.row)}});
  out["tlsa_ct"] = rows;
  json forensics = json::array();
  for (const auto& f : rec.forensics)
    forensics.push_back({{"record", f.record_index},
                         {"kind", consistency::to_string(f.kind)},
                         {"entry_id", opt(f.entry_id)},
                         {"bucket", f.bucket ? json(consistency::to_string(*f.bucket)) : json(nullptr)},
                         {"days_to_expiry", f.days_to_expiry ? json(*f.days_to_expiry) : json(nullptr)},
                         {"verdict", f.verdict ? json(certs::to_string(*f.verdict)) : json(nullptr)}});
  out["tlsa_forensics"] = forensics;
  json tc = json::array();
  for (const auto& f : rec.tlsa_caa)
    tc.push_back({{"entry_id", f.entry_id},
                  {"server_state", caa::to_string(f.server.state)},
                  {"server_name_mismatch", f.server.name_mismatch},
                  {"referenced_state", caa::to_string(f.referenced)}});
  out["tlsa_caa"] = tc;
  return out;
}

}  // namespace

json to_json(const AuditRecord& rec) {
  const auto& t = rec.target;
  json target = {{"rank", t.rank ? json(*t.rank) : json(nullptr)},
                 {"name", t.name},
                 {"final_name", t.final_name},
                 {"resolved_ips", t.resolved_ips},
                 {"port80_open", t.port80_open},
                 {"port443_open", t.port443_open},
                 {"redirect_hops", t.redirect_hops},
                 {"hop_chain", t.hop_chain}};

  json caa_walk = json::array();
  for (const auto& l : rec.dns.caa_by_ancestor) caa_walk.push_back({{"name", l.name}, {"response", response_json(l.response)}});
  json dns = {{"soa", response_json(rec.dns.soa)},
              {"a", response_json(rec.dns.a)},
              {"caa", caa_walk},
              {"tlsa_443", response_json(rec.dns.tlsa_443)},
              {"contact_email_txt", response_json(rec.dns.contact_email_txt)},
              {"contact_phone_txt", response_json(rec.dns.contact_phone_txt)}};

  json caa_part;
  if (rec.relevant) {
    json records = json::array();
    for (const auto& r : rec.relevant->records) records.push_back(caa_record_json(r));
    caa_part["relevant"] = {{"source_name", rec.relevant->source_name},
                            {"depth", rec.relevant->depth},
                            {"records", records}};
  } else {
    caa_part["relevant"] = nullptr;
  }
  json iodef = json::array();
  for (const auto& i : rec.iodef)
    iodef.push_back({{"value", i.value}, {"kind", caa::to_string(i.verdict.kind)}, {"detail", i.verdict.detail}});
  caa_part["iodef"] = iodef;
  caa_part["state"] = state_json(rec.caa_state);
  caa_part["fqdn"] = state_json(rec.caa_fqdn);
  caa_part["wildcard"] = state_json(rec.caa_wildcard);

  json errors = json::array();
  for (const auto& e : rec.errors)
    errors.push_back({{"stage", to_string(e.stage)}, {"kind", e.kind}, {"message", e.message}});

  return {{"schema", kRecordSchema},
          {"at", format_rfc3339(rec.at)},
          {"target", target},
          {"dns", dns},
          {"caa", caa_part},
          {"chain", chain_json(rec)},
          {"dane", dane_json(rec)},
          {"ct", ct_json(rec)},
          {"consistency", consistency_json(rec)},
          {"errors", errors}};
}

// ---------------------------------------------------------------------------

namespace {

const json& need(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(std::string("record lacks field '") + key + "'");
  return obj[key];
}

}  // namespace

RecordSummary summary_from_json(const json& rec) {
  if (!rec.is_object() || rec.value("schema", std::string()) != kRecordSchema)
    throw InputError("not a " + std::string(kRecordSchema) + " record");
  RecordSummary s;
  const auto& target = need(rec, "target");
  s.name = need(target, "final_name").get<std::string>();
  auto at = parse_rfc3339(need(rec, "at").get<std::string>());

  const auto& dns = need(rec, "dns");
  s.dnssec = need(need(dns, "soa"), "authenticated").get<bool>() || need(need(dns, "a"), "authenticated").get<bool>();
  s.tlsa = !need(need(dns, "tlsa_443"), "records").empty();

  const auto& caa_part = need(rec, "caa");
  const auto& relevant = need(caa_part, "relevant");
  s.caa = !relevant.is_null();
  if (s.caa) {
    for (const auto& r : need(relevant, "records")) {
      auto tag_kind = r.at("tag_kind").get<std::string>();
      if (!r.at("unknown_kind").is_null()) s.unknown_kinds.push_back(r["unknown_kind"].get<std::string>());
      const auto& issue = r.at("issue");
      if (issue.is_null() || issue.at("issuer_domain").is_null()) continue;
      auto domain = to_lower(issue["issuer_domain"].get<std::string>());
      if (tag_kind == "issue") s.issue_strings.push_back(domain);
      if (tag_kind == "issuewild") s.issuewild_strings.push_back(domain);
    }
  }
  for (const auto& i : need(caa_part, "iodef")) s.iodef_kinds.push_back(i.at("kind").get<std::string>());

  const auto& chain = need(rec, "chain");
  const auto& state = need(caa_part, "state");
  if (!state.is_null()) s.served_state = state.at("state").get<std::string>();
  if (!chain.is_null()) {
    if (!chain.at("status").is_null()) s.chain_verdict = chain["status"].at("verdict").get<std::string>();
    auto nb = parse_rfc3339(chain.at("certificates").at(0).at("not_before").get<std::string>());
    s.leaf_age_days = static_cast<long>(std::floor(static_cast<double>((at - nb).count()) / 86400.0));
  }
  s.caa_state = s.served_state;
  const auto& ct = need(rec, "ct");
  if (!s.caa_state && !ct.is_null()) {
    const auto& entries = ct.at("entries");
    if (!entries.empty() && entries[0].contains("caa")) s.caa_state = entries[0]["caa"].at("state").get<std::string>();
  }

  const auto& dane = need(rec, "dane");
  if (!dane.is_null()) s.dane_flags = dane.at("flags").get<std::vector<std::string>>();

  const auto& cons = need(rec, "consistency");
  for (const auto& r : need(cons, "tlsa_ct")) s.tlsa_ct_rows.push_back(r.at("row").get<int>());
  const auto& cvc = need(cons, "caa_vs_ct");
  if (!cvc.is_null()) {
    for (const auto& p : cvc.at("pairs")) {
      std::string server = p.at("server_name_mismatch").get<bool>() ? "NameMismatch" : p.at("server").get<std::string>();
      s.caa_ct_pairs.emplace_back(server, p.at("ct").get<std::string>());
    }
  }
  const auto& partial = need(cons, "partial");
  if (!partial.is_null()) s.partial = partial.at("kind").get<std::string>();
  for (const auto& f : need(cons, "tlsa_forensics")) {
    std::string bucket = f.at("bucket").is_null() ? "none" : f["bucket"].get<std::string>();
    s.forensic_cells.push_back(f.at("kind").get<std::string>() + "|" + bucket);
  }
  s.tlsa_caa_findings = need(cons, "tlsa_caa").size();
  s.errors = need(rec, "errors").size();
  return s;
}

RecordSummary summarize(const AuditRecord& record) { return summary_from_json(to_json(record)); }

bool audit_failure(const RecordSummary& r) {
  auto bad = [](const std::optional<std::string>& s) { return s && (*s == "MalformedMismatch" || *s == "EmptyMismatch"); };
  return bad(r.served_state) || bad(r.caa_state) || r.partial.has_value();
}

}  // namespace pkiaudit::pipeline
