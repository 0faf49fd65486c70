#include <algorithm>

#include "pkiaudit/caa.hpp"

namespace pkiaudit::caa {

namespace {

bool issuer_accepted(const CaIdentity& issuer, std::string_view issuer_domain,
                     const CaMapping& mapping) {
  if (const auto* ids = mapping.lookup(issuer_domain)) {
    if (issuer.organization.empty()) return false;
    return std::any_of(ids->begin(), ids->end(),
                       [&](const std::string& id) { return iequals(id, issuer.organization); });
  }
  if (iequals(issuer.organization, issuer_domain)) return true;
  return std::any_of(issuer.domain_hints.begin(), issuer.domain_hints.end(),
                     [&](const std::string& hint) { return iequals(hint, issuer_domain); });
}

}  // namespace

CaaMatchState match_caa(const CaIdentity& issuer, NameKind name_kind,
                        const std::optional<RelevantCaaSet>& relevant, const CaMapping& mapping) {
  if (!relevant) return {MatchState::NoCaa, std::nullopt};

  std::vector<const CaaRecord*> issue, issuewild;
  for (const auto& r : relevant->records) {
    if (r.tag_kind == TagKind::Unknown && r.critical())
      return {MatchState::IssuerMismatch, std::nullopt};
    if (r.tag_kind == TagKind::Issue) issue.push_back(&r);
    if (r.tag_kind == TagKind::IssueWild) issuewild.push_back(&r);
  }

  bool use_wild = name_kind == NameKind::Wildcard && !issuewild.empty();
  const auto& governing = use_wild ? issuewild : issue;
  TagKind tag = use_wild ? TagKind::IssueWild : TagKind::Issue;
  if (governing.empty()) return {MatchState::ImplicitMatch, std::nullopt};

  bool any_issuer = false;
  bool any_empty = false;
  for (const auto* r : governing) {
    const auto& v = *r->issue;
    if (v.kind == IssueKind::Issuer) {
      any_issuer = true;
      if (issuer_accepted(issuer, *v.issuer_domain, mapping)) return {MatchState::IssuerMatch, tag};
    } else if (v.kind == IssueKind::ExplicitEmpty) {
      any_empty = true;
    }
  }
  if (any_issuer) return {MatchState::IssuerMismatch, tag};
  return {any_empty ? MatchState::EmptyMismatch : MatchState::MalformedMismatch, std::nullopt};
}

namespace {

int tag_order(TagKind kind) {
  switch (kind) {
    case TagKind::Issue: return 0;
    case TagKind::IssueWild: return 1;
    case TagKind::Iodef: return 2;
    case TagKind::Unknown: return 3;
  }
  return 4;
}

std::string quoted(const CaaRecord& r) { return r.tag + " \"" + r.value + "\""; }

std::string ca_label(std::string_view domain, const CaMapping& mapping) {
  std::string out(domain);
  if (const auto* ids = mapping.lookup(domain)) {
    out += " (";
    bool first = true;
    for (const auto& id : *ids) {
      if (!first) out += ", ";
      out += id;
      first = false;
    }
    out += ")";
  } else {
    out += " (not in CA mapping)";
  }
  return out;
}

std::string parameter_note(const IssueValue& v) {
  if (v.parameters.empty()) return "";
  std::string out = "; parameters ";
  for (std::size_t i = 0; i < v.parameters.size(); ++i) {
    if (i) out += ", ";
    out += v.parameters[i].first + "=" + v.parameters[i].second;
  }
  return out + " are not evaluated";
}

}  // namespace

std::vector<std::string> explain_caa(const RelevantCaaSet& relevant, const CaMapping& mapping) {
  std::vector<const CaaRecord*> sorted;
  for (const auto& r : relevant.records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const CaaRecord* a, const CaaRecord* b) {
    return std::tuple(tag_order(a->tag_kind), a->value, a->tag, a->flags) <
           std::tuple(tag_order(b->tag_kind), b->value, b->tag, b->flags);
  });

  auto authorizing = [&](TagKind kind) {
    return std::any_of(relevant.records.begin(), relevant.records.end(), [&](const CaaRecord& r) {
      return r.tag_kind == kind && r.issue->kind == IssueKind::Issuer;
    });
  };
  bool has_wild = std::any_of(relevant.records.begin(), relevant.records.end(),
                              [](const CaaRecord& r) { return r.tag_kind == TagKind::IssueWild; });

  std::vector<std::string> lines;
  std::string origin = relevant.depth == 0 ? "" : " (inherited from " + relevant.source_name + ")";
  for (const auto* r : sorted) {
    std::string line = quoted(*r) + origin + ": ";
    switch (r->tag_kind) {
      case TagKind::Issue:
      case TagKind::IssueWild: {
        bool wild = r->tag_kind == TagKind::IssueWild;
        const auto& v = *r->issue;
        std::string scope = wild ? "wildcard names"
                                 : (has_wild ? "FQDNs; wildcard issuance is governed by issuewild records"
                                             : "FQDNs and wildcard names");
        if (v.kind == IssueKind::Issuer) {
          line += "authorizes " + ca_label(*v.issuer_domain, mapping) + " to issue certificates for " +
                  scope + parameter_note(v);
        } else {
          std::string what = v.kind == IssueKind::Malformed ? "malformed value, treated as \";\"; "
                                                             : "";
          if (authorizing(r->tag_kind))
            line += what + "grants nothing; other " + r->tag + " records still authorize CAs";
          else
            line += what + "forbids issuance for " + scope + " by any CA";
          line += parameter_note(v);
        }
        break;
      }
      case TagKind::Iodef: {
        auto verdict = validate_iodef(r->value);
        if (verdict.kind == IodefKind::Valid)
          line += "CAs report policy violations to " + r->value;
        else
          line += "invalid report target (" + std::string(to_string(verdict.kind)) + ": " +
                  verdict.detail + "); violation reports cannot be delivered";
        break;
      }
      case TagKind::Unknown: {
        std::string kind = r->unknown_kind ? std::string(to_string(*r->unknown_kind)) : "unknown";
        if (r->critical())
          line += "unknown tag (" + kind + ") with the critical flag set; no CA may issue";
        else
          line += "unknown tag (" + kind + "), ignored by CAs";
        break;
      }
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace pkiaudit::caa
