#include "pkiaudit/dane.hpp"

#include <algorithm>
#include <charconv>

#include "pkiaudit/crypto.hpp"

namespace pkiaudit::dane {

namespace {

std::optional<int> parse_field(std::string_view text) {
  int value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
  return value;
}

// Zone-file grouping parentheses separate tokens like blanks do.
bool separator(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '(' || c == ')'; }

std::vector<std::string_view> tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && separator(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !separator(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

void check_conformance(TlsaRecord& r) {
  if (r.usage < 0 || r.usage > 3) r.problems.push_back("usage out of range");
  if (r.selector < 0 || r.selector > 1) r.problems.push_back("selector out of range");
  if (r.matching_type < 0 || r.matching_type > 2) r.problems.push_back("matching type out of range");
  if (r.matching_type == 1 && r.data.size() != 32) r.problems.push_back("SHA-256 data must be 32 octets");
  if (r.matching_type == 2 && r.data.size() != 64) r.problems.push_back("SHA-512 data must be 64 octets");
  if (r.matching_type == 0 && r.data.empty()) r.problems.push_back("empty association data");
  r.conformant = r.problems.empty();
}

TlsaRecord placeholder(std::string_view payload, std::string problem) {
  TlsaRecord r;
  r.raw = std::string(payload);
  r.problems.push_back(std::move(problem));
  return r;
}

}  // namespace

TlsaRecord parse_tlsa(std::string_view payload) {
  auto parts = tokens(payload);
  TlsaRecord r;
  r.raw = std::string(payload);

  if (!parts.empty() && parts[0] == "\\#") {
    if (parts.size() < 2) return placeholder(payload, "truncated generic encoding");
    auto len = parse_field(parts[1]);
    std::string hex;
    for (std::size_t i = 2; i < parts.size(); ++i) hex += parts[i];
    auto wire = hex_decode(hex);
    if (!len || !wire || wire->size() != static_cast<std::size_t>(*len) || wire->size() < 3)
      return placeholder(payload, "undecodable generic encoding");
    r.usage = (*wire)[0];
    r.selector = (*wire)[1];
    r.matching_type = (*wire)[2];
    r.data.assign(wire->begin() + 3, wire->end());
    check_conformance(r);
    return r;
  }

  if (parts.size() < 4) return placeholder(payload, "expected usage, selector, matching type and data");
  auto usage = parse_field(parts[0]);
  auto selector = parse_field(parts[1]);
  auto matching = parse_field(parts[2]);
  if (!usage || !selector || !matching || *usage > 255 || *selector > 255 || *matching > 255)
    return placeholder(payload, "non-numeric or oversized field");
  std::string hex;
  for (std::size_t i = 3; i < parts.size(); ++i) hex += parts[i];
  auto data = hex_decode(hex);
  if (!data) return placeholder(payload, "association data is not hex");
  r.usage = *usage;
  r.selector = *selector;
  r.matching_type = *matching;
  r.data = std::move(*data);
  check_conformance(r);
  return r;
}

Bytes association_data(int selector, int matching_type, const certs::Certificate& cert) {
  const Bytes& object = selector == 1 ? cert.spki_der : cert.der;
  switch (matching_type) {
    case 1: return sha256(object);
    case 2: return sha512(object);
    default: return object;
  }
}

TlsaRecord make_tlsa(int usage, int selector, int matching_type, const certs::Certificate& cert) {
  TlsaRecord r;
  r.usage = usage;
  r.selector = selector;
  r.matching_type = matching_type;
  r.data = association_data(selector, matching_type, cert);
  check_conformance(r);
  r.raw = to_presentation(r);
  return r;
}

std::string to_presentation(const TlsaRecord& r) {
  return std::to_string(r.usage) + " " + std::to_string(r.selector) + " " +
         std::to_string(r.matching_type) + " " + hex_encode(r.data);
}

bool tlsa_references(const TlsaRecord& record, const certs::Certificate& cert) {
  if (!record.conformant) return false;
  return association_data(record.selector, record.matching_type, cert) == record.data;
}

std::optional<std::size_t> tlsa_match(const TlsaRecord& record, const certs::CertificateChain& chain) {
  if (!record.conformant) return std::nullopt;
  if (record.end_entity()) {
    if (tlsa_references(record, chain.leaf)) return 0;
    return std::nullopt;
  }
  for (std::size_t i = 1; i < chain.size(); ++i)
    if (tlsa_references(record, chain.at(i))) return i;
  return std::nullopt;
}

ConstraintClass constraint_class_of(const std::vector<TlsaRecord>& records) {
  bool ee = false, ta = false;
  for (const auto& r : records) {
    if (!r.conformant) continue;
    ee = ee || r.end_entity();
    ta = ta || r.trust_anchor();
  }
  if (ee && ta) return ConstraintClass::Both;
  if (ee) return ConstraintClass::EndEntityOnly;
  if (ta) return ConstraintClass::TrustAnchorOnly;
  return ConstraintClass::None;
}

bool DaneAssessment::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

DaneAssessment evaluate_dane(std::vector<TlsaRecord> records, const certs::CertificateChain* chain,
                             bool dnssec_secure, const certs::ChainStatus& chain_status) {
  DaneAssessment a;
  a.records = std::move(records);
  a.dnssec_secure = dnssec_secure;
  a.constraint_class = constraint_class_of(a.records);

  bool any_conformant = std::any_of(a.records.begin(), a.records.end(),
                                    [](const TlsaRecord& r) { return r.conformant; });
  if (!dnssec_secure && any_conformant) a.flags.emplace_back(kFlagNoDnssec);
  if (!chain) return a;

  bool chain_valid = chain_status.verdict == certs::ChainVerdict::Valid;
  bool invalid_dane_match = false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    auto idx = tlsa_match(a.records[i], *chain);
    if (!idx) continue;
    a.all_matches.push_back({i, *idx});
    const auto& r = a.records[i];
    if (r.pkix()) {
      a.requires_webpki = true;
      if (chain_valid) a.authenticated = true;
    } else {
      a.authenticated = true;
      if (!chain_valid) invalid_dane_match = true;
    }
  }
  if (!a.all_matches.empty()) a.matched = a.all_matches.front();
  if (invalid_dane_match) a.flags.emplace_back(kFlagInvalidCert);
  return a;
}

std::string_view to_string(ConstraintClass c) {
  switch (c) {
    case ConstraintClass::None: return "None";
    case ConstraintClass::EndEntityOnly: return "EndEntityOnly";
    case ConstraintClass::TrustAnchorOnly: return "TrustAnchorOnly";
    case ConstraintClass::Both: return "Both";
  }
  return "?";
}

}  // namespace pkiaudit::dane
