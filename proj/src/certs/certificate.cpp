#include <openssl/pem.h>

#include <algorithm>
#include <ctime>

#include "ossl.hpp"
#include "pkiaudit/certs.hpp"
#include "pkiaudit/crypto.hpp"
#include "pkiaudit/net.hpp"

namespace pkiaudit::certs {

namespace {

std::string asn1_to_utf8(const ASN1_STRING* s) {
  unsigned char* out = nullptr;
  int len = ASN1_STRING_to_UTF8(&out, s);
  if (len < 0) return {};
  std::string text(reinterpret_cast<char*>(out), static_cast<std::size_t>(len));
  OPENSSL_free(out);
  return text;
}

std::string name_field(const X509_NAME* name, int nid) {
  int idx = X509_NAME_get_index_by_NID(name, nid, -1);
  if (idx < 0) return {};
  return asn1_to_utf8(X509_NAME_ENTRY_get_data(X509_NAME_get_entry(name, idx)));
}

DistinguishedName read_name(const X509_NAME* name) {
  DistinguishedName dn;
  ossl::BioPtr bio(BIO_new(BIO_s_mem()));
  X509_NAME_print_ex(bio.get(), name, 0, XN_FLAG_RFC2253 & ~ASN1_STRFLGS_ESC_MSB);
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  dn.text.assign(data, static_cast<std::size_t>(len));
  dn.organization = name_field(name, NID_organizationName);
  dn.common_name = name_field(name, NID_commonName);
  return dn;
}

Timestamp read_time(const ASN1_TIME* t) {
  std::tm tm{};
  if (!ASN1_TIME_to_tm(t, &tm)) throw CertificateParseError("unparseable validity time");
  using namespace std::chrono;
  year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                     day{static_cast<unsigned>(tm.tm_mday)}};
  return sys_days(ymd) + hours(tm.tm_hour) + minutes(tm.tm_min) + seconds(tm.tm_sec);
}

Bytes extension_octets(X509* x, int nid) {
  int idx = X509_get_ext_by_NID(x, nid, -1);
  if (idx < 0) return {};
  const ASN1_OCTET_STRING* data = X509_EXTENSION_get_data(X509_get_ext(x, idx));
  return Bytes(ASN1_STRING_get0_data(data), ASN1_STRING_get0_data(data) + ASN1_STRING_length(data));
}

}  // namespace

Certificate Certificate::from_der(ByteView der) {
  auto x = ossl::parse_x509(der);
  if (!x) throw CertificateParseError("DER does not decode as a certificate: " + ossl::last_error());

  Certificate c;
  c.der.assign(der.begin(), der.end());
  c.subject = read_name(X509_get_subject_name(x.get()));
  c.issuer = read_name(X509_get_issuer_name(x.get()));
  c.not_before = read_time(X509_get0_notBefore(x.get()));
  c.not_after = read_time(X509_get0_notAfter(x.get()));
  if (c.not_after < c.not_before) throw CertificateParseError("notAfter precedes notBefore");

  unsigned char* spki = nullptr;
  int spki_len = i2d_X509_PUBKEY(X509_get_X509_PUBKEY(x.get()), &spki);
  if (spki_len <= 0) throw CertificateParseError("missing subject public key info");
  c.spki_der.assign(spki, spki + spki_len);
  OPENSSL_free(spki);

  if (BIGNUM* bn = ASN1_INTEGER_to_BN(X509_get0_serialNumber(x.get()), nullptr)) {
    char* hex = BN_bn2hex(bn);
    c.serial = to_lower(hex);
    OPENSSL_free(hex);
    BN_free(bn);
  }

  // Forces extension caching; a negative value signals undecodable extensions.
  if (X509_check_purpose(x.get(), -1, 0) < 0 || (X509_get_extension_flags(x.get()) & EXFLAG_INVALID))
    throw CertificateParseError("invalid extensions");
  c.is_ca = (X509_get_extension_flags(x.get()) & EXFLAG_CA) != 0;

  if (auto* names = static_cast<GENERAL_NAMES*>(
          X509_get_ext_d2i(x.get(), NID_subject_alt_name, nullptr, nullptr))) {
    for (int i = 0; i < sk_GENERAL_NAME_num(names); ++i) {
      const GENERAL_NAME* gn = sk_GENERAL_NAME_value(names, i);
      if (gn->type == GEN_DNS) c.san.push_back(to_lower(asn1_to_utf8(gn->d.dNSName)));
    }
    GENERAL_NAMES_free(names);
  }

  if (auto* aia = static_cast<AUTHORITY_INFO_ACCESS*>(
          X509_get_ext_d2i(x.get(), NID_info_access, nullptr, nullptr))) {
    for (int i = 0; i < sk_ACCESS_DESCRIPTION_num(aia); ++i) {
      const ACCESS_DESCRIPTION* ad = sk_ACCESS_DESCRIPTION_value(aia, i);
      if (ad->location->type != GEN_URI) continue;
      try {
        auto url = net::parse_url(asn1_to_utf8(ad->location->d.uniformResourceIdentifier));
        if (std::find(c.aia_hosts.begin(), c.aia_hosts.end(), url.host) == c.aia_hosts.end())
          c.aia_hosts.push_back(url.host);
      } catch (const InputError&) {
      }
    }
    AUTHORITY_INFO_ACCESS_free(aia);
  }

  c.is_precert = X509_get_ext_by_NID(x.get(), NID_ct_precert_poison, -1) >= 0;

  auto sct_ext = extension_octets(x.get(), NID_ct_precert_scts);
  if (!sct_ext.empty()) {
    const unsigned char* p = sct_ext.data();
    ASN1_OCTET_STRING* inner = d2i_ASN1_OCTET_STRING(nullptr, &p, static_cast<long>(sct_ext.size()));
    if (!inner) throw CertificateParseError("SCT list extension is not an OCTET STRING");
    ByteView list(ASN1_STRING_get0_data(inner), static_cast<std::size_t>(ASN1_STRING_length(inner)));
    auto scts = parse_sct_list(list);
    ASN1_OCTET_STRING_free(inner);
    if (!scts) throw CertificateParseError("malformed SCT list");
    c.embedded_scts = std::move(*scts);
  }
  return c;
}

std::string Certificate::fingerprint_sha256() const { return hex_encode(sha256(der)); }

std::vector<Certificate> parse_pem_bundle(std::string_view pem) {
  std::vector<Certificate> out;
  ossl::BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  for (;;) {
    char* name = nullptr;
    char* header = nullptr;
    unsigned char* data = nullptr;
    long len = 0;
    if (!PEM_read_bio(bio.get(), &name, &header, &data, &len)) {
      ERR_clear_error();
      break;
    }
    std::string block_name(name);
    Bytes der(data, data + len);
    OPENSSL_free(name);
    OPENSSL_free(header);
    OPENSSL_free(data);
    if (block_name != "CERTIFICATE" && block_name != "TRUSTED CERTIFICATE") continue;
    out.push_back(Certificate::from_der(der));
  }
  return out;
}

std::string to_pem(const Certificate& cert) {
  auto b64 = base64_encode(cert.der);
  std::string out = "-----BEGIN CERTIFICATE-----\n";
  for (std::size_t i = 0; i < b64.size(); i += 64) out += b64.substr(i, 64) + "\n";
  out += "-----END CERTIFICATE-----\n";
  return out;
}

Bytes reencode_der(ByteView der) {
  auto x = ossl::parse_x509(der);
  if (!x) throw CertificateParseError("DER does not decode as a certificate");
  unsigned char* out = nullptr;
  int len = i2d_X509(x.get(), &out);
  if (len <= 0) throw CertificateParseError("re-encoding failed");
  Bytes result(out, out + len);
  OPENSSL_free(out);
  return result;
}

NameMatch name_matches(const Certificate& cert, std::string_view name) {
  auto target = to_lower(name);
  if (!target.empty() && target.back() == '.') target.pop_back();
  for (const auto& san : cert.san)
    if (san == target) return NameMatch::ExactSan;
  auto dot = target.find('.');
  if (dot == std::string::npos) return NameMatch::NoMatch;
  std::string_view parent = std::string_view(target).substr(dot + 1);
  for (const auto& san : cert.san) {
    if (san.size() > 2 && san.starts_with("*.") && std::string_view(san).substr(2) == parent &&
        parent.find('.') != std::string_view::npos)
      return NameMatch::WildcardSan;
  }
  return NameMatch::NoMatch;
}

CertificateChain chain_from_der(const std::vector<Bytes>& blobs, std::string sni, Timestamp fetched_at) {
  if (blobs.empty()) throw CertificateParseError("no certificates presented");
  CertificateChain chain{Certificate::from_der(blobs.front()), {}, fetched_at, std::move(sni), true, {}};
  for (std::size_t i = 1; i < blobs.size(); ++i) {
    try {
      chain.intermediates.push_back(Certificate::from_der(blobs[i]));
    } catch (const CertificateParseError&) {
      chain.unparseable.push_back(blobs[i]);
    }
  }
  return chain;
}

const Certificate* leaf_issuer(const CertificateChain& chain) {
  for (const auto& c : chain.intermediates)
    if (c.subject == chain.leaf.issuer) return &c;
  return nullptr;
}

namespace {

std::vector<std::string> domain_hints(const Certificate& leaf) {
  std::vector<std::string> hints;
  auto add = [&](std::string h) {
    if (std::find(hints.begin(), hints.end(), h) == hints.end()) hints.push_back(std::move(h));
  };
  for (const auto& host : leaf.aia_hosts) {
    std::string_view rest = host;
    while (std::count(rest.begin(), rest.end(), '.') >= 1) {
      add(std::string(rest));
      rest.remove_prefix(rest.find('.') + 1);
    }
  }
  return hints;
}

}  // namespace

caa::CaIdentity issuer_identity(const Certificate& leaf) {
  caa::CaIdentity id;
  id.organization = leaf.self_issued() ? leaf.subject.organization : leaf.issuer.organization;
  id.domain_hints = domain_hints(leaf);
  return id;
}

caa::CaIdentity issuer_identity(const CertificateChain& chain) {
  auto id = issuer_identity(chain.leaf);
  if (const auto* signer = leaf_issuer(chain); signer && !signer->subject.organization.empty())
    id.organization = signer->subject.organization;
  return id;
}

std::string_view to_string(NameMatch m) {
  switch (m) {
    case NameMatch::ExactSan: return "ExactSan";
    case NameMatch::WildcardSan: return "WildcardSan";
    case NameMatch::NoMatch: return "NoMatch";
  }
  return "?";
}

std::string_view to_string(ChainVerdict v) {
  switch (v) {
    case ChainVerdict::Valid: return "Valid";
    case ChainVerdict::Expired: return "Expired";
    case ChainVerdict::Untrusted: return "Untrusted";
    case ChainVerdict::Malformed: return "Malformed";
  }
  return "?";
}

}  // namespace pkiaudit::certs
