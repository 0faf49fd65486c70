#include <fstream>
#include <set>
#include <sstream>

#include "ossl.hpp"
#include "pkiaudit/certs.hpp"

namespace pkiaudit::certs {

struct TrustStore::Native {
  ossl::StorePtr store;
};

TrustStore TrustStore::from_pem_text(std::string_view pem) {
  TrustStore ts;
  try {
    ts.roots_ = parse_pem_bundle(pem);
  } catch (const CertificateParseError& e) {
    throw ConfigError(std::string("unparseable trust store certificate: ") + e.what());
  }
  ts.native_ = std::make_shared<Native>();
  ts.native_->store.reset(X509_STORE_new());
  for (const auto& root : ts.roots_) {
    auto x = ossl::parse_x509(root.der);
    // X509_STORE_add_cert takes its own reference.
    if (!x || !X509_STORE_add_cert(ts.native_->store.get(), x.get())) ERR_clear_error();
  }
  return ts;
}

TrustStore TrustStore::from_pem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trust store " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_pem_text(buffer.str());
}

namespace {

enum class Failure { Time, Trust, Encoding };

Failure classify(int error) {
  switch (error) {
    case X509_V_ERR_CERT_HAS_EXPIRED:
    case X509_V_ERR_CERT_NOT_YET_VALID:
      return Failure::Time;
    case X509_V_ERR_ERROR_IN_CERT_NOT_BEFORE_FIELD:
    case X509_V_ERR_ERROR_IN_CERT_NOT_AFTER_FIELD:
    case X509_V_ERR_UNABLE_TO_DECODE_ISSUER_PUBLIC_KEY:
    case X509_V_ERR_UNABLE_TO_DECRYPT_CERT_SIGNATURE:
    case X509_V_ERR_INVALID_EXTENSION:
    case X509_V_ERR_UNHANDLED_CRITICAL_EXTENSION:
    case X509_V_ERR_UNSUPPORTED_SIGNATURE_ALGORITHM:
    case X509_V_ERR_SIGNATURE_ALGORITHM_MISMATCH:
      return Failure::Encoding;
    default:
      return Failure::Trust;
  }
}

struct Collected {
  std::set<int> errors;
};

int collected_index() {
  static int idx = X509_STORE_CTX_get_ex_new_index(0, nullptr, nullptr, nullptr, nullptr);
  return idx;
}

}  // namespace

ChainStatus validate_chain(const CertificateChain& chain, const TrustStore& store, Timestamp at) {
  if (!chain.unparseable.empty())
    return {ChainVerdict::Malformed, std::to_string(chain.unparseable.size()) +
                                         " presented certificate(s) failed to parse",
            std::nullopt};

  auto leaf = ossl::parse_x509(chain.leaf.der);
  if (!leaf) return {ChainVerdict::Malformed, "leaf does not decode", std::nullopt};
  ossl::X509StackPtr untrusted(sk_X509_new_null());
  std::vector<ossl::X509Ptr> owned;
  for (const auto& c : chain.intermediates) {
    auto x = ossl::parse_x509(c.der);
    if (!x) return {ChainVerdict::Malformed, "intermediate does not decode", std::nullopt};
    sk_X509_push(untrusted.get(), x.get());
    owned.push_back(std::move(x));
  }

  ossl::StoreCtxPtr ctx(X509_STORE_CTX_new());
  if (!X509_STORE_CTX_init(ctx.get(), store.native().store.get(), leaf.get(), untrusted.get()))
    return {ChainVerdict::Malformed, ossl::last_error(), std::nullopt};

  Collected collected;
  int idx = collected_index();
  X509_STORE_CTX_set_ex_data(ctx.get(), idx, &collected);
  X509_STORE_CTX_set_verify_cb(ctx.get(), [](int ok, X509_STORE_CTX* c) -> int {
    if (!ok) {
      auto* col = static_cast<Collected*>(X509_STORE_CTX_get_ex_data(c, collected_index()));
      if (col) col->errors.insert(X509_STORE_CTX_get_error(c));
    }
    return 1;
  });
  X509_VERIFY_PARAM* param = X509_STORE_CTX_get0_param(ctx.get());
  X509_VERIFY_PARAM_set_time(param, static_cast<time_t>(at.time_since_epoch().count()));

  int rc = X509_verify_cert(ctx.get());
  if (rc < 0) return {ChainVerdict::Malformed, ossl::last_error(), std::nullopt};
  ERR_clear_error();

  bool time = false, trust = false, encoding = false;
  std::string detail;
  for (int e : collected.errors) {
    switch (classify(e)) {
      case Failure::Time: time = true; break;
      case Failure::Trust: trust = true; break;
      case Failure::Encoding: encoding = true; break;
    }
    if (!detail.empty()) detail += "; ";
    detail += X509_verify_cert_error_string(e);
  }

  if (rc == 0 && collected.errors.empty()) {
    trust = true;
    detail = X509_verify_cert_error_string(X509_STORE_CTX_get_error(ctx.get()));
  }

  std::optional<std::string> anchor;
  if (STACK_OF(X509)* built = X509_STORE_CTX_get0_chain(ctx.get()); built && !trust && !encoding) {
    X509* top = sk_X509_value(built, sk_X509_num(built) - 1);
    char buf[512];
    X509_NAME_oneline(X509_get_subject_name(top), buf, sizeof buf);
    anchor = buf;
  }

  if (encoding) return {ChainVerdict::Malformed, detail, std::nullopt};
  if (trust) return {ChainVerdict::Untrusted, detail, std::nullopt};
  if (time) return {ChainVerdict::Expired, detail, anchor};
  return {ChainVerdict::Valid, "ok", anchor};
}

}  // namespace pkiaudit::certs
