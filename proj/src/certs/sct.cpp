#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ossl.hpp"
#include "pkiaudit/certs.hpp"
#include "pkiaudit/crypto.hpp"

namespace pkiaudit::certs {

namespace {

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  bool read(std::size_t n, std::uint64_t& out) {
    if (pos_ + n > data_.size()) return false;
    out = 0;
    for (std::size_t i = 0; i < n; ++i) out = out << 8 | data_[pos_++];
    return true;
  }

  bool bytes(std::size_t n, Bytes& out) {
    if (pos_ + n > data_.size()) return false;
    out.assign(data_.begin() + static_cast<long>(pos_), data_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return true;
  }

  bool vector(std::size_t length_bytes, Bytes& out) {
    std::uint64_t len = 0;
    return read(length_bytes, len) && bytes(len, out);
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

void put(Bytes& out, std::uint64_t value, std::size_t n) {
  for (std::size_t i = n; i-- > 0;) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

void put_vector(Bytes& out, ByteView data, std::size_t length_bytes) {
  put(out, data.size(), length_bytes);
  out.insert(out.end(), data.begin(), data.end());
}

}  // namespace

std::optional<Sct> parse_sct(ByteView serialized) {
  Reader r(serialized);
  Sct sct;
  std::uint64_t v = 0;
  if (!r.read(1, v)) return std::nullopt;
  sct.version = static_cast<std::uint8_t>(v);
  if (sct.version != 0) return std::nullopt;
  if (!r.bytes(32, sct.log_id) || !r.read(8, sct.timestamp) || !r.vector(2, sct.extensions))
    return std::nullopt;
  if (!r.read(1, v)) return std::nullopt;
  sct.hash_algorithm = static_cast<std::uint8_t>(v);
  if (!r.read(1, v)) return std::nullopt;
  sct.signature_algorithm = static_cast<std::uint8_t>(v);
  if (!r.vector(2, sct.signature) || !r.done()) return std::nullopt;
  return sct;
}

Bytes serialize_sct(const Sct& sct) {
  Bytes out;
  put(out, sct.version, 1);
  out.insert(out.end(), sct.log_id.begin(), sct.log_id.end());
  put(out, sct.timestamp, 8);
  put_vector(out, sct.extensions, 2);
  put(out, sct.hash_algorithm, 1);
  put(out, sct.signature_algorithm, 1);
  put_vector(out, sct.signature, 2);
  return out;
}

std::optional<std::vector<Bytes>> parse_sct_list(ByteView list) {
  Reader outer(list);
  Bytes body;
  if (!outer.vector(2, body) || !outer.done()) return std::nullopt;
  Reader r(body);
  std::vector<Bytes> out;
  while (!r.done()) {
    Bytes one;
    if (!r.vector(2, one) || one.empty()) return std::nullopt;
    out.push_back(std::move(one));
  }
  return out;
}

Bytes serialize_sct_list(const std::vector<Bytes>& scts) {
  Bytes body;
  for (const auto& s : scts) put_vector(body, s, 2);
  Bytes out;
  put_vector(out, body, 2);
  return out;
}

// ---------------------------------------------------------------------------

LogList LogList::from_json_text(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("log list is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("operators") || !doc["operators"].is_array())
    throw ConfigError("log list lacks an operators array");

  LogList list;
  for (const auto& op : doc["operators"]) {
    auto operator_name = op.value("name", std::string());
    if (!op.contains("logs")) continue;
    for (const auto& log : op["logs"]) {
      if (!log.contains("key") || !log["key"].is_string())
        throw ConfigError("log entry without key under operator " + operator_name);
      CtLog entry;
      entry.key_der = base64_decode(log["key"].get<std::string>());
      entry.log_id = log.contains("log_id") ? base64_decode(log["log_id"].get<std::string>())
                                            : sha256(entry.key_der);
      if (entry.log_id.size() != 32) throw ConfigError("log_id must be 32 octets");
      entry.operator_name = operator_name;
      entry.description = log.value("description", std::string());
      entry.url = log.value("url", std::string());
      if (log.contains("state") && log["state"].is_object() && !log["state"].empty())
        entry.state = log["state"].begin().key();
      list.logs_[entry.log_id] = std::move(entry);
    }
  }
  return list;
}

LogList LogList::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log list " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

const CtLog* LogList::find(ByteView log_id) const {
  auto it = logs_.find(Bytes(log_id.begin(), log_id.end()));
  return it == logs_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------

Bytes precert_tbs(const Certificate& leaf) {
  auto x = ossl::parse_x509(leaf.der);
  if (!x) throw CertificateParseError("leaf does not decode");
  int idx = X509_get_ext_by_NID(x.get(), NID_ct_precert_scts, -1);
  if (idx >= 0) X509_EXTENSION_free(X509_delete_ext(x.get(), idx));
  unsigned char* out = nullptr;
  int len = i2d_re_X509_tbs(x.get(), &out);
  if (len <= 0) throw CertificateParseError("TBS re-encoding failed");
  Bytes tbs(out, out + len);
  OPENSSL_free(out);
  return tbs;
}

namespace {

// RFC 6962 digitally-signed input for a precert_entry.
Bytes signed_precert_data(const Sct& sct, ByteView issuer_key_hash, ByteView tbs) {
  Bytes out;
  put(out, sct.version, 1);
  put(out, 0, 1);  // certificate_timestamp
  put(out, sct.timestamp, 8);
  put(out, 1, 2);  // precert_entry
  out.insert(out.end(), issuer_key_hash.begin(), issuer_key_hash.end());
  put_vector(out, tbs, 3);
  put_vector(out, sct.extensions, 2);
  return out;
}

bool verify_signature(ByteView key_der, ByteView data, ByteView signature) {
  const unsigned char* p = key_der.data();
  ossl::PkeyPtr key(d2i_PUBKEY(nullptr, &p, static_cast<long>(key_der.size())));
  if (!key) {
    ERR_clear_error();
    return false;
  }
  ossl::MdCtxPtr ctx(EVP_MD_CTX_new());
  bool ok = EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) == 1 &&
            EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), data.data(), data.size()) == 1;
  ERR_clear_error();
  return ok;
}

}  // namespace

std::vector<SctVerdict> verify_scts(const Certificate& leaf, const Certificate* issuer,
                                    const LogList& logs) {
  std::vector<SctVerdict> verdicts;
  std::optional<Bytes> tbs;
  for (const auto& raw : leaf.embedded_scts) {
    SctVerdict v;
    auto sct = parse_sct(raw);
    if (!sct) {
      v.detail = "undecodable SCT";
      verdicts.push_back(std::move(v));
      continue;
    }
    v.log_id = sct->log_id;
    v.timestamp = sct->timestamp;
    const CtLog* log = logs.find(sct->log_id);
    if (!log) {
      v.detail = "log not in known-logs list";
      verdicts.push_back(std::move(v));
      continue;
    }
    v.known_log = true;
    v.log_operator = log->operator_name;
    v.log_rejected = log->rejected();
    if (!issuer) {
      v.detail = "issuer certificate not available";
    } else if (sct->hash_algorithm != 4) {
      v.detail = "unsupported hash algorithm";
    } else {
      if (!tbs) tbs = precert_tbs(leaf);
      auto data = signed_precert_data(*sct, sha256(issuer->spki_der), *tbs);
      v.signature_ok = verify_signature(log->key_der, data, sct->signature);
      v.detail = v.signature_ok ? "ok" : "signature does not verify";
    }
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

}  // namespace pkiaudit::certs
