#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pkiaudit/caa.hpp"

namespace pkiaudit::caa {

namespace {

using nlohmann::json;

// Streams the document so that repeated keys are merged instead of the
// last one silently winning.
class MappingSax : public nlohmann::json_sax<json> {
 public:
  explicit MappingSax(std::map<std::string, CaMapping::Identities, std::less<>>& out) : out_(out) {}

  std::string error;

  bool null() override { return fail("null value"); }
  bool boolean(bool) override { return fail("boolean value"); }
  bool number_integer(number_integer_t) override { return fail("number value"); }
  bool number_unsigned(number_unsigned_t) override { return fail("number value"); }
  bool number_float(number_float_t, const string_t&) override { return fail("number value"); }
  bool binary(binary_t&) override { return fail("binary value"); }

  bool string(string_t& val) override {
    if (depth_ != 2) return fail("organization names must be inside an array");
    if (trim(val).empty()) return fail("empty organization name for '" + key_ + "'");
    pending_.insert(val);
    return true;
  }

  bool start_object(std::size_t) override {
    if (depth_ != 0) return fail("nested objects are not allowed");
    ++depth_;
    return true;
  }

  bool key(string_t& val) override {
    auto lowered = to_lower(trim(val));
    if (!dns::DomainName::is_valid(lowered)) return fail("invalid CAA string '" + val + "'");
    key_ = lowered;
    return true;
  }

  bool end_object() override {
    --depth_;
    return true;
  }

  bool start_array(std::size_t) override {
    if (depth_ != 1) return fail("arrays are only allowed as mapping values");
    ++depth_;
    pending_.clear();
    return true;
  }

  bool end_array() override {
    --depth_;
    if (pending_.empty()) return fail("no organizations listed for '" + key_ + "'");
    out_[key_].insert(pending_.begin(), pending_.end());
    return true;
  }

  bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) override {
    return fail("offset " + std::to_string(pos) + ": " + ex.what());
  }

 private:
  bool fail(std::string message) {
    if (error.empty()) error = std::move(message);
    return false;
  }

  std::map<std::string, CaMapping::Identities, std::less<>>& out_;
  int depth_ = 0;
  std::string key_;
  CaMapping::Identities pending_;
};

}  // namespace

CaMapping CaMapping::from_json_text(std::string_view text) {
  CaMapping mapping;
  if (trim(text).empty()) return mapping;
  MappingSax sax(mapping.entries_);
  bool ok = json::sax_parse(text.begin(), text.end(), &sax);
  if (!ok) throw ConfigError("invalid CA mapping: " + (sax.error.empty() ? "syntax error" : sax.error));
  return mapping;
}

CaMapping CaMapping::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CA mapping " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

const CaMapping::Identities* CaMapping::lookup(std::string_view caa_string) const {
  auto it = entries_.find(to_lower(caa_string));
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace pkiaudit::caa
