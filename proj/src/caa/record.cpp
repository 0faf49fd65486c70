#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <numeric>

#include "pkiaudit/caa.hpp"

namespace pkiaudit::caa {

namespace {

constexpr std::array<std::string_view, 5> kStandardTags = {"issue", "issuewild", "iodef",
                                                           "contactemail", "contactphone"};

// Tags defined outside RFC 8659 or reserved by it.
constexpr std::array<std::string_view, 7> kRecognizedElsewhere = {
    "contactemail", "contactphone", "issuemail", "issuevmc", "auth", "path", "policy"};

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_wsp(char c) { return c == ' ' || c == '\t'; }

class IssueParser {
 public:
  explicit IssueParser(std::string_view in) : in_(in) {}

  IssueValue run() {
    IssueValue out;
    skip_wsp();
    if (pos_ < in_.size() && is_alnum(in_[pos_])) {
      auto domain = domain_name();
      if (!domain) return malformed();
      out.issuer_domain = std::string(*domain);
      skip_wsp();
    }
    if (pos_ < in_.size() && in_[pos_] == ';') {
      ++pos_;
      skip_wsp();
      if (pos_ < in_.size()) {
        if (!parameters(out.parameters)) return malformed();
      }
    }
    if (pos_ != in_.size()) return malformed();
    out.kind = out.issuer_domain ? IssueKind::Issuer : IssueKind::ExplicitEmpty;
    return out;
  }

 private:
  static IssueValue malformed() { return IssueValue{}; }

  void skip_wsp() {
    while (pos_ < in_.size() && is_wsp(in_[pos_])) ++pos_;
  }

  // (ALPHA / DIGIT) *( *("-") (ALPHA / DIGIT))
  std::optional<std::string_view> label() {
    auto start = pos_;
    if (pos_ >= in_.size() || !is_alnum(in_[pos_])) return std::nullopt;
    ++pos_;
    while (pos_ < in_.size() && (is_alnum(in_[pos_]) || in_[pos_] == '-')) ++pos_;
    if (in_[pos_ - 1] == '-') return std::nullopt;
    return in_.substr(start, pos_ - start);
  }

  std::optional<std::string_view> domain_name() {
    auto start = pos_;
    if (!label()) return std::nullopt;
    while (pos_ < in_.size() && in_[pos_] == '.') {
      ++pos_;
      if (!label()) return std::nullopt;
    }
    return in_.substr(start, pos_ - start);
  }

  bool parameters(std::vector<std::pair<std::string, std::string>>& out) {
    for (;;) {
      auto tag = label();
      if (!tag) return false;
      skip_wsp();
      if (pos_ >= in_.size() || in_[pos_] != '=') return false;
      ++pos_;
      skip_wsp();
      auto start = pos_;
      while (pos_ < in_.size()) {
        auto c = static_cast<unsigned char>(in_[pos_]);
        if (c < 0x21 || c > 0x7e || c == ';') break;
        ++pos_;
      }
      out.emplace_back(std::string(*tag), std::string(in_.substr(start, pos_ - start)));
      skip_wsp();
      if (pos_ >= in_.size()) return true;
      if (in_[pos_] != ';') return false;
      ++pos_;
      skip_wsp();
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

UnknownKind triage_unknown(const std::string& lowered) {
  if (std::find(kRecognizedElsewhere.begin(), kRecognizedElsewhere.end(), lowered) !=
      kRecognizedElsewhere.end())
    return UnknownKind::UnrecognizedKnownElsewhere;
  bool clean = !lowered.empty() && std::all_of(lowered.begin(), lowered.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
  if (!clean) return UnknownKind::MalformedFormat;
  for (auto standard : kStandardTags)
    if (tag_edit_distance(lowered, standard) <= 2) return UnknownKind::Misspelling;
  return UnknownKind::UnrecognizedKnownElsewhere;
}

}  // namespace

int tag_edit_distance(std::string_view a, std::string_view b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

IssueValue parse_issue_value(std::string_view value) { return IssueParser(value).run(); }

CaaRecord parse_caa_record(int flags, std::string_view tag, std::string_view value) {
  CaaRecord record;
  record.flags = static_cast<std::uint8_t>(std::clamp(flags, 0, 255));
  record.tag = std::string(tag);
  record.value = std::string(value);
  auto lowered = to_lower(tag);
  if (lowered == "issue") {
    record.tag_kind = TagKind::Issue;
  } else if (lowered == "issuewild") {
    record.tag_kind = TagKind::IssueWild;
  } else if (lowered == "iodef") {
    record.tag_kind = TagKind::Iodef;
  } else {
    record.tag_kind = TagKind::Unknown;
    record.unknown_kind = triage_unknown(lowered);
  }
  if (record.tag_kind == TagKind::Issue || record.tag_kind == TagKind::IssueWild)
    record.issue = parse_issue_value(value);
  return record;
}

namespace {

// Decodes a <character-string>: quoted with \X and \DDD escapes, or bare.
std::optional<std::string> unquote(std::string_view text) {
  text = trim(text);
  if (text.empty() || text.front() != '"') {
    if (text.find_first_of(" \t") != std::string_view::npos) return std::nullopt;
    return std::string(text);
  }
  std::string out;
  std::size_t i = 1;
  while (i < text.size() && text[i] != '"') {
    if (text[i] == '\\' && i + 1 < text.size()) {
      if (i + 3 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 2])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 3]))) {
        int code = (text[i + 1] - '0') * 100 + (text[i + 2] - '0') * 10 + (text[i + 3] - '0');
        if (code > 255) return std::nullopt;
        out.push_back(static_cast<char>(code));
        i += 4;
      } else {
        out.push_back(text[i + 1]);
        i += 2;
      }
    } else {
      out.push_back(text[i++]);
    }
  }
  if (i >= text.size() || i + 1 != text.size()) return std::nullopt;
  return out;
}

std::optional<CaaRecord> parse_generic(std::string_view data) {
  // \# <len> <hex...>
  auto rest = trim(data.substr(2));
  auto space = rest.find_first_of(" \t");
  if (space == std::string_view::npos) return std::nullopt;
  std::size_t len = 0;
  auto len_text = rest.substr(0, space);
  auto [p, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (ec != std::errc() || p != len_text.data() + len_text.size()) return std::nullopt;
  std::string hex;
  for (char c : rest.substr(space))
    if (!is_wsp(c)) hex.push_back(c);
  auto bytes = hex_decode(hex);
  if (!bytes || bytes->size() != len || len < 2) return std::nullopt;
  std::size_t tag_len = (*bytes)[1];
  if (tag_len == 0 || 2 + tag_len > bytes->size()) return std::nullopt;
  std::string tag(bytes->begin() + 2, bytes->begin() + 2 + static_cast<long>(tag_len));
  std::string value(bytes->begin() + 2 + static_cast<long>(tag_len), bytes->end());
  return parse_caa_record((*bytes)[0], tag, value);
}

}  // namespace

std::optional<CaaRecord> parse_caa_presentation(std::string_view data) {
  data = trim(data);
  if (data.starts_with("\\#")) return parse_generic(data);
  auto first = data.find_first_of(" \t");
  if (first == std::string_view::npos) return std::nullopt;
  int flags = 0;
  auto flag_text = data.substr(0, first);
  auto [p, ec] = std::from_chars(flag_text.data(), flag_text.data() + flag_text.size(), flags);
  if (ec != std::errc() || p != flag_text.data() + flag_text.size() || flags < 0 || flags > 255)
    return std::nullopt;
  auto rest = trim(data.substr(first));
  auto second = rest.find_first_of(" \t");
  std::string_view tag = second == std::string_view::npos ? rest : rest.substr(0, second);
  std::string_view value_text = second == std::string_view::npos ? "" : rest.substr(second);
  if (tag.empty()) return std::nullopt;
  auto value = value_text.empty() ? std::optional<std::string>("") : unquote(value_text);
  if (!value) return std::nullopt;
  return parse_caa_record(flags, tag, *value);
}

std::string to_presentation(const CaaRecord& record) {
  std::string out = std::to_string(record.flags) + " " + record.tag + " \"";
  for (unsigned char c : record.value) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(static_cast<char>(c));
    } else if (c < 0x20 || c > 0x7e) {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\%03u", c);
      out += buf;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  out.push_back('"');
  return out;
}

std::optional<RelevantCaaSet> relevant_caa_set(std::span<const dns::CaaLookup> walk) {
  for (std::size_t depth = 0; depth < walk.size(); ++depth) {
    const auto& lookup = walk[depth];
    if (lookup.response.status != dns::Status::NoError) continue;
    std::vector<CaaRecord> records;
    for (const auto& rr : lookup.response.records) {
      if (rr.type != dns::RrType::CAA) continue;
      auto parsed = parse_caa_presentation(rr.data);
      if (!parsed) {
        // Undecodable RR: keep it visible as a malformed unknown record.
        parsed = CaaRecord{};
        parsed->value = rr.data;
        parsed->unknown_kind = UnknownKind::MalformedFormat;
      }
      records.push_back(std::move(*parsed));
    }
    if (!records.empty())
      return RelevantCaaSet{lookup.name, static_cast<int>(depth), std::move(records)};
  }
  return std::nullopt;
}

std::string_view to_string(TagKind kind) {
  switch (kind) {
    case TagKind::Issue: return "issue";
    case TagKind::IssueWild: return "issuewild";
    case TagKind::Iodef: return "iodef";
    case TagKind::Unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(UnknownKind kind) {
  switch (kind) {
    case UnknownKind::UnrecognizedKnownElsewhere: return "UnrecognizedKnownElsewhere";
    case UnknownKind::Misspelling: return "Misspelling";
    case UnknownKind::MalformedFormat: return "MalformedFormat";
  }
  return "?";
}

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::Issuer: return "Issuer";
    case IssueKind::ExplicitEmpty: return "ExplicitEmpty";
    case IssueKind::Malformed: return "Malformed";
  }
  return "?";
}

std::string_view to_string(IodefKind kind) {
  switch (kind) {
    case IodefKind::Valid: return "Valid";
    case IodefKind::InvalidScheme: return "InvalidScheme";
    case IodefKind::LikelyEmail: return "LikelyEmail";
    case IodefKind::LikelyHttp: return "LikelyHttp";
    case IodefKind::Garbage: return "Garbage";
  }
  return "?";
}

std::string_view to_string(MatchState state) {
  switch (state) {
    case MatchState::NoCaa: return "NoCaa";
    case MatchState::ImplicitMatch: return "ImplicitMatch";
    case MatchState::IssuerMatch: return "IssuerMatch";
    case MatchState::IssuerMismatch: return "IssuerMismatch";
    case MatchState::MalformedMismatch: return "MalformedMismatch";
    case MatchState::EmptyMismatch: return "EmptyMismatch";
  }
  return "?";
}

std::string_view to_string(NameKind kind) { return kind == NameKind::Fqdn ? "FQDN" : "Wildcard"; }

std::optional<MatchState> match_state_from_string(std::string_view text) {
  for (auto s : {MatchState::NoCaa, MatchState::ImplicitMatch, MatchState::IssuerMatch,
                 MatchState::IssuerMismatch, MatchState::MalformedMismatch,
                 MatchState::EmptyMismatch})
    if (text == to_string(s)) return s;
  return std::nullopt;
}

bool is_mismatch(MatchState state) {
  return state == MatchState::IssuerMismatch || state == MatchState::MalformedMismatch ||
         state == MatchState::EmptyMismatch;
}

}  // namespace pkiaudit::caa
