#include "toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "hfr/types.hpp"

namespace hfr::cli {

namespace {

using nlohmann::json;

class LineParser {
 public:
  LineParser(const std::string& s, int line) : s_(s), line_(line) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

  void SkipSpace() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool AtEnd() {
    SkipSpace();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  bool Consume(char c) {
    SkipSpace();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string Key() {
    SkipSpace();
    if (pos_ < s_.size() && s_[pos_] == '"') return String();
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) Fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::vector<std::string> DottedKey() {
    std::vector<std::string> parts{Key()};
    while (Consume('.')) parts.push_back(Key());
    return parts;
  }

  json Value() {
    SkipSpace();
    if (pos_ >= s_.size()) Fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return String();
    if (c == '[') return Array();
    if (c == '{') Fail("inline tables are not supported");
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return Number();
  }

 private:
  std::string String() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) Fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: Fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) Fail("unterminated string");
    ++pos_;
    return out;
  }

  json Array() {
    ++pos_;  // '['
    json arr = json::array();
    if (Consume(']')) return arr;
    while (true) {
      arr.push_back(Value());
      if (Consume(']')) return arr;
      if (!Consume(',')) Fail("expected ',' or ']' in array");
      if (Consume(']')) return arr;  // trailing comma
    }
  }

  json Number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '+' || s_[pos_] == '-' || s_[pos_] == '.' ||
                                s_[pos_] == '_'))
      ++pos_;
    std::string tok;
    for (std::size_t i = start; i < pos_; ++i)
      if (s_[i] != '_') tok.push_back(s_[i]);
    if (tok.empty()) Fail("expected a value");
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
      } else {
        const long long v = std::stoll(tok, &used);
        if (used == tok.size()) return v;
      }
    } catch (const std::exception&) {
    }
    Fail("invalid value '" + tok + "'");
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

json* Descend(json& root, const std::vector<std::string>& path, LineParser& lp) {
  json* node = &root;
  for (const auto& part : path) {
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (child.is_array()) {
      if (child.empty() || !child.back().is_object()) lp.Fail("'" + part + "' is not a table");
      node = &child.back();
    } else if (child.is_object()) {
      node = &child;
    } else {
      lp.Fail("'" + part + "' is already a value");
    }
  }
  return node;
}

}  // namespace

json parse_toml(const std::string& text) {
  json root = json::object();
  json* current = &root;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineParser lp(line, lineno);
    if (lp.AtEnd()) continue;
    if (lp.Consume('[')) {
      const bool array_table = lp.Consume('[');
      auto path = lp.DottedKey();
      if (!lp.Consume(']') || (array_table && !lp.Consume(']'))) lp.Fail("malformed table header");
      if (!lp.AtEnd()) lp.Fail("trailing characters after table header");
      if (array_table) {
        const std::string last = path.back();
        path.pop_back();
        json* parent = Descend(root, path, lp);
        json& arr = (*parent)[last];
        if (arr.is_null()) arr = json::array();
        if (!arr.is_array()) lp.Fail("'" + last + "' is not an array of tables");
        arr.push_back(json::object());
        current = &arr.back();
      } else {
        current = Descend(root, path, lp);
      }
      continue;
    }
    auto key = lp.DottedKey();
    if (!lp.Consume('=')) lp.Fail("expected '='");
    json value = lp.Value();
    if (!lp.AtEnd()) lp.Fail("trailing characters after value");
    const std::string last = key.back();
    key.pop_back();
    json* target = Descend(*current, key, lp);
    if (target->contains(last)) lp.Fail("duplicate key '" + last + "'");
    (*target)[last] = std::move(value);
  }
  return root;
}

json parse_toml_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_toml(ss.str());
}

}  // namespace hfr::cli
