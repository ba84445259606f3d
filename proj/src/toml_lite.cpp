#include "fts/toml_lite.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <vector>

namespace fts {

int TomlDocument::line_of(const std::string& path) const {
  auto it = lines.find(path);
  return it == lines.end() ? 0 : it->second;
}

namespace {

using nlohmann::json;

class Parser {
 public:
  Parser(const std::string& text, std::string source)
      : s_(text), source_(std::move(source)) {}

  TomlDocument run() {
    json* table = &doc_.root;
    std::string prefix;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        if (peek(1) == '[') fail("arrays of tables are not supported");
        ++pos_;
        skip_ws();
        std::vector<std::string> path = parse_key_path();
        skip_ws();
        expect(']');
        const int header_line = line_;
        end_of_line();
        prefix.clear();
        table = &doc_.root;
        for (std::size_t i = 0; i < path.size(); ++i) {
          prefix += (i ? "." : "") + path[i];
          json& next = (*table)[path[i]];
          if (next.is_null()) {
            next = json::object();
          } else if (!next.is_object()) {
            fail_at(header_line, "'" + prefix + "' is already a value");
          } else if (i + 1 == path.size() && headers_.count(prefix)) {
            fail_at(header_line, "table [" + prefix + "] defined twice");
          }
          if (!doc_.lines.count(prefix)) doc_.lines[prefix] = header_line;
          table = &next;
        }
        headers_[prefix] = header_line;
        continue;
      }
      parse_key_value(*table, prefix);
      end_of_line();
    }
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, msg); }
  [[noreturn]] void fail_at(int line, const std::string& msg) const {
    throw ParseError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }
  char get() {
    char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        get();
      } else {
        return;
      }
    }
  }
  // Whitespace, comments and newlines inside arrays and inline tables.
  void skip_ws_multiline() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        get();
      } else {
        return;
      }
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    get();
  }

  static bool bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string key;
    while (!eof() && bare_char(peek())) key += s_[pos_++];
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      skip_ws();
      path.push_back(parse_key());
      skip_ws();
    }
    return path;
  }

  void parse_key_value(json& table, const std::string& prefix) {
    const int key_line = line_;
    std::vector<std::string> path = parse_key_path();
    skip_ws();
    expect('=');
    skip_ws();
    json* target = &table;
    std::string full = prefix;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      full += (full.empty() ? "" : ".") + path[i];
      json& next = (*target)[path[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("'" + full + "' is already a value");
      if (!doc_.lines.count(full)) doc_.lines[full] = key_line;
      target = &next;
    }
    full += (full.empty() ? "" : ".") + path.back();
    if (target->contains(path.back())) fail("duplicate key '" + full + "'");
    json value = parse_value(full);
    (*target)[path.back()] = std::move(value);
    doc_.lines[full] = key_line;
  }

  json parse_value(const std::string& path) {
    char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array(path);
    if (c == '{') return parse_inline_table(path);
    if (s_.compare(pos_, 4, "true") == 0 && !bare_char(peek(4))) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0 && !bare_char(peek(5))) {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  std::string parse_basic_string() {
    expect('"');
    if (peek() == '"' && peek(1) == '"') fail("multi-line strings are not supported");
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated string");
      char e = get();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u': {
          if (pos_ + 4 > s_.size()) fail("bad \\u escape");
          unsigned cp = std::stoul(s_.substr(pos_, 4), nullptr, 16);
          pos_ += 4;
          append_utf8(out, cp);
          break;
        }
        default: fail(std::string("unknown escape \\") + e);
      }
    }
    return out;
  }

  static void append_utf8(std::string& out, unsigned cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '\'') break;
      out += c;
    }
    return out;
  }

  json parse_number() {
    std::string tok;
    while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) tok += s_[pos_++];
    if (tok.empty()) fail("expected a value");
    std::string body = tok;
    bool neg = false;
    if (body[0] == '+' || body[0] == '-') {
      neg = body[0] == '-';
      body.erase(0, 1);
    }
    if (body == "inf") return neg ? -std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::string clean;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (tok[i] == '_') {
        bool ok = i > 0 && i + 1 < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i - 1])) &&
                  std::isdigit(static_cast<unsigned char>(tok[i + 1]));
        if (!ok) fail("invalid number '" + tok + "'");
        continue;
      }
      clean += tok[i];
    }
    bool is_float = clean.find_first_of(".eE") != std::string::npos;
    std::size_t used = 0;
    try {
      if (is_float) {
        double v = std::stod(clean, &used);
        if (used == clean.size()) return v;
      } else {
        long long v = std::stoll(clean, &used, 10);
        if (used == clean.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("invalid value '" + tok + "'");
  }

  json parse_array(const std::string& path) {
    expect('[');
    json arr = json::array();
    while (true) {
      skip_ws_multiline();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        get();
        return arr;
      }
      arr.push_back(parse_value(path));
      skip_ws_multiline();
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json parse_inline_table(const std::string& path) {
    expect('{');
    json table = json::object();
    skip_ws();
    if (peek() == '}') {
      get();
      return table;
    }
    while (true) {
      skip_ws();
      parse_key_value(table, path);
      skip_ws();
      if (peek() == ',') {
        get();
        continue;
      }
      expect('}');
      return table;
    }
  }

  const std::string& s_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;
  TomlDocument doc_;
  std::map<std::string, int> headers_;
};

}  // namespace

TomlDocument parse_toml(const std::string& text, const std::string& source) {
  return Parser(text, source).run();
}

}  // namespace fts
