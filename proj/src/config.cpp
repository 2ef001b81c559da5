#include "ldpkit/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ldpkit/util.hpp"

namespace ldpkit {

namespace {

struct TomlParser {
  const std::string& text;
  const std::string& name;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << name << ":" << line << ": " << what;
    throw config_error(msg.str());
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return eof() ? '\0' : text[pos]; }
  char take() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_ws(bool newlines) {
    while (!eof()) {
      char c = peek();
      if (c == '#') {  // comment to end of line
        while (!eof() && peek() != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        take();
      } else {
        break;
      }
    }
  }

  std::string parse_key_part() {
    std::string key;
    if (peek() == '"' || peek() == '\'') {
      json s = parse_string();
      return s.get<std::string>();
    }
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')
        key.push_back(take());
      else
        break;
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts;
    for (;;) {
      parts.push_back(parse_key_part());
      skip_ws(false);
      if (peek() == '.') {
        take();
        skip_ws(false);
      } else {
        break;
      }
    }
    return parts;
  }

  json parse_string() {
    char quote = take();
    std::string out;
    while (!eof()) {
      char c = take();
      if (c == quote) return json(out);
      if (c == '\n') fail("unterminated string");
      if (quote == '"' && c == '\\') {
        if (eof()) fail("dangling escape");
        char e = take();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        out.push_back(c);
      }
    }
    fail("unterminated string");
  }

  json parse_number_or_bool() {
    std::string tok;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
          c == '_')
        tok.push_back(take());
      else
        break;
    }
    if (tok == "true") return json(true);
    if (tok == "false") return json(false);
    if (tok.empty()) fail("expected a value");
    std::string digits;
    for (char c : tok)
      if (c != '_') digits.push_back(c);
    bool floaty = digits.find_first_of(".eE") != std::string::npos;
    // inf/nan deliberately unsupported (configs should not contain them)
    try {
      std::size_t used = 0;
      if (!floaty) {
        long long v = std::stoll(digits, &used);
        if (used == digits.size()) return json(v);
      }
      double d = std::stod(digits, &used);
      if (used != digits.size()) fail("malformed number '" + tok + "'");
      return json(d);
    } catch (const std::exception&) {
      fail("malformed value '" + tok + "'");
    }
  }

  json parse_value() {
    skip_ws(false);
    char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {  // array; may span lines
      take();
      json arr = json::array();
      skip_ws(true);
      if (peek() == ']') {
        take();
        return arr;
      }
      for (;;) {
        arr.push_back(parse_value());
        skip_ws(true);
        if (peek() == ',') {
          take();
          skip_ws(true);
          if (peek() == ']') {  // trailing comma
            take();
            return arr;
          }
        } else if (peek() == ']') {
          take();
          return arr;
        } else {
          fail("expected ',' or ']' in array");
        }
      }
    }
    return parse_number_or_bool();
  }

  void expect_line_end() {
    skip_ws(false);
    if (!eof() && peek() != '\n') fail("trailing characters after value");
  }

  json* descend(json* node, const std::vector<std::string>& parts, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      json& child = (*node)[parts[i]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("key '" + parts[i] + "' is both a value and a table");
      node = &child;
    }
    return node;
  }

  json parse() {
    json root = json::object();
    json* table = &root;
    for (;;) {
      skip_ws(true);
      if (eof()) break;
      if (peek() == '[') {
        take();
        skip_ws(false);
        std::vector<std::string> parts = parse_dotted_key();
        skip_ws(false);
        if (peek() != ']') fail("expected ']' to close the table header");
        take();
        expect_line_end();
        table = descend(&root, parts, parts.size());
      } else {
        std::vector<std::string> parts = parse_dotted_key();
        skip_ws(false);
        if (peek() != '=') fail("expected '=' after key '" + parts.back() + "'");
        take();
        json value = parse_value();
        expect_line_end();
        json* parent = descend(table, parts, parts.size() - 1);
        if (parent->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
        (*parent)[parts.back()] = std::move(value);
      }
    }
    return root;
  }
};

bool looks_like_json(const std::string& text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    return c == '{';
  }
  return false;
}

void toml_emit(const json& node, const std::string& prefix, std::ostringstream& out);

std::string toml_value(const json& v) {
  if (v.is_string()) {
    std::string s = "\"";
    for (char c : v.get<std::string>()) {
      if (c == '"' || c == '\\') s.push_back('\\');
      if (c == '\n') {
        s += "\\n";
        continue;
      }
      s.push_back(c);
    }
    return s + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) {
    std::string s = format_double(v.get<double>());
    // keep floats floats across the round trip
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
  }
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += toml_value(v[i]);
    }
    return s + "]";
  }
  throw config_error("to_toml: unsupported value type " + std::string(v.type_name()));
}

void toml_emit(const json& node, const std::string& prefix, std::ostringstream& out) {
  // scalars and arrays first, then subtables
  for (auto it = node.begin(); it != node.end(); ++it)
    if (!it.value().is_object()) out << it.key() << " = " << toml_value(it.value()) << "\n";
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!it.value().is_object()) continue;
    std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    out << "\n[" << path << "]\n";
    toml_emit(it.value(), path, out);
  }
}

}  // namespace

json parse_config_text(const std::string& text, const std::string& name) {
  if (looks_like_json(text)) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw config_error(name + ": " + e.what());
    }
  }
  TomlParser p{text, name};
  return p.parse();
}

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string to_toml(const json& tree) {
  if (!tree.is_object()) throw config_error("to_toml: top level must be a table");
  std::ostringstream out;
  toml_emit(tree, "", out);
  return out.str();
}

void apply_override(json& tree, const std::string& dotted_key, const std::string& value_text) {
  if (dotted_key.empty()) throw config_error("override: empty key");
  json value;
  try {  // parsed like a TOML value when it is one; bare words become strings
    TomlParser p{value_text, "override '" + dotted_key + "'"};
    value = p.parse_value();
    p.skip_ws(false);
    if (!p.eof()) value = json(value_text);
  } catch (const config_error&) {
    value = json(value_text);
  }
  json* node = &tree;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = dotted_key.find('.', start);
    std::string part = dotted_key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw config_error("override: malformed key '" + dotted_key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object())
      throw config_error("override: '" + part + "' in '" + dotted_key + "' is not a table");
    node = &child;
    start = dot + 1;
  }
}

const json* find_path(const json& tree, const std::string& dotted_path) {
  const json* node = &tree;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = dotted_path.find('.', start);
    std::string part = dotted_path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

json require_path(const json& tree, const std::string& dotted_path) {
  const json* node = find_path(tree, dotted_path);
  if (!node) throw config_error("missing field '" + dotted_path + "'");
  return *node;
}

double require_number(const json& tree, const std::string& dotted_path) {
  json v = require_path(tree, dotted_path);
  if (!v.is_number()) throw config_error("field '" + dotted_path + "' must be a number");
  return v.get<double>();
}

std::string require_string(const json& tree, const std::string& dotted_path) {
  json v = require_path(tree, dotted_path);
  if (!v.is_string()) throw config_error("field '" + dotted_path + "' must be a string");
  return v.get<std::string>();
}

double number_or(const json& tree, const std::string& dotted_path, double fallback) {
  const json* v = find_path(tree, dotted_path);
  if (!v) return fallback;
  if (!v->is_number()) throw config_error("field '" + dotted_path + "' must be a number");
  return v->get<double>();
}

long long integer_or(const json& tree, const std::string& dotted_path, long long fallback) {
  const json* v = find_path(tree, dotted_path);
  if (!v) return fallback;
  if (!v->is_number_integer())
    throw config_error("field '" + dotted_path + "' must be an integer");
  return v->get<long long>();
}

std::string string_or(const json& tree, const std::string& dotted_path,
                      const std::string& fallback) {
  const json* v = find_path(tree, dotted_path);
  if (!v) return fallback;
  if (!v->is_string()) throw config_error("field '" + dotted_path + "' must be a string");
  return v->get<std::string>();
}

bool bool_or(const json& tree, const std::string& dotted_path, bool fallback) {
  const json* v = find_path(tree, dotted_path);
  if (!v) return fallback;
  if (!v->is_boolean()) throw config_error("field '" + dotted_path + "' must be a boolean");
  return v->get<bool>();
}

std::uint64_t config_hash(const json& tree) { return fnv1a64(tree.dump()); }

}  // namespace ldpkit
