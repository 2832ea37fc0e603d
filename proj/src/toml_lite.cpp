#include "rangecd/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rangecd::toml {

double Value::number() const {
  if (!is_number()) throw std::runtime_error("TOML value is not a number");
  return std::get<double>(data);
}

bool Value::boolean() const {
  if (!std::holds_alternative<bool>(data)) throw std::runtime_error("TOML value is not a bool");
  return std::get<bool>(data);
}

const std::string& Value::string() const {
  if (!std::holds_alternative<std::string>(data)) {
    throw std::runtime_error("TOML value is not a string");
  }
  return std::get<std::string>(data);
}

const Array& Value::array() const {
  if (!is_array()) throw std::runtime_error("TOML value is not an array");
  return std::get<Array>(data);
}

const Value& Table::at(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw std::runtime_error("missing TOML key: " + key);
  return it->second;
}

double Table::number_or(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.number();
}

bool Table::bool_or(const std::string& key, bool fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.boolean();
}

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  void skip_ws() {
    while (!eof() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
};

Value parse_value(Cursor& cur);

Value parse_array(Cursor& cur) {
  ++cur.pos;  // '['
  Array arr;
  for (;;) {
    cur.skip_ws();
    while (!cur.eof() && (cur.peek() == '\n' || cur.peek() == '\r')) {
      ++cur.pos;
      cur.skip_ws();
    }
    if (cur.eof()) throw std::runtime_error("unterminated TOML array");
    if (cur.peek() == ']') {
      ++cur.pos;
      return Value{arr};
    }
    arr.push_back(parse_value(cur));
    cur.skip_ws();
    if (!cur.eof() && cur.peek() == ',') ++cur.pos;
  }
}

Value parse_value(Cursor& cur) {
  cur.skip_ws();
  if (cur.eof()) throw std::runtime_error("expected TOML value");
  const char c = cur.peek();
  if (c == '[') return parse_array(cur);
  if (c == '"') {
    ++cur.pos;
    std::string s;
    while (!cur.eof() && cur.peek() != '"') s += cur.text[cur.pos++];
    if (cur.eof()) throw std::runtime_error("unterminated TOML string");
    ++cur.pos;
    return Value{s};
  }
  std::string tok;
  while (!cur.eof() && cur.peek() != ',' && cur.peek() != ']' && cur.peek() != '\n' &&
         cur.peek() != '\r' && cur.peek() != '#') {
    tok += cur.text[cur.pos++];
  }
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
  if (tok == "true") return Value{true};
  if (tok == "false") return Value{false};
  try {
    std::size_t used = 0;
    const double d = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return Value{d};
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse TOML value: " + tok);
  }
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Table parse(const std::string& text) {
  Table root;
  Table* current = &root;
  std::istringstream stream(text);
  std::string raw;
  std::string pending;  // accumulates multi-line arrays

  auto logical_lines = [&]() {
    std::vector<std::string> lines;
    while (std::getline(stream, raw)) {
      // Strip comments outside strings.
      std::string line;
      bool in_str = false;
      for (char c : raw) {
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) break;
        line += c;
      }
      if (!pending.empty()) {
        pending += "\n" + line;
      } else {
        pending = line;
      }
      // A line with more '[' than ']' inside a value continues.
      long depth = 0;
      bool seen_eq = false;
      in_str = false;
      for (char c : pending) {
        if (c == '"') in_str = !in_str;
        if (in_str) continue;
        if (c == '=') seen_eq = true;
        if (seen_eq && c == '[') ++depth;
        if (seen_eq && c == ']') --depth;
      }
      if (depth > 0) continue;
      lines.push_back(pending);
      pending.clear();
    }
    if (!strip(pending).empty()) lines.push_back(pending);
    return lines;
  };

  for (const std::string& logical : logical_lines()) {
    const std::string line = strip(logical);
    if (line.empty()) continue;
    if (line.size() >= 4 && line.rfind("[[", 0) == 0 && line.substr(line.size() - 2) == "]]") {
      const std::string name = strip(line.substr(2, line.size() - 4));
      root.table_arrays[name].emplace_back();
      current = &root.table_arrays[name].back();
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      const std::string name = strip(line.substr(1, line.size() - 2));
      current = &root.tables[name];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed TOML line: " + line);
    const std::string key = strip(line.substr(0, eq));
    const std::string value_text = line.substr(eq + 1);
    Cursor cur{value_text, 0};
    current->values[key] = parse_value(cur);
  }
  return root;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace rangecd::toml
