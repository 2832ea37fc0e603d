#ifndef RANGECD_TOML_LITE_HPP
#define RANGECD_TOML_LITE_HPP

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace rangecd::toml {

/// Minimal TOML reader covering the subset used by scene spec files:
/// [tables], [[arrays of tables]], and key = number | bool | "string" |
/// array (possibly nested). Dates, inline tables, dotted keys and
/// multi-line strings are not supported.
struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, bool, std::string, Array> data;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  double number() const;
  bool boolean() const;
  const std::string& string() const;
  const Array& array() const;
};

struct Table {
  std::map<std::string, Value> values;
  std::map<std::string, std::vector<Table>> table_arrays;
  std::map<std::string, Table> tables;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const Value& at(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  bool bool_or(const std::string& key, bool fallback) const;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace rangecd::toml

#endif
