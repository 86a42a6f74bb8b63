#pragma once

// A TOML subset: `key = value` lines, `[a.b]` table headers, `#` comments.
// Values are booleans, integers, floats, basic strings and (nested, possibly
// multi-line) arrays. Inline tables, dates and multi-line strings are rejected.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace otlab {

struct ConfigValue {
    using Array = std::vector<ConfigValue>;
    using Table = std::map<std::string, ConfigValue>;
    std::variant<bool, std::int64_t, double, std::string, Array, Table> v;

    ConfigValue() : v(Table{}) {}
    ConfigValue(bool b) : v(b) {}
    ConfigValue(std::int64_t i) : v(i) {}
    ConfigValue(double d) : v(d) {}
    ConfigValue(std::string s) : v(std::move(s)) {}
    ConfigValue(const char* s) : v(std::string(s)) {}
    ConfigValue(Array a) : v(std::move(a)) {}
    ConfigValue(Table t) : v(std::move(t)) {}

    bool is_table() const { return std::holds_alternative<Table>(v); }
    bool is_array() const { return std::holds_alternative<Array>(v); }
    std::string type_name() const;

    bool operator==(const ConfigValue&) const = default;
};

/// Throws ConfigError with the line number on malformed input.
ConfigValue::Table parse_toml(std::string_view text);

/// Canonical text: scalars and arrays of a table first (sorted by key), then its
/// sub-tables as [dotted.headers]. Floats keep 17 significant digits.
std::string write_toml(const ConfigValue::Table& table);

/// Strict, typed view of one table. Every key must be consumed before finish().
class TableReader {
public:
    TableReader(const ConfigValue::Table& table, std::string path);

    bool has(const std::string& key) const;
    const ConfigValue& raw(const std::string& key);

    bool get_bool(const std::string& key, bool fallback);
    std::int64_t get_int(const std::string& key, std::int64_t fallback);
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    std::string get_string(const std::string& key, const std::string& fallback);
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);
    std::vector<std::vector<double>> get_matrix(const std::string& key);
    TableReader table(const std::string& key);

    /// Throws ConfigError naming any key that was never read.
    void finish() const;

    const std::string& path() const { return path_; }

private:
    const ConfigValue& take(const std::string& key);
    std::string where(const std::string& key) const;

    const ConfigValue::Table* table_;
    std::string path_;
    std::set<std::string> used_;
};

/// Conversions used when building a canonical table.
ConfigValue to_config(const std::vector<double>& xs);
ConfigValue to_config(const std::vector<std::vector<double>>& m);

}  // namespace otlab
