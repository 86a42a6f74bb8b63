#include "otlab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "otlab/errors.hpp"

namespace otlab {

std::string ConfigValue::type_name() const
{
    switch (v.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    case 4: return "array";
    default: return "table";
    }
}

namespace {

bool is_bare_key_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    ConfigValue::Table run()
    {
        ConfigValue::Table root;
        ConfigValue::Table* current = &root;
        std::set<std::string> headers;
        while (true) {
            skip_blank_lines();
            if (eof())
                break;
            if (peek() == '[') {
                ++pos_;
                skip_ws();
                std::vector<std::string> parts{key()};
                skip_ws();
                while (peek() == '.') {
                    ++pos_;
                    skip_ws();
                    parts.push_back(key());
                    skip_ws();
                }
                expect(']');
                end_of_line();
                std::string dotted;
                for (const auto& p : parts)
                    dotted += (dotted.empty() ? "" : ".") + p;
                if (!headers.insert(dotted).second)
                    fail("table [" + dotted + "] defined twice");
                current = &root;
                for (const auto& p : parts) {
                    auto& slot = (*current)[p];
                    if (!slot.is_table())
                        fail("[" + dotted + "] redefines key '" + p + "'");
                    current = &std::get<ConfigValue::Table>(slot.v);
                }
                continue;
            }
            std::string k = key();
            skip_ws();
            expect('=');
            skip_ws();
            ConfigValue val = value();
            end_of_line();
            if (current->count(k))
                fail("duplicate key '" + k + "'");
            current->emplace(k, std::move(val));
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    void expect(char c)
    {
        if (peek() != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_ws()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t'))
            ++pos_;
    }

    void skip_comment()
    {
        if (peek() == '#')
            while (!eof() && peek() != '\n')
                ++pos_;
    }

    // Whitespace, comments and newlines (used inside arrays and between statements).
    void skip_blank_lines()
    {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r')
                ++pos_;
            if (peek() == '\n') {
                ++pos_;
                ++line_;
                continue;
            }
            break;
        }
    }

    void end_of_line()
    {
        skip_ws();
        skip_comment();
        if (peek() == '\r')
            ++pos_;
        if (eof())
            return;
        if (peek() != '\n')
            fail("unexpected trailing characters");
        ++pos_;
        ++line_;
    }

    std::string key()
    {
        if (peek() == '"')
            return basic_string();
        std::size_t start = pos_;
        while (!eof() && is_bare_key_char(peek()))
            ++pos_;
        if (pos_ == start)
            fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string basic_string()
    {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n')
                fail("unterminated string");
            char c = s_[pos_++];
            if (c == '"')
                break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (eof())
                fail("unterminated escape");
            char e = s_[pos_++];
            switch (e) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            default: fail(std::string("unsupported escape \\") + e);
            }
        }
        return out;
    }

    ConfigValue value()
    {
        char c = peek();
        if (c == '"')
            return basic_string();
        if (c == '[')
            return array();
        if (c == '{')
            fail("inline tables are not supported");
        std::size_t start = pos_;
        while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' && peek() != '\r' &&
               peek() != ' ' && peek() != '\t')
            ++pos_;
        std::string tok(s_.substr(start, pos_ - start));
        if (tok.empty())
            fail("expected a value");
        if (tok == "true")
            return true;
        if (tok == "false")
            return false;
        if (tok == "inf" || tok == "+inf")
            return std::numeric_limits<double>::infinity();
        if (tok == "-inf")
            return -std::numeric_limits<double>::infinity();
        if (tok == "nan" || tok == "+nan" || tok == "-nan")
            return std::numeric_limits<double>::quiet_NaN();
        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] == '_') {
                if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
                    !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
                    fail("misplaced '_' in number " + tok);
                continue;
            }
            clean += tok[i];
        }
        const char* b = clean.data();
        const char* e = b + clean.size();
        if (*b == '+')
            ++b;
        bool is_float = clean.find_first_of(".eE") != std::string::npos;
        if (!is_float) {
            std::int64_t i = 0;
            auto r = std::from_chars(b, e, i);
            if (r.ec == std::errc::result_out_of_range)
                fail("integer out of range: " + tok);
            if (r.ec != std::errc() || r.ptr != e)
                fail("invalid value: " + tok);
            if (clean.size() > 1 && (clean[0] == '0' || ((clean[0] == '-' || clean[0] == '+') && clean[1] == '0')) &&
                clean.find_first_not_of("+-0") != std::string::npos)
                fail("leading zeros are not allowed: " + tok);
            return i;
        }
        double d = 0;
        auto r = std::from_chars(b, e, d);
        if (r.ec != std::errc() || r.ptr != e)
            fail("invalid value: " + tok);
        return d;
    }

    ConfigValue array()
    {
        expect('[');
        ConfigValue::Array out;
        while (true) {
            skip_blank_lines();
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            out.push_back(value());
            skip_blank_lines();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            fail("expected ',' or ']' in array");
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    return out + "\"";
}

std::string format_key(const std::string& k)
{
    bool bare = !k.empty();
    for (char c : k)
        bare = bare && is_bare_key_char(c);
    return bare ? k : quote(k);
}

std::string format_double(double d)
{
    if (std::isnan(d))
        return "nan";
    if (std::isinf(d))
        return d > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    std::string s = buf;
    if (s.find_first_of(".eE") == std::string::npos)
        s += ".0";
    return s;
}

std::string format_value(const ConfigValue& v)
{
    switch (v.v.index()) {
    case 0: return std::get<bool>(v.v) ? "true" : "false";
    case 1: return std::to_string(std::get<std::int64_t>(v.v));
    case 2: return format_double(std::get<double>(v.v));
    case 3: return quote(std::get<std::string>(v.v));
    case 4: {
        std::string out = "[";
        const auto& a = std::get<ConfigValue::Array>(v.v);
        for (std::size_t i = 0; i < a.size(); ++i)
            out += (i ? ", " : "") + format_value(a[i]);
        return out + "]";
    }
    default: throw ContractError("tables cannot appear inside arrays");
    }
}

void write_table(std::ostringstream& os, const ConfigValue::Table& t, const std::string& prefix)
{
    bool has_scalars = false;
    for (const auto& [k, v] : t)
        has_scalars = has_scalars || !v.is_table();
    if (!prefix.empty() && has_scalars)
        os << "\n[" << prefix << "]\n";
    for (const auto& [k, v] : t)
        if (!v.is_table())
            os << format_key(k) << " = " << format_value(v) << "\n";
    for (const auto& [k, v] : t)
        if (v.is_table()) {
            std::string name = prefix.empty() ? format_key(k) : prefix + "." + format_key(k);
            const auto& sub = std::get<ConfigValue::Table>(v.v);
            if (sub.empty())
                os << "\n[" << name << "]\n";
            else
                write_table(os, sub, name);
        }
}

}  // namespace

ConfigValue::Table parse_toml(std::string_view text) { return Parser(text).run(); }

std::string write_toml(const ConfigValue::Table& table)
{
    std::ostringstream os;
    write_table(os, table, "");
    std::string s = os.str();
    if (!s.empty() && s.front() == '\n')
        s.erase(0, 1);
    return s;
}

TableReader::TableReader(const ConfigValue::Table& table, std::string path) : table_(&table), path_(std::move(path)) {}

std::string TableReader::where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool TableReader::has(const std::string& key) const { return table_->count(key) != 0; }

const ConfigValue& TableReader::take(const std::string& key)
{
    used_.insert(key);
    return table_->at(key);
}

const ConfigValue& TableReader::raw(const std::string& key)
{
    if (!has(key))
        throw ConfigError("missing key " + where(key));
    return take(key);
}

bool TableReader::get_bool(const std::string& key, bool fallback)
{
    if (!has(key))
        return fallback;
    const auto& v = take(key);
    if (auto* b = std::get_if<bool>(&v.v))
        return *b;
    throw ConfigError(where(key) + " must be a boolean, got " + v.type_name());
}

std::int64_t TableReader::get_int(const std::string& key, std::int64_t fallback)
{
    if (!has(key))
        return fallback;
    const auto& v = take(key);
    if (auto* i = std::get_if<std::int64_t>(&v.v))
        return *i;
    throw ConfigError(where(key) + " must be an integer, got " + v.type_name());
}

std::uint64_t TableReader::get_uint(const std::string& key, std::uint64_t fallback)
{
    if (!has(key))
        return fallback;
    std::int64_t i = get_int(key, 0);
    if (i < 0)
        throw ConfigError(where(key) + " must be nonnegative");
    return static_cast<std::uint64_t>(i);
}

double TableReader::get_double(const std::string& key, double fallback)
{
    if (!has(key))
        return fallback;
    const auto& v = take(key);
    if (auto* d = std::get_if<double>(&v.v))
        return *d;
    if (auto* i = std::get_if<std::int64_t>(&v.v))
        return static_cast<double>(*i);
    throw ConfigError(where(key) + " must be a number, got " + v.type_name());
}

std::string TableReader::get_string(const std::string& key, const std::string& fallback)
{
    if (!has(key))
        return fallback;
    const auto& v = take(key);
    if (auto* s = std::get_if<std::string>(&v.v))
        return *s;
    throw ConfigError(where(key) + " must be a string, got " + v.type_name());
}

namespace {

std::vector<double> numbers(const ConfigValue& v, const std::string& where)
{
    const auto* a = std::get_if<ConfigValue::Array>(&v.v);
    if (!a)
        throw ConfigError(where + " must be an array of numbers, got " + v.type_name());
    std::vector<double> out;
    for (const auto& e : *a) {
        if (auto* d = std::get_if<double>(&e.v))
            out.push_back(*d);
        else if (auto* i = std::get_if<std::int64_t>(&e.v))
            out.push_back(static_cast<double>(*i));
        else
            throw ConfigError(where + " must contain only numbers, found " + e.type_name());
    }
    return out;
}

}  // namespace

std::vector<double> TableReader::get_doubles(const std::string& key, const std::vector<double>& fallback)
{
    if (!has(key))
        return fallback;
    return numbers(take(key), where(key));
}

std::vector<std::vector<double>> TableReader::get_matrix(const std::string& key)
{
    const auto& v = raw(key);
    const auto* a = std::get_if<ConfigValue::Array>(&v.v);
    if (!a)
        throw ConfigError(where(key) + " must be an array of arrays, got " + v.type_name());
    std::vector<std::vector<double>> out;
    for (const auto& row : *a)
        out.push_back(numbers(row, where(key)));
    for (const auto& row : out)
        if (row.size() != out.front().size())
            throw ConfigError(where(key) + " rows have different lengths");
    return out;
}

TableReader TableReader::table(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_table())
        throw ConfigError(where(key) + " must be a table, got " + v.type_name());
    return TableReader(std::get<ConfigValue::Table>(v.v), where(key));
}

void TableReader::finish() const
{
    for (const auto& [k, v] : *table_)
        if (!used_.count(k))
            throw ConfigError("unknown key " + where(k) + (v.is_table() ? " (table)" : ""));
}

ConfigValue to_config(const std::vector<double>& xs)
{
    ConfigValue::Array a;
    for (double x : xs)
        a.emplace_back(x);
    return a;
}

ConfigValue to_config(const std::vector<std::vector<double>>& m)
{
    ConfigValue::Array a;
    for (const auto& row : m)
        a.push_back(to_config(row));
    return a;
}

}  // namespace otlab
