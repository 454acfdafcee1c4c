#include "artisan/toml.hpp"

#include <cctype>

#include "artisan/errors.hpp"
#include "artisan/util.hpp"

namespace artisan {

namespace {

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

TomlValue parse_value(const std::string& raw, int line_no) {
    std::string v = trim(raw);
    if (v.empty()) throw ParseError("toml line " + std::to_string(line_no) + ": empty value");

    TomlValue out;
    if (v.front() == '"') {
        std::string s;
        bool closed = false;
        for (std::size_t i = 1; i < v.size(); ++i) {
            char c = v[i];
            if (c == '\\' && i + 1 < v.size()) {
                char n = v[++i];
                switch (n) {
                case 'n': s += '\n'; break;
                case 't': s += '\t'; break;
                case '"': s += '"'; break;
                case '\\': s += '\\'; break;
                default:
                    throw ParseError("toml line " + std::to_string(line_no) +
                                     ": unsupported escape \\" + std::string(1, n));
                }
                continue;
            }
            if (c == '"') {
                closed = true;
                std::string rest = trim(v.substr(i + 1));
                if (!rest.empty() && rest.front() != '#')
                    throw ParseError("toml line " + std::to_string(line_no) +
                                     ": trailing content after string");
                break;
            }
            s += c;
        }
        if (!closed)
            throw ParseError("toml line " + std::to_string(line_no) + ": unterminated string");
        out.kind = TomlValue::Kind::String;
        out.str = std::move(s);
        return out;
    }

    // Strip an inline comment from non-string values.
    auto hash = v.find('#');
    if (hash != std::string::npos) v = trim(v.substr(0, hash));

    if (v == "true" || v == "false") {
        out.kind = TomlValue::Kind::Boolean;
        out.boolean = (v == "true");
        return out;
    }
    bool looks_float = v.find('.') != std::string::npos || v.find('e') != std::string::npos ||
                       v.find('E') != std::string::npos;
    try {
        std::size_t consumed = 0;
        if (looks_float) {
            out.kind = TomlValue::Kind::Float;
            out.real = std::stod(v, &consumed);
        } else {
            out.kind = TomlValue::Kind::Integer;
            out.integer = std::stoll(v, &consumed);
        }
        if (consumed != v.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ParseError("toml line " + std::to_string(line_no) + ": cannot parse value \"" + v +
                         "\"");
    }
    return out;
}

} // namespace

double TomlValue::as_number() const {
    switch (kind) {
    case Kind::Integer: return static_cast<double>(integer);
    case Kind::Float: return real;
    default: throw ParseError("toml value is not a number");
    }
}

std::map<std::string, TomlValue> parse_toml_lite(std::string_view text) {
    std::map<std::string, TomlValue> out;
    std::string prefix;
    int line_no = 0;
    for (const auto& raw_line : split_lines(text)) {
        ++line_no;
        std::string line = trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("toml line " + std::to_string(line_no) + ": bad section header");
            prefix = trim(line.substr(1, line.size() - 2));
            if (prefix.empty())
                throw ParseError("toml line " + std::to_string(line_no) + ": empty section name");
            prefix += ".";
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("toml line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ParseError("toml line " + std::to_string(line_no) + ": empty key");
        for (char c : key)
            if (!is_bare_key_char(c) && c != '.')
                throw ParseError("toml line " + std::to_string(line_no) + ": bad key \"" + key +
                                 "\"");
        out[prefix + key] = parse_value(line.substr(eq + 1), line_no);
    }
    return out;
}

} // namespace artisan
