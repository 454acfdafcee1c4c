#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace artisan {

/// Minimal TOML subset for task manifests: comments, flat `key = value`
/// pairs (strings, integers, floats, booleans) and `[section]` headers that
/// prefix the keys that follow with "section.". Enough for task.toml; not a
/// general TOML implementation.
struct TomlValue {
    enum class Kind { String, Integer, Float, Boolean };
    Kind kind = Kind::String;
    std::string str;
    std::int64_t integer = 0;
    double real = 0.0;
    bool boolean = false;

    double as_number() const;
};

std::map<std::string, TomlValue> parse_toml_lite(std::string_view text);

} // namespace artisan
