#include "bdekit/config_text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "bdekit/errors.hpp"

namespace bdekit {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream stream(text);
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key=value, got \"" + line + "\"");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

KeyValues read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_key_values(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::optional<std::string> find_value(const KeyValues& kv,
                                      const std::string& key) {
    // last occurrence wins, so later lines can override earlier ones
    std::optional<std::string> found;
    for (const auto& [k, v] : kv)
        if (k == key) found = v;
    return found;
}

std::string get_value(const KeyValues& kv, const std::string& key) {
    auto v = find_value(kv, key);
    if (!v) throw ConfigError("missing config key: " + key);
    return *v;
}

int64_t parse_int(const std::string& value, const std::string& key) {
    int64_t out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(key + ": not an integer: \"" + value + "\"");
    return out;
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: \"" + value + "\"");
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw ConfigError(key + ": not a boolean: \"" + value + "\"");
}

std::vector<int> parse_int_list(const std::string& value,
                                const std::string& key) {
    std::vector<int> out;
    std::string item;
    std::istringstream stream(value);
    while (std::getline(stream, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(),
                                  [](char c) { return c == ' ' || c == '\t'; }),
                   item.end());
        if (item.empty())
            throw ConfigError(key + ": empty element in list \"" + value + "\"");
        out.push_back(static_cast<int>(parse_int(item, key)));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

} // namespace bdekit
