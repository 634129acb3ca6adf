#ifndef BDEKIT_CONFIG_TEXT_HPP
#define BDEKIT_CONFIG_TEXT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bdekit {

/// Ordered key=value pairs from the shared text config format:
/// one `key = value` per line, '#' starts a comment, blank lines ignored.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values_file(const std::string& path);

std::optional<std::string> find_value(const KeyValues& kv,
                                      const std::string& key);
std::string get_value(const KeyValues& kv, const std::string& key);

int64_t parse_int(const std::string& value, const std::string& key);
double parse_real(const std::string& value, const std::string& key);
bool parse_bool(const std::string& value, const std::string& key);
std::vector<int> parse_int_list(const std::string& value,
                                const std::string& key);

} // namespace bdekit

#endif
