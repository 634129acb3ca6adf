#include "bdekit/brnet.hpp"

#include <sstream>

#include "bdekit/config_text.hpp"

namespace bdekit {

void ModelConfig::validate() const {
    if (max_bits != 8 && max_bits != 16)
        throw ConfigError("model max_bits must be 8 or 16, got " +
                          std::to_string(max_bits));
    if (base_filters < 1)
        throw ConfigError("base_filters must be positive");
    for (int s : opt_steps)
        if (s < 1) throw ConfigError("opt_steps entries must be positive");
    const int expected_groups = max_bits == 16 ? 2 : 1;
    if (output_groups != expected_groups)
        throw ConfigError("output_groups must be " +
                          std::to_string(expected_groups) + " for max_bits=" +
                          std::to_string(max_bits));
}

std::string ModelConfig::to_text() const {
    std::ostringstream out;
    out << "max_bits = " << max_bits << "\n";
    out << "base_filters = " << base_filters << "\n";
    out << "opt_steps = " << opt_steps[0] << "," << opt_steps[1] << ","
        << opt_steps[2] << "\n";
    out << "output_groups = " << output_groups << "\n";
    return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
    const KeyValues kv = parse_key_values(text);
    ModelConfig config;
    config.max_bits =
        static_cast<int>(parse_int(get_value(kv, "max_bits"), "max_bits"));
    config.base_filters = static_cast<int>(
        parse_int(get_value(kv, "base_filters"), "base_filters"));
    const auto steps = parse_int_list(get_value(kv, "opt_steps"), "opt_steps");
    if (steps.size() != 3)
        throw ConfigError("opt_steps must list exactly 3 stages");
    std::copy(steps.begin(), steps.end(), config.opt_steps.begin());
    config.output_groups = static_cast<int>(
        parse_int(get_value(kv, "output_groups"), "output_groups"));
    config.validate();
    return config;
}

ModelConfig ModelConfig::make(int max_bits, int filters,
                              std::array<int, 3> steps) {
    ModelConfig config;
    config.max_bits = max_bits;
    config.base_filters = filters;
    config.opt_steps = steps;
    config.output_groups = max_bits == 16 ? 2 : 1;
    config.validate();
    return config;
}

} // namespace bdekit
