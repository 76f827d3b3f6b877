#pragma once

// INI-style configuration files: `[section]` headers and `key = value`
// lines, `#` or `;` comments. See README.md for the annotated reference.

#include "swarmsim/core.hpp"

#include <filesystem>
#include <string>

namespace swarmsim {

struct ScenarioConfig {
    SimConfig sim;
    SwarmParams swarm;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses configuration text on top of the built-in defaults. `base_dir`
/// resolves relative `presets` and `map.file` paths.
ScenarioConfig parse_config(const std::string& text,
                            const std::filesystem::path& base_dir = {});

ScenarioConfig load_config(const std::filesystem::path& path);

/// Emits every field; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& cfg);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace swarmsim
