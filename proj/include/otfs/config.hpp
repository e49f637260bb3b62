#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "otfs/sim.hpp"

namespace otfs {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

/// Recognized configuration keys, in display order.
const std::vector<std::string>& config_keys();
std::string_view config_key_help(std::string_view key);

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
/// Unknown keys and lines without `=` raise UsageError.
KeyValues parse_key_values(std::string_view text);
KeyValues read_config_file(const std::string& path);

/// A sweep description before channel profiles are expanded. `paths` and
/// `kmax` may each list several values; every combination is one profile.
struct RunSettings {
    SweepConfig sweep;
    std::vector<int> paths;
    std::vector<int> kmax;
    std::optional<std::uint64_t> seed;
    std::string channel_file;

    std::vector<SweepConfig> expand() const;
};

/// Applies `values` over the built-in defaults. Throws UsageError on an
/// unknown key or a malformed value.
RunSettings settings_from(const KeyValues& values);

}  // namespace otfs
