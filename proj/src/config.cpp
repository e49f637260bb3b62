#include "otfs/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace otfs {

namespace {

struct KeyInfo {
    const char* name;
    const char* help;
};

constexpr KeyInfo kKeys[] = {
    {"delay_bins", "delay bins L (subcarriers)"},
    {"doppler_bins", "Doppler bins K (time slots)"},
    {"delta_f", "subcarrier spacing in Hz"},
    {"ncp", "cyclic prefix length in samples"},
    {"qam", "QAM order (4, 16, 64)"},
    {"detectors", "comma-separated detectors: bpic-dsc, mmse, ml"},
    {"snr", "comma-separated SNR points in dB"},
    {"paths", "number of paths P (comma list allowed)"},
    {"lmax", "maximum delay index"},
    {"kmax", "maximum Doppler index (comma list allowed)"},
    {"frames", "frame cap per cell"},
    {"min_errors", "stop a cell after this many bit errors (0: always run frames)"},
    {"seed", "master seed"},
    {"output", "CSV output path"},
    {"tmax", "B-PIC-DSC iteration cap"},
    {"zeta", "B-PIC-DSC convergence tolerance"},
    {"init", "B-PIC-DSC initialization: full_mmse or scalar_mmse"},
    {"timing", "record wall_seconds (true/false)"},
    {"workers", "worker threads (0: OTFS_WORKERS or all cores)"},
    {"channel_file", "replay this channel record for every frame"},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, const std::string& text) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw UsageError("invalid value '" + text + "' for key '" + std::string(key) + "'");
    return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, const std::string& text) {
    std::vector<T> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
    if (out.empty()) throw UsageError("key '" + std::string(key) + "' needs at least one value");
    return out;
}

bool parse_bool(std::string_view key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw UsageError("invalid boolean '" + text + "' for key '" + std::string(key) + "'");
}

bool known_key(std::string_view key) {
    return std::any_of(std::begin(kKeys), std::end(kKeys), [&](const KeyInfo& k) { return key == k.name; });
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> v;
        for (const auto& k : kKeys) v.emplace_back(k.name);
        return v;
    }();
    return keys;
}

std::string_view config_key_help(std::string_view key) {
    for (const auto& k : kKeys)
        if (key == k.name) return k.help;
    return {};
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        auto key = trim(std::string_view(body).substr(0, eq));
        auto value = trim(std::string_view(body).substr(eq + 1));
        if (!known_key(key)) throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        out[std::move(key)] = std::move(value);
    }
    return out;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_key_values(ss.str());
}

RunSettings settings_from(const KeyValues& values) {
    RunSettings s;
    s.paths = {s.sweep.profile.paths};
    s.kmax = {s.sweep.profile.k_max};
    auto& cfg = s.sweep;
    for (const auto& [key, value] : values) {
        if (key == "delay_bins") cfg.geometry.delay_bins = parse_number<int>(key, value);
        else if (key == "doppler_bins") cfg.geometry.doppler_bins = parse_number<int>(key, value);
        else if (key == "delta_f") cfg.geometry.delta_f = parse_number<double>(key, value);
        else if (key == "ncp") cfg.geometry.cp_samples = parse_number<int>(key, value);
        else if (key == "qam") cfg.qam_order = parse_number<int>(key, value);
        else if (key == "detectors") {
            cfg.detectors.clear();
            try {
                for (const auto& name : split_list(value)) cfg.detectors.push_back(parse_detector(name));
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        } else if (key == "snr") cfg.snr_db = parse_list<double>(key, value);
        else if (key == "paths") s.paths = parse_list<int>(key, value);
        else if (key == "lmax") cfg.profile.l_max = parse_number<int>(key, value);
        else if (key == "kmax") s.kmax = parse_list<int>(key, value);
        else if (key == "frames") cfg.max_frames = parse_number<std::uint64_t>(key, value);
        else if (key == "min_errors") cfg.min_bit_errors = parse_number<std::uint64_t>(key, value);
        else if (key == "seed") s.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "output") cfg.output = value;
        else if (key == "tmax") cfg.detector.t_max = parse_number<int>(key, value);
        else if (key == "zeta") cfg.detector.zeta = parse_number<double>(key, value);
        else if (key == "init") {
            if (value == "full_mmse") cfg.detector.init_mode = InitMode::full_mmse;
            else if (value == "scalar_mmse") cfg.detector.init_mode = InitMode::scalar_mmse;
            else throw UsageError("invalid init mode '" + value + "'");
        } else if (key == "timing") cfg.record_timing = parse_bool(key, value);
        else if (key == "workers") cfg.workers = parse_number<unsigned>(key, value);
        else if (key == "channel_file") s.channel_file = value;
        else throw UsageError("unknown key '" + key + "'");
    }
    if (s.seed) cfg.master_seed = *s.seed;
    return s;
}

std::vector<SweepConfig> RunSettings::expand() const {
    std::vector<SweepConfig> out;
    const bool multiple = paths.size() * kmax.size() > 1;
    for (const int p : paths) {
        for (const int k : kmax) {
            SweepConfig c = sweep;
            c.profile.paths = p;
            c.profile.k_max = k;
            if (multiple && !c.output.empty()) c.output = profile_output_path(sweep.output, c.profile);
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace otfs
