// otfs_sim: Monte Carlo BER simulator for OTFS detectors.
//
//   otfs_sim simulate [--config FILE] [--KEY VALUE ...]   one (detector, SNR) cell with an iteration trace
//   otfs_sim sweep --seed N [--config FILE] [--KEY VALUE ...]   full SNR x detector x profile grid
//   otfs_sim verify [--seed N]                            transceiver and detector self-test
//
// Exit codes: 0 success, 1 numerical or I/O failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "otfs/channel.hpp"
#include "otfs/config.hpp"
#include "otfs/sim.hpp"
#include "otfs/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct KeyFlags {
    std::string config_path;
    std::map<std::string, std::string> flags;
};

void add_key_options(CLI::App& sub, KeyFlags& kf) {
    sub.add_option("--config", kf.config_path, "key = value configuration file");
    for (const auto& key : otfs::config_keys())
        sub.add_option("--" + key, kf.flags[key], std::string(otfs::config_key_help(key)));
}

// File values first, then every flag given on the command line.
otfs::KeyValues merge_values(const CLI::App& sub, const KeyFlags& kf) {
    otfs::KeyValues values;
    if (!kf.config_path.empty()) values = otfs::read_config_file(kf.config_path);
    for (const auto& [key, value] : kf.flags)
        if (sub.count("--" + key) > 0) values[key] = value;
    return values;
}

void load_channel(otfs::RunSettings& settings) {
    if (settings.channel_file.empty()) return;
    std::ifstream f(settings.channel_file);
    if (!f) throw otfs::UsageError("cannot read channel file '" + settings.channel_file + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        settings.sweep.fixed_channel = otfs::parse_channel(ss.str());
    } catch (const std::invalid_argument& e) {
        throw otfs::UsageError(e.what());
    }
}

int report_failures(const std::vector<otfs::BerRecord>& records) {
    int code = kExitOk;
    for (const auto& r : records) {
        if (!r.failed_cell()) continue;
        const auto site = r.first_failure.value_or(otfs::FailureSite{});
        std::fprintf(stderr,
                     "error: %s at %g dB: %llu of %llu trials failed; first failure trial=%llu iteration=%d index=%lld\n",
                     r.detector.c_str(), r.snr_db, static_cast<unsigned long long>(r.failed_trials),
                     static_cast<unsigned long long>(r.frames), static_cast<unsigned long long>(site.trial),
                     site.iteration, site.index);
        code = kExitFailure;
    }
    return code;
}

void validate_or_usage(const otfs::SweepConfig& cfg) {
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw otfs::UsageError(e.what());
    }
}

int run_simulate(const CLI::App& sub, const KeyFlags& kf, int trace_frames) {
    auto values = merge_values(sub, kf);
    if (!values.contains("detectors")) values["detectors"] = "bpic-dsc";
    if (!values.contains("snr")) values["snr"] = "16";
    auto settings = otfs::settings_from(values);
    load_channel(settings);
    auto configs = settings.expand();
    if (configs.size() != 1 || configs.front().snr_db.size() != 1)
        throw otfs::UsageError("simulate runs one cell: give a single snr, paths and kmax");
    auto& cfg = configs.front();
    validate_or_usage(cfg);

    const double snr = cfg.snr_db.front();
    for (int i = 0; i < trace_frames && static_cast<std::uint64_t>(i) < cfg.max_frames; ++i) {
        std::fprintf(stderr, "# frame %d trace\n", i);
        const auto trace = [](const otfs::DetectorState& st) {
            double rho_mean = st.rho.size() > 0 ? st.rho.mean() : 0.0;
            double e_mean = st.e.size() > 0 ? st.e.mean() : 0.0;
            std::fprintf(stderr, "  t=%d delta=%.6e mean_e=%.6e mean_rho=%.4f mean_v=%.6e\n", st.t, st.delta,
                         e_mean, rho_mean, st.v_hat.mean());
        };
        const auto outcomes = otfs::run_trial(cfg, snr, cfg.detectors, static_cast<std::uint64_t>(i), trace);
        for (std::size_t d = 0; d < outcomes.size(); ++d)
            std::fprintf(stderr, "  %s: bit_errors=%llu iterations=%d%s\n",
                         std::string(otfs::detector_name(cfg.detectors[d])).c_str(),
                         static_cast<unsigned long long>(outcomes[d].bit_errors), outcomes[d].iterations,
                         outcomes[d].failed ? " FAILED" : "");
    }

    const auto records = otfs::run_sweep(cfg);
    std::cout << otfs::format_csv(records);
    return report_failures(records);
}

int run_sweep_cmd(const CLI::App& sub, const KeyFlags& kf) {
    const auto values = merge_values(sub, kf);
    auto settings = otfs::settings_from(values);
    if (!settings.seed) throw otfs::UsageError("sweep requires --seed (or a seed key in the config file)");
    load_channel(settings);
    int code = kExitOk;
    for (auto& cfg : settings.expand()) {
        validate_or_usage(cfg);
        std::fprintf(stderr, "sweep P=%d kmax=%d -> %s\n", cfg.profile.paths, cfg.profile.k_max,
                     cfg.output.empty() ? "(stdout)" : cfg.output.c_str());
        const auto records = otfs::run_sweep(cfg);
        if (cfg.output.empty()) std::cout << otfs::format_csv(records);
        code = std::max(code, report_failures(records));
    }
    return code;
}

int run_verify(std::uint64_t seed) {
    bool all = true;
    for (const auto& check : otfs::run_verification(seed)) {
        std::printf("%s  %s  (%s)\n", check.passed ? "PASS" : "FAIL", check.name.c_str(), check.detail.c_str());
        all = all && check.passed;
    }
    return all ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OTFS link-level simulator"};
    app.require_subcommand(1);

    KeyFlags sim_flags;
    int trace_frames = 1;
    auto* simulate = app.add_subcommand("simulate", "run one (detector, SNR) cell with a per-iteration trace");
    add_key_options(*simulate, sim_flags);
    simulate->add_option("--trace-frames", trace_frames, "frames to trace on stderr")->check(CLI::NonNegativeNumber);

    KeyFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "run the SNR x detector grid for each channel profile");
    add_key_options(*sweep, sweep_flags);

    std::uint64_t verify_seed = 1;
    auto* verify = app.add_subcommand("verify", "run the transceiver and detector self-test");
    verify->add_option("--seed", verify_seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate) return run_simulate(*simulate, sim_flags, trace_frames);
        if (*sweep) return run_sweep_cmd(*sweep, sweep_flags);
        if (*verify) return run_verify(verify_seed);
    } catch (const otfs::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const otfs::NumericalFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitUsage;
}
