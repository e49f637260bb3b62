#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/detectors.hpp"
#include "otfs/modem.hpp"

namespace otfs {

enum class DetectorKind { bpic_dsc, mmse, ml };

/// Registry names: "bpic-dsc", "mmse", "ml".
std::string_view detector_name(DetectorKind kind);
DetectorKind parse_detector(std::string_view name);

struct ChannelProfile {
    int paths = 14;
    int l_max = 6;
    int k_max = 3;
};

struct SweepConfig {
    OtfsGeometry geometry;
    int qam_order = 4;
    std::vector<DetectorKind> detectors{DetectorKind::bpic_dsc, DetectorKind::mmse};
    std::vector<double> snr_db{0.0, 4.0, 8.0, 12.0, 16.0};
    ChannelProfile profile;
    // Stop rule per cell: stop once min_bit_errors errors are seen, or at
    // max_frames. min_bit_errors = 0 always runs max_frames.
    std::uint64_t max_frames = 20000;
    std::uint64_t min_bit_errors = 400;
    std::uint64_t master_seed = 1;
    DetectorConfig detector;
    std::string output;           ///< CSV path; empty writes nothing
    unsigned workers = 0;         ///< 0: OTFS_WORKERS, else hardware concurrency
    bool record_timing = true;    ///< false writes wall_seconds as 0
    std::optional<DdChannel> fixed_channel;  ///< replay one channel for every trial

    void validate() const;
};

/// Noise variance per complex sample for a per-symbol SNR in dB, under unit
/// symbol energy and unit expected channel power.
double noise_variance(double snr_db);

struct TrialOutcome {
    bool failed = false;
    std::uint64_t bit_errors = 0;
    int iterations = 0;
    int fail_iteration = 0;
    long long fail_index = -1;
    double seconds = 0.0;
};

/// One frame through the full chain: bits, mapping, modulation, channel,
/// demodulation, effective channel, then each requested detector on the
/// same observation. Deterministic in (master_seed, trial_index).
std::vector<TrialOutcome> run_trial(const SweepConfig& cfg, double snr_db, std::span<const DetectorKind> detectors,
                                    std::uint64_t trial_index, const IterationObserver& observer = {});

TrialOutcome run_trial(const SweepConfig& cfg, double snr_db, DetectorKind detector, std::uint64_t trial_index);

struct FailureSite {
    std::uint64_t trial = 0;
    int iteration = 0;
    long long index = -1;
};

struct BerRecord {
    std::string detector;
    double snr_db = 0.0;
    std::uint64_t frames = 0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    double mean_iterations = 0.0;
    std::uint64_t failed_trials = 0;
    double wall_seconds = 0.0;
    std::optional<FailureSite> first_failure;

    /// More than 0.1% of trials failed.
    bool failed_cell() const noexcept { return failed_trials * 1000 > frames; }
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

unsigned resolve_workers(unsigned requested);

/// Runs every (detector, SNR) cell. Trials are spread over a worker pool in
/// fixed-size batches and merged in trial order, so the records depend only
/// on the config. When `cfg.output` is set the CSV is written through a
/// temporary file and renamed into place; an unwritable path raises IoError
/// before any trial runs.
std::vector<BerRecord> run_sweep(const SweepConfig& cfg);

inline constexpr std::string_view csv_header =
    "detector,snr_db,frames,bits,bit_errors,ber,mean_iterations,failed_trials,wall_seconds";

std::string format_csv(std::span<const BerRecord> records);
void write_csv_atomic(const std::string& path, std::span<const BerRecord> records);

/// `base` with `_P<paths>_k<k_max>` inserted before its extension.
std::string profile_output_path(const std::string& base, const ChannelProfile& profile);

}  // namespace otfs
