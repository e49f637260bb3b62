#include "otfs/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "otfs/constellation.hpp"
#include "otfs/rng.hpp"

namespace otfs {

namespace {

constexpr std::uint64_t kBatchTrials = 64;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t count_bit_errors(const Bits& a, const Bits& b) {
    std::uint64_t errors = 0;
    for (std::size_t i = 0; i < a.size(); ++i) errors += a[i] != b[i];
    return errors;
}

// Runs fn(i) for i in [0, count) on `workers` threads with a static
// interleaved partition. Each index is handled exactly once.
template <typename Fn>
void parallel_for(std::uint64_t count, unsigned workers, Fn&& fn) {
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, count));
    if (workers <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::uint64_t i = w; i < count; i += workers) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace

std::string_view detector_name(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::bpic_dsc: return "bpic-dsc";
        case DetectorKind::mmse: return "mmse";
        case DetectorKind::ml: return "ml";
    }
    return "unknown";
}

DetectorKind parse_detector(std::string_view name) {
    if (name == "bpic-dsc") return DetectorKind::bpic_dsc;
    if (name == "mmse") return DetectorKind::mmse;
    if (name == "ml") return DetectorKind::ml;
    throw std::invalid_argument("unknown detector '" + std::string(name) + "' (expected bpic-dsc, mmse or ml)");
}

void SweepConfig::validate() const {
    geometry.validate();
    build_qam(qam_order);
    detector.validate();
    if (detectors.empty()) throw std::invalid_argument("at least one detector is required");
    if (snr_db.empty()) throw std::invalid_argument("at least one SNR point is required");
    if (max_frames < 1) throw std::invalid_argument("frames must be at least 1");
    if (profile.paths < 1) throw std::invalid_argument("paths must be at least 1");
    if (profile.k_max < 0) throw std::invalid_argument("kmax must be non-negative");
    if (profile.l_max < 0 || (profile.paths > 1 && profile.l_max < 1))
        throw std::invalid_argument("lmax must be at least 1 for multipath profiles");
    if (profile.l_max >= geometry.size()) throw std::invalid_argument("lmax must be below KL");
    if (fixed_channel) fixed_channel->validate();
}

double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

std::vector<TrialOutcome> run_trial(const SweepConfig& cfg, double snr_db, std::span<const DetectorKind> detectors,
                                    std::uint64_t trial_index, const IterationObserver& observer) {
    const auto start = Clock::now();
    const auto& geom = cfg.geometry;
    const Constellation qam = build_qam(cfg.qam_order);
    const PulseShape pulse = PulseShape::rectangular(geom.delay_bins);
    const double sigma2 = noise_variance(snr_db);

    // Draw order is fixed: bits, channel, noise.
    Rng rng = trial_rng(cfg.master_seed, trial_index);
    const Bits bits = random_bits(rng, static_cast<std::size_t>(geom.size()) * qam.bits_per_symbol());
    const DdChannel channel = cfg.fixed_channel
                                  ? *cfg.fixed_channel
                                  : sample_channel(rng, cfg.profile.paths, cfg.profile.l_max, cfg.profile.k_max);

    const DdFrame x = DdFrame::from_vector(geom, map_bits(qam, bits));
    const CVector s = modulate(geom, pulse, x);
    const CVector r = apply_channel_scalar(geom, channel, s, rng, sigma2);
    const DdFrame y = demodulate(geom, pulse, r);
    const CMatrix h_eff = effective_channel(geom, pulse, build_time_channel(geom, channel));
    const double shared = seconds_since(start);

    std::vector<TrialOutcome> out(detectors.size());
    for (std::size_t d = 0; d < detectors.size(); ++d) {
        const auto t0 = Clock::now();
        auto& o = out[d];
        try {
            DetectionResult res;
            switch (detectors[d]) {
                case DetectorKind::bpic_dsc:
                    res = bpic_dsc_detect(y.vec(), h_eff, sigma2, qam, cfg.detector, observer);
                    break;
                case DetectorKind::mmse: res = mmse_detect(y.vec(), h_eff, sigma2, qam); break;
                case DetectorKind::ml: res = ml_detect(y.vec(), h_eff, qam); break;
            }
            o.bit_errors = count_bit_errors(bits, res.bits);
            o.iterations = res.iterations;
        } catch (const NumericalFailure& e) {
            o.failed = true;
            o.fail_iteration = e.iteration();
            o.fail_index = e.index();
        } catch (const SingularSystemError&) {
            o.failed = true;
        } catch (const DegenerateColumnError& e) {
            o.failed = true;
            o.fail_index = e.column();
        }
        o.seconds = shared + seconds_since(t0);
    }
    return out;
}

TrialOutcome run_trial(const SweepConfig& cfg, double snr_db, DetectorKind detector, std::uint64_t trial_index) {
    const DetectorKind one[] = {detector};
    return run_trial(cfg, snr_db, one, trial_index).front();
}

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OTFS_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

std::vector<BerRecord> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    if (!cfg.output.empty()) {
        // Probe writability up front so a bad path fails before the run.
        const std::string probe = cfg.output + ".tmp";
        std::ofstream f(probe, std::ios::trunc);
        if (!f) throw IoError("cannot write output file '" + cfg.output + "'");
        f.close();
        std::filesystem::remove(probe);
    }

    const unsigned workers = resolve_workers(cfg.workers);
    const std::uint64_t bits_per_frame =
        static_cast<std::uint64_t>(cfg.geometry.size()) * static_cast<std::uint64_t>(build_qam(cfg.qam_order).bits_per_symbol());

    std::vector<BerRecord> records;
    for (const double snr : cfg.snr_db) {
        struct Cell {
            DetectorKind kind;
            BerRecord rec;
            std::uint64_t iteration_sum = 0;
            bool done = false;
        };
        std::vector<Cell> cells;
        for (const auto kind : cfg.detectors) {
            Cell c{kind, {}, 0, false};
            c.rec.detector = std::string(detector_name(kind));
            c.rec.snr_db = snr;
            cells.push_back(std::move(c));
        }

        std::uint64_t next = 0;
        while (next < cfg.max_frames) {
            std::vector<DetectorKind> active;
            std::vector<std::size_t> active_cells;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (!cells[i].done) {
                    active.push_back(cells[i].kind);
                    active_cells.push_back(i);
                }
            }
            if (active.empty()) break;

            const std::uint64_t batch = std::min(kBatchTrials, cfg.max_frames - next);
            std::vector<std::vector<TrialOutcome>> outcomes(batch);
            parallel_for(batch, workers, [&](std::uint64_t i) { outcomes[i] = run_trial(cfg, snr, active, next + i); });

            // Merge in trial order; a cell stops at the exact trial where its
            // error count reaches the target.
            for (std::size_t a = 0; a < active.size(); ++a) {
                Cell& cell = cells[active_cells[a]];
                for (std::uint64_t i = 0; i < batch && !cell.done; ++i) {
                    const TrialOutcome& o = outcomes[i][a];
                    auto& rec = cell.rec;
                    ++rec.frames;
                    rec.wall_seconds += o.seconds;
                    if (o.failed) {
                        ++rec.failed_trials;
                        if (!rec.first_failure) rec.first_failure = FailureSite{next + i, o.fail_iteration, o.fail_index};
                        continue;
                    }
                    rec.bits += bits_per_frame;
                    rec.bit_errors += o.bit_errors;
                    cell.iteration_sum += static_cast<std::uint64_t>(o.iterations);
                    if (cfg.min_bit_errors > 0 && rec.bit_errors >= cfg.min_bit_errors) cell.done = true;
                }
            }
            next += batch;
        }

        for (auto& cell : cells) {
            auto& rec = cell.rec;
            const std::uint64_t ok = rec.frames - rec.failed_trials;
            rec.ber = rec.bits > 0 ? static_cast<double>(rec.bit_errors) / static_cast<double>(rec.bits) : 0.0;
            rec.mean_iterations = ok > 0 ? static_cast<double>(cell.iteration_sum) / static_cast<double>(ok) : 0.0;
            if (!cfg.record_timing) rec.wall_seconds = 0.0;
            records.push_back(std::move(rec));
        }
    }

    if (!cfg.output.empty()) write_csv_atomic(cfg.output, records);
    return records;
}

std::string format_csv(std::span<const BerRecord> records) {
    std::ostringstream os;
    os << csv_header << '\n';
    for (const auto& r : records) {
        os << r.detector << ',' << format_double("%g", r.snr_db) << ',' << r.frames << ',' << r.bits << ','
           << r.bit_errors << ',' << format_double("%.6e", r.ber) << ',' << format_double("%.4f", r.mean_iterations)
           << ',' << r.failed_trials << ',' << format_double("%.3f", r.wall_seconds) << '\n';
    }
    return os.str();
}

void write_csv_atomic(const std::string& path, std::span<const BerRecord> records) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write output file '" + path + "'");
        f << format_csv(records);
        if (!f.flush()) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string profile_output_path(const std::string& base, const ChannelProfile& profile) {
    const std::filesystem::path p(base);
    const std::string suffix = "_P" + std::to_string(profile.paths) + "_k" + std::to_string(profile.k_max);
    auto name = p.stem().string() + suffix + p.extension().string();
    return (p.parent_path() / name).string();
}

}  // namespace otfs
