#include "otfs/channel.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace otfs {

void DdChannel::validate() const {
    if (paths.empty()) throw std::invalid_argument("channel has no paths");
    for (const auto& p : paths) {
        if (p.delay < 0 || p.delay > l_max)
            throw std::invalid_argument("delay index " + std::to_string(p.delay) + " outside [0, " +
                                        std::to_string(l_max) + "]");
        if (std::abs(p.doppler) > k_max)
            throw std::invalid_argument("Doppler index " + std::to_string(p.doppler) + " outside [-" +
                                        std::to_string(k_max) + ", " + std::to_string(k_max) + "]");
    }
}

DdChannel sample_channel(Rng& rng, int paths, int l_max, int k_max) {
    if (paths < 1) throw std::invalid_argument("a channel needs at least one path");
    if (l_max < 1 && paths > 1) throw std::invalid_argument("l_max must be >= 1 for multipath channels");
    if (k_max < 0) throw std::invalid_argument("k_max must be non-negative");

    DdChannel ch;
    ch.l_max = l_max;
    ch.k_max = k_max;
    ch.paths.reserve(static_cast<std::size_t>(paths));
    std::uniform_int_distribution<int> delay_dist(1, std::max(1, l_max));
    std::uniform_int_distribution<int> doppler_dist(-k_max, k_max);
    const double variance = 1.0 / paths;
    for (int i = 0; i < paths; ++i) {
        ChannelPath p;
        p.delay = i == 0 ? 0 : delay_dist(rng);
        p.doppler = doppler_dist(rng);
        p.gain = complex_gaussian(rng, variance);
        ch.paths.push_back(p);
    }
    return ch;
}

CMatrix delay_shift_matrix(int size, int shift) {
    if (size < 1) throw std::invalid_argument("matrix size must be positive");
    CMatrix m = CMatrix::Zero(size, size);
    const int s = ((shift % size) + size) % size;
    for (int n = 0; n < size; ++n) m(n, (n - s + size) % size) = 1.0;
    return m;
}

CMatrix doppler_matrix(int size, int doppler) {
    if (size < 1) throw std::invalid_argument("matrix size must be positive");
    CMatrix m = CMatrix::Zero(size, size);
    for (int n = 0; n < size; ++n) {
        const auto phase = static_cast<double>((static_cast<long long>(doppler) * n) % size);
        m(n, n) = std::polar(1.0, 2.0 * std::numbers::pi * phase / size);
    }
    return m;
}

CMatrix build_time_channel(const OtfsGeometry& geom, const DdChannel& ch) {
    const int n = geom.size();
    CMatrix h = CMatrix::Zero(n, n);
    for (const auto& p : ch.paths) {
        if (p.delay < 0 || p.delay >= n)
            throw std::invalid_argument("delay index " + std::to_string(p.delay) + " must lie in [0, KL)");
        // I(l) Delta(k): row r picks column m = (r - l) mod KL scaled by the
        // Doppler phase of sample m.
        for (int r = 0; r < n; ++r) {
            const int m = (r - p.delay + n) % n;
            const auto phase = static_cast<double>(((static_cast<long long>(p.doppler) * m) % n + n) % n);
            h(r, m) += p.gain * std::polar(1.0, 2.0 * std::numbers::pi * phase / n);
        }
    }
    return h;
}

CVector apply_channel_scalar(const OtfsGeometry& geom, const DdChannel& ch, const CVector& s, Rng& rng,
                             double sigma2) {
    const int n = geom.size();
    if (s.size() != n)
        throw std::invalid_argument("transmit vector length " + std::to_string(s.size()) +
                                    " does not match KL = " + std::to_string(n));
    if (sigma2 < 0.0) throw std::invalid_argument("noise variance must be non-negative");
    for (const auto& p : ch.paths)
        if (p.delay < 0 || p.delay >= n)
            throw std::invalid_argument("delay index " + std::to_string(p.delay) + " must lie in [0, KL)");

    CVector r = CVector::Zero(n);
    for (int t = 0; t < n; ++t) {
        Complex acc = 0.0;
        for (const auto& p : ch.paths) {
            const int lagged = t - p.delay;
            const double angle = 2.0 * std::numbers::pi * p.doppler * lagged / n;
            acc += p.gain * std::polar(1.0, angle) * s[((lagged % n) + n) % n];
        }
        r[t] = acc;
    }
    if (sigma2 > 0.0)
        for (int t = 0; t < n; ++t) r[t] += complex_gaussian(rng, sigma2);
    return r;
}

std::string format_channel(const DdChannel& ch) {
    std::ostringstream os;
    os << "# paths=" << ch.paths.size() << " l_max=" << ch.l_max << " k_max=" << ch.k_max << '\n';
    os << std::setprecision(17);
    for (const auto& p : ch.paths)
        os << p.gain.real() << ' ' << p.gain.imag() << ' ' << p.delay << ' ' << p.doppler << '\n';
    return os.str();
}

DdChannel parse_channel(std::string_view text) {
    DdChannel ch;
    bool have_header = false;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line.front() == '#') {
            std::size_t declared = 0;
            if (std::sscanf(line.c_str(), "# paths=%zu l_max=%d k_max=%d", &declared, &ch.l_max, &ch.k_max) == 3)
                have_header = true;
            continue;
        }
        std::istringstream fields(line);
        double re = 0.0, im = 0.0;
        ChannelPath p;
        std::string extra;
        if (!(fields >> re >> im >> p.delay >> p.doppler) || (fields >> extra))
            throw std::invalid_argument("malformed channel record at line " + std::to_string(line_no));
        p.gain = {re, im};
        ch.paths.push_back(p);
    }
    if (ch.paths.empty()) throw std::invalid_argument("channel record has no paths");
    if (!have_header) {
        for (const auto& p : ch.paths) {
            ch.l_max = std::max(ch.l_max, p.delay);
            ch.k_max = std::max(ch.k_max, std::abs(p.doppler));
        }
    }
    ch.validate();
    return ch;
}

}  // namespace otfs
