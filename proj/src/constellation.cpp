#include "otfs/constellation.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace otfs {

Constellation::Constellation(std::vector<Complex> points, int bits_per_symbol)
    : points_(std::move(points)), bits_per_symbol_(bits_per_symbol) {
    for (const auto& p : points_) peak_energy_ = std::max(peak_energy_, std::norm(p));
}

Bits Constellation::label(std::size_t index) const {
    if (index >= points_.size()) throw std::out_of_range("constellation index out of range");
    Bits out(static_cast<std::size_t>(bits_per_symbol_));
    for (int b = 0; b < bits_per_symbol_; ++b)
        out[static_cast<std::size_t>(b)] = (index >> (bits_per_symbol_ - 1 - b)) & 1U;
    return out;
}

Constellation build_qam(int order) {
    if (order < 4 || !std::has_single_bit(static_cast<unsigned>(order)) ||
        std::countr_zero(static_cast<unsigned>(order)) % 2 != 0) {
        throw std::invalid_argument("QAM order must be an even power of two >= 4, got " +
                                    std::to_string(order));
    }
    const int bits = std::countr_zero(static_cast<unsigned>(order));
    const int half = bits / 2;
    const unsigned side = 1U << half;

    // Gray label -> amplitude on one axis.
    std::vector<double> level_of_label(side);
    for (unsigned i = 0; i < side; ++i) {
        const unsigned gray = i ^ (i >> 1);
        level_of_label[gray] = 2.0 * i - (side - 1.0);
    }
    // Mean energy of a side x side grid of odd integers is 2(M-1)/3.
    const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);

    std::vector<Complex> points(static_cast<std::size_t>(order));
    for (unsigned label = 0; label < static_cast<unsigned>(order); ++label) {
        const unsigned i_label = label >> half;
        const unsigned q_label = label & (side - 1);
        points[label] = Complex(level_of_label[i_label], level_of_label[q_label]) * scale;
    }
    return Constellation(std::move(points), bits);
}

CVector map_bits(const Constellation& c, std::span<const std::uint8_t> bits) {
    const auto m = static_cast<std::size_t>(c.bits_per_symbol());
    if (bits.size() % m != 0)
        throw std::invalid_argument("bit count " + std::to_string(bits.size()) +
                                    " is not a multiple of " + std::to_string(m));
    CVector out(static_cast<Eigen::Index>(bits.size() / m));
    for (Eigen::Index s = 0; s < out.size(); ++s) {
        std::size_t label = 0;
        for (std::size_t b = 0; b < m; ++b) label = (label << 1) | (bits[s * m + b] & 1U);
        out[s] = c.point(label);
    }
    return out;
}

std::size_t nearest_index(const Constellation& c, Complex z) noexcept {
    const auto pts = c.points();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = std::norm(z - pts[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Decision slice(const Constellation& c, Complex z) {
    const auto idx = nearest_index(c, z);
    return {idx, c.point(idx), c.label(idx)};
}

Bits demap_hard(const Constellation& c, const CVector& z) {
    const auto m = static_cast<std::size_t>(c.bits_per_symbol());
    Bits out;
    out.reserve(static_cast<std::size_t>(z.size()) * m);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const auto idx = nearest_index(c, z[i]);
        for (std::size_t b = 0; b < m; ++b) out.push_back((idx >> (m - 1 - b)) & 1U);
    }
    return out;
}

}  // namespace otfs
