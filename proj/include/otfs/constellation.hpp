#pragma once

#include <cstddef>
#include <span>

#include "otfs/types.hpp"

namespace otfs {

/// Gray-labeled square M-QAM with unit average symbol energy.
///
/// Point i carries label i: the label's upper half of bits selects the
/// in-phase level and the lower half the quadrature level, each through a
/// binary-reflected Gray code over levels sorted by ascending amplitude.
class Constellation {
public:
    int order() const noexcept { return static_cast<int>(points_.size()); }
    int bits_per_symbol() const noexcept { return bits_per_symbol_; }
    std::span<const Complex> points() const noexcept { return points_; }
    const Complex& point(std::size_t index) const { return points_.at(index); }

    /// Bit pattern (MSB first) carried by point `index`.
    Bits label(std::size_t index) const;

    /// Largest |a|^2 over the alphabet.
    double peak_energy() const noexcept { return peak_energy_; }

private:
    friend Constellation build_qam(int order);
    Constellation(std::vector<Complex> points, int bits_per_symbol);

    std::vector<Complex> points_;
    int bits_per_symbol_ = 0;
    double peak_energy_ = 0.0;
};

struct Decision {
    std::size_t index;
    Complex point;
    Bits bits;
};

/// Throws std::invalid_argument unless `order` is 4, 16, 64, ... (an even power of two).
Constellation build_qam(int order);

/// Maps each consecutive group of bits_per_symbol bits (MSB first) to a point.
CVector map_bits(const Constellation& c, std::span<const std::uint8_t> bits);

/// Index of the nearest point; ties go to the lowest index.
std::size_t nearest_index(const Constellation& c, Complex z) noexcept;

Decision slice(const Constellation& c, Complex z);

/// Hard-slices every entry and concatenates the labels.
Bits demap_hard(const Constellation& c, const CVector& z);

}  // namespace otfs
