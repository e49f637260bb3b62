#pragma once

#include "otfs/types.hpp"

namespace otfs {

// Frame geometry. `delay_bins` (L) subcarriers by `doppler_bins` (K) slots,
// slot duration T = 1 / delta_f.
struct OtfsGeometry {
    int delay_bins = 12;
    int doppler_bins = 7;
    double delta_f = 15e3;
    int cp_samples = 6;

    int size() const noexcept { return delay_bins * doppler_bins; }
    double slot_duration() const noexcept { return 1.0 / delta_f; }
    double sample_period() const noexcept { return slot_duration() / delay_bins; }
    int frame_samples() const noexcept { return size() + cp_samples; }
    double frame_duration() const noexcept { return frame_samples() * sample_period(); }

    /// Throws std::invalid_argument on non-positive sizes or a CP outside [0, L).
    void validate() const;
};

/// Delay-Doppler symbol grid X[l, k] stored column-major, so the storage is
/// also the vectorization x[l + k*L].
class DdFrame {
public:
    DdFrame(int delay_bins, int doppler_bins);
    static DdFrame from_vector(const OtfsGeometry& geom, CVector vec);

    int delay_bins() const noexcept { return delay_bins_; }
    int doppler_bins() const noexcept { return doppler_bins_; }

    Complex& operator()(int l, int k) { return vec_[l + k * delay_bins_]; }
    const Complex& operator()(int l, int k) const { return vec_[l + k * delay_bins_]; }

    Eigen::Map<CMatrix> grid() { return {vec_.data(), delay_bins_, doppler_bins_}; }
    Eigen::Map<const CMatrix> grid() const { return {vec_.data(), delay_bins_, doppler_bins_}; }
    const CVector& vec() const noexcept { return vec_; }
    CVector& vec() noexcept { return vec_; }

private:
    int delay_bins_;
    int doppler_bins_;
    CVector vec_;
};

// Diagonal pulse-shaping gains g(nT/L), n = 0..L-1.
struct PulseShape {
    RVector tx_gains;
    RVector rx_gains;

    static PulseShape rectangular(int delay_bins);
};

/// Unitary DFT matrix, entry (p, q) = exp(-j 2 pi p q / n) / sqrt(n).
CMatrix dft_matrix(int n);

/// DD grid to TF grid: F_L X F_K^H.
CMatrix isfft(const OtfsGeometry& geom, const DdFrame& x);

/// TF grid to DD grid: F_L^H Y F_K.
CMatrix sfft(const OtfsGeometry& geom, const CMatrix& y_tf);

/// Heisenberg transform of the ISFFT output, s = vec(G_tx X F_K^H).
CVector modulate(const OtfsGeometry& geom, const PulseShape& pulse, const DdFrame& x);

/// Wigner transform followed by the SFFT, y = vec(G_rx R F_K).
DdFrame demodulate(const OtfsGeometry& geom, const PulseShape& pulse, const CVector& r);

/// DD-domain channel seen by the detector:
/// (F_K kron G_rx) H (F_K^H kron G_tx), without materializing the Kronecker factors.
CMatrix effective_channel(const OtfsGeometry& geom, const PulseShape& pulse, const CMatrix& h_time);

}  // namespace otfs
