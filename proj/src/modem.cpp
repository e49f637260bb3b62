#include "otfs/modem.hpp"

#include <cmath>
#include <numbers>

namespace otfs {

namespace {

void require_pulse(const OtfsGeometry& geom, const PulseShape& pulse) {
    if (pulse.tx_gains.size() != geom.delay_bins || pulse.rx_gains.size() != geom.delay_bins)
        throw std::invalid_argument("pulse shape length does not match the delay dimension");
}

void require_frame(const OtfsGeometry& geom, const DdFrame& x) {
    if (x.delay_bins() != geom.delay_bins || x.doppler_bins() != geom.doppler_bins)
        throw std::invalid_argument("DD frame is " + std::to_string(x.delay_bins()) + "x" +
                                    std::to_string(x.doppler_bins()) + ", geometry expects " +
                                    std::to_string(geom.delay_bins) + "x" +
                                    std::to_string(geom.doppler_bins));
}

}  // namespace

void OtfsGeometry::validate() const {
    if (delay_bins < 1 || doppler_bins < 1)
        throw std::invalid_argument("delay and Doppler dimensions must be positive");
    if (!(delta_f > 0.0)) throw std::invalid_argument("subcarrier spacing must be positive");
    if (cp_samples < 0 || cp_samples >= delay_bins)
        throw std::invalid_argument("CP length must lie in [0, L)");
}

DdFrame::DdFrame(int delay_bins, int doppler_bins)
    : delay_bins_(delay_bins), doppler_bins_(doppler_bins),
      vec_(CVector::Zero(static_cast<Eigen::Index>(delay_bins) * doppler_bins)) {
    if (delay_bins < 1 || doppler_bins < 1)
        throw std::invalid_argument("DD frame dimensions must be positive");
}

DdFrame DdFrame::from_vector(const OtfsGeometry& geom, CVector vec) {
    if (vec.size() != geom.size())
        throw std::invalid_argument("vector length " + std::to_string(vec.size()) +
                                    " does not match KL = " + std::to_string(geom.size()));
    DdFrame f(geom.delay_bins, geom.doppler_bins);
    f.vec_ = std::move(vec);
    return f;
}

PulseShape PulseShape::rectangular(int delay_bins) {
    return {RVector::Ones(delay_bins), RVector::Ones(delay_bins)};
}

CMatrix dft_matrix(int n) {
    if (n < 1) throw std::invalid_argument("DFT size must be positive");
    CMatrix f(n, n);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            // Reduce pq mod n first so large products keep full phase accuracy.
            const auto r = static_cast<double>((static_cast<long long>(p) * q) % n);
            f(p, q) = std::polar(norm, -2.0 * std::numbers::pi * r / n);
        }
    }
    return f;
}

CMatrix isfft(const OtfsGeometry& geom, const DdFrame& x) {
    require_frame(geom, x);
    const CMatrix fl = dft_matrix(geom.delay_bins);
    const CMatrix fk = dft_matrix(geom.doppler_bins);
    return fl * x.grid() * fk.adjoint();
}

CMatrix sfft(const OtfsGeometry& geom, const CMatrix& y_tf) {
    if (y_tf.rows() != geom.delay_bins || y_tf.cols() != geom.doppler_bins)
        throw std::invalid_argument("TF grid dimensions do not match geometry");
    const CMatrix fl = dft_matrix(geom.delay_bins);
    const CMatrix fk = dft_matrix(geom.doppler_bins);
    return fl.adjoint() * y_tf * fk;
}

CVector modulate(const OtfsGeometry& geom, const PulseShape& pulse, const DdFrame& x) {
    require_frame(geom, x);
    require_pulse(geom, pulse);
    const CMatrix fk = dft_matrix(geom.doppler_bins);
    CVector s(geom.size());
    Eigen::Map<CMatrix> s_grid(s.data(), geom.delay_bins, geom.doppler_bins);
    s_grid.noalias() = pulse.tx_gains.cast<Complex>().asDiagonal() * (x.grid() * fk.adjoint());
    return s;
}

DdFrame demodulate(const OtfsGeometry& geom, const PulseShape& pulse, const CVector& r) {
    require_pulse(geom, pulse);
    if (r.size() != geom.size())
        throw std::invalid_argument("received vector length " + std::to_string(r.size()) +
                                    " does not match KL = " + std::to_string(geom.size()));
    const CMatrix fk = dft_matrix(geom.doppler_bins);
    Eigen::Map<const CMatrix> r_grid(r.data(), geom.delay_bins, geom.doppler_bins);
    DdFrame y(geom.delay_bins, geom.doppler_bins);
    y.grid().noalias() = pulse.rx_gains.cast<Complex>().asDiagonal() * (r_grid * fk);
    return y;
}

CMatrix effective_channel(const OtfsGeometry& geom, const PulseShape& pulse, const CMatrix& h_time) {
    require_pulse(geom, pulse);
    const Eigen::Index n = geom.size();
    if (h_time.rows() != n || h_time.cols() != n)
        throw std::invalid_argument("time-domain channel must be KL x KL");

    const int L = geom.delay_bins;
    const int K = geom.doppler_bins;
    const CMatrix fk = dft_matrix(K);

    // (F_K kron G_rx) H: each column, viewed as an L x K grid, is mixed along
    // the Doppler axis and then scaled by the receive gains.
    const CMatrix fk_t = fk.transpose();
    const auto rx = pulse.rx_gains.cast<Complex>().asDiagonal();
    CMatrix left(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Map<const CMatrix> in(h_time.col(c).data(), L, K);
        Eigen::Map<CMatrix> out(left.col(c).data(), L, K);
        out.noalias() = rx * (in * fk_t);
    }

    // A (F_K^H kron G_tx): column slabs of width L are contiguous, so the
    // Doppler mixing is one product on an (n L) x K view.
    CMatrix result(n, n);
    Eigen::Map<const CMatrix> left_slabs(left.data(), n * L, K);
    Eigen::Map<CMatrix>(result.data(), n * L, K).noalias() = left_slabs * fk.adjoint();
    for (int k = 0; k < K; ++k) result.middleCols(k * L, L) *= pulse.tx_gains.cast<Complex>().asDiagonal();
    return result;
}

}  // namespace otfs
