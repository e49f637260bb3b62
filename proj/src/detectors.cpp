#include "otfs/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otfs {

namespace {

RVector column_energies(const CMatrix& h) {
    RVector norms = h.colwise().squaredNorm().transpose();
    for (Eigen::Index q = 0; q < norms.size(); ++q)
        if (!(norms[q] > 0.0)) throw DegenerateColumnError(q);
    return norms;
}

void require_system(const CVector& y, const CMatrix& h) {
    if (h.rows() != y.size())
        throw std::invalid_argument("observation length " + std::to_string(y.size()) +
                                    " does not match channel rows " + std::to_string(h.rows()));
    if (h.cols() == 0) throw std::invalid_argument("channel matrix has no columns");
}

void require_column(const CMatrix& h, Eigen::Index q) {
    if (q < 0 || q >= h.cols()) throw std::out_of_range("symbol index out of range");
}

// Posterior mean and variance without allocating; `weights` has one slot per point.
void posterior_moments(Complex x_pic, double sigma, const Constellation& c, std::span<double> weights,
                       Complex& mean, double& variance) {
    const auto pts = c.points();
    if (sigma == 0.0) {
        std::fill(weights.begin(), weights.end(), 0.0);
        const auto idx = nearest_index(c, x_pic);
        weights[idx] = 1.0;
        mean = pts[idx];
        variance = 0.0;
        return;
    }
    // Shift exponents by their maximum; at high SNR the raw values underflow.
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        weights[i] = -std::norm(x_pic - pts[i]) / sigma;
        best = std::max(best, weights[i]);
    }
    double total = 0.0;
    for (auto& w : weights) {
        w = std::exp(w - best);
        total += w;
    }
    mean = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        weights[i] /= total;
        mean += weights[i] * pts[i];
    }
    variance = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) variance += weights[i] * std::norm(pts[i] - mean);
}

DetectionResult finish(const Constellation& c, CVector soft_mean, RVector soft_var, int iterations) {
    DetectionResult out;
    out.hard.resize(soft_mean.size());
    for (Eigen::Index i = 0; i < soft_mean.size(); ++i) out.hard[i] = c.point(nearest_index(c, soft_mean[i]));
    out.bits = demap_hard(c, soft_mean);
    out.soft_mean = std::move(soft_mean);
    out.soft_var = std::move(soft_var);
    out.iterations = iterations;
    return out;
}

}  // namespace

void DetectorConfig::validate() const {
    if (t_max < 1) throw std::invalid_argument("t_max must be at least 1");
    if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
}

CVector mmse_filter(const CVector& y, const CMatrix& h, double sigma2) {
    require_system(y, h);
    if (sigma2 < 0.0) throw std::invalid_argument("noise variance must be non-negative");
    CMatrix normal = CMatrix::Zero(h.cols(), h.cols());
    normal.selfadjointView<Eigen::Lower>().rankUpdate(h.adjoint());
    normal.diagonal().array() += sigma2;
    const Eigen::LLT<CMatrix, Eigen::Lower> llt(normal);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
        throw SingularSystemError("MMSE normal equations are numerically singular");
    return llt.solve(h.adjoint() * y);
}

DetectionResult mmse_detect(const CVector& y, const CMatrix& h, double sigma2, const Constellation& c) {
    CVector est = mmse_filter(y, h, sigma2);
    RVector zeros = RVector::Zero(est.size());
    return finish(c, std::move(est), std::move(zeros), 1);
}

CVector pic_init(const CVector& y, const CMatrix& h, double sigma2, InitMode mode) {
    if (mode == InitMode::full_mmse) return mmse_filter(y, h, sigma2);
    require_system(y, h);
    if (sigma2 < 0.0) throw std::invalid_argument("noise variance must be non-negative");
    const RVector norms = h.colwise().squaredNorm().transpose();
    CVector matched = h.adjoint() * y;
    for (Eigen::Index q = 0; q < matched.size(); ++q) {
        const double denom = norms[q] + sigma2;
        if (!(denom > 0.0)) throw SingularSystemError("scalar MMSE filter is singular at column " + std::to_string(q));
        matched[q] /= denom;
    }
    return matched;
}

Complex pic_step(const CVector& y, const CMatrix& h, const CVector& x_prev, Eigen::Index q) {
    require_system(y, h);
    require_column(h, q);
    if (x_prev.size() != h.cols()) throw std::invalid_argument("estimate length does not match channel columns");
    const double energy = h.col(q).squaredNorm();
    if (!(energy > 0.0)) throw DegenerateColumnError(q);
    CVector others = x_prev;
    others[q] = 0.0;
    const CVector cancelled = y - h * others;
    return h.col(q).dot(cancelled) / energy;
}

double pic_variance(const CMatrix& h, double sigma2, Eigen::Index q) {
    require_column(h, q);
    const double energy = h.col(q).squaredNorm();
    if (!(energy > 0.0)) throw DegenerateColumnError(q);
    return sigma2 / energy;
}

SymbolPosterior bse(Complex x_pic, double sigma, const Constellation& c) {
    if (sigma < 0.0 || std::isnan(sigma)) throw std::invalid_argument("posterior variance must be non-negative");
    SymbolPosterior out;
    out.probabilities.resize(static_cast<std::size_t>(c.order()));
    posterior_moments(x_pic, sigma, c, out.probabilities, out.mean, out.variance);
    return out;
}

double dsc_error(const CVector& y, const CMatrix& h, const CVector& x_hat, Eigen::Index q) {
    require_system(y, h);
    require_column(h, q);
    if (x_hat.size() != h.cols()) throw std::invalid_argument("estimate length does not match channel columns");
    const double energy = h.col(q).squaredNorm();
    if (!(energy > 0.0)) throw DegenerateColumnError(q);
    const CVector residual = y - h * x_hat;
    return std::norm(h.col(q).dot(residual) / energy);
}

DscOutput dsc_combine(Complex x_hat_t, Complex x_hat_prev, double e_t, double e_prev) {
    const double total = e_t + e_prev;
    const double rho = total > 0.0 ? e_prev / total : 1.0;
    return {(1.0 - rho) * x_hat_prev + rho * x_hat_t, rho};
}

DetectionResult bpic_dsc_detect(const CVector& y, const CMatrix& h, double sigma2, const Constellation& c,
                                const DetectorConfig& cfg, const IterationObserver& observer) {
    cfg.validate();
    require_system(y, h);
    if (h.rows() != h.cols()) throw std::invalid_argument("B-PIC-DSC expects a square channel matrix");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("B-PIC-DSC requires a positive noise variance");

    const Eigen::Index n = h.cols();
    const RVector energy = column_energies(h);
    const CMatrix h_adj = h.adjoint();

    DetectorState st;
    st.x_pic = pic_init(y, h, sigma2, cfg.init_mode);
    st.sigma_pic = sigma2 * energy.cwiseInverse();
    st.x_hat.resize(n);
    st.v_hat.resize(n);
    st.rho.resize(n);
    st.x_dsc.resize(n);
    // The first convergence check compares against the initial estimate.
    st.x_dsc_prev = st.x_pic;
    st.e = RVector::Zero(n);

    CVector feedback = st.x_pic;
    CVector x_hat_prev;
    std::vector<double> weights(static_cast<std::size_t>(c.order()));
    CVector residual(n);

    int t = 1;
    for (;; ++t) {
        st.t = t;
        // Cancelling every symbol but q and matched filtering equals
        // x_q + h_q^H (y - H x) / ||h_q||^2, so one residual serves all q.
        // Every entry reads only the previous pass's feedback vector.
        residual.noalias() = y - h * feedback;
        st.x_pic.noalias() = h_adj * residual;
        st.x_pic = feedback + st.x_pic.cwiseQuotient(energy.cast<Complex>());

        for (Eigen::Index q = 0; q < n; ++q) {
            Complex mean;
            double var = 0.0;
            posterior_moments(st.x_pic[q], st.sigma_pic[q], c, weights, mean, var);
            st.x_hat[q] = mean;
            st.v_hat[q] = var;
        }

        residual.noalias() = y - h * st.x_hat;
        const CVector mrc = h_adj * residual;
        st.e_prev = st.e;
        for (Eigen::Index q = 0; q < n; ++q) st.e[q] = std::norm(mrc[q] / energy[q]);

        for (Eigen::Index q = 0; q < n; ++q) {
            if (t == 1) {
                st.rho[q] = 1.0;
                st.x_dsc[q] = st.x_hat[q];
            } else {
                const auto d = dsc_combine(st.x_hat[q], x_hat_prev[q], st.e[q], st.e_prev[q]);
                st.rho[q] = d.rho;
                st.x_dsc[q] = d.x_dsc;
            }
            if (!std::isfinite(st.x_dsc[q].real()) || !std::isfinite(st.x_dsc[q].imag()) ||
                !std::isfinite(st.e[q]))
                throw NumericalFailure(t, q);
        }

        // Whole-vector norm; a per-entry test at the same zeta is implied by
        // this one, and this one by a per-entry test at zeta / sqrt(n).
        st.delta = (st.x_dsc - st.x_dsc_prev).norm();
        if (observer) observer(st);

        feedback = st.x_dsc;
        x_hat_prev = st.x_hat;
        if (st.delta <= cfg.zeta || t >= cfg.t_max) break;
        st.x_dsc_prev = st.x_dsc;
    }
    return finish(c, std::move(st.x_dsc), std::move(st.v_hat), t);
}

DetectionResult ml_detect(const CVector& y, const CMatrix& h, const Constellation& c) {
    require_system(y, h);
    const Eigen::Index n = h.cols();
    const double log2_space = static_cast<double>(n) * c.bits_per_symbol();
    if (log2_space > 20.0)
        throw CapacityError("ML search space 2^" + std::to_string(static_cast<long long>(log2_space)) +
                            " exceeds the 2^20 guard");

    const auto pts = c.points();
    const auto m = pts.size();
    std::vector<std::size_t> digits(static_cast<std::size_t>(n), 0);
    CVector candidate(n);
    for (Eigen::Index i = 0; i < n; ++i) candidate[i] = pts[0];
    CVector best = candidate;
    double best_metric = std::numeric_limits<double>::infinity();

    while (true) {
        const double metric = (y - h * candidate).squaredNorm();
        if (metric < best_metric) {
            best_metric = metric;
            best = candidate;
        }
        // Odometer with the last entry as the fastest-moving digit.
        Eigen::Index pos = n - 1;
        while (pos >= 0) {
            auto& d = digits[static_cast<std::size_t>(pos)];
            if (++d < m) {
                candidate[pos] = pts[d];
                break;
            }
            d = 0;
            candidate[pos] = pts[0];
            --pos;
        }
        if (pos < 0) break;
    }
    return finish(c, std::move(best), RVector::Zero(n), 1);
}

}  // namespace otfs
