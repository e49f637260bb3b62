#pragma once

#include <functional>
#include <vector>

#include "otfs/constellation.hpp"
#include "otfs/types.hpp"

namespace otfs {

// All detectors work on the generic linear model y = H x + w with
// circular complex white noise of variance sigma2 per entry.

enum class InitMode {
    full_mmse,    ///< whole-matrix MMSE filter (H^H H + sigma2 I)^-1 H^H y
    scalar_mmse,  ///< per-symbol filter that ignores interference
};

struct DetectorConfig {
    int t_max = 10;
    double zeta = 1e-4;
    InitMode init_mode = InitMode::full_mmse;

    void validate() const;
};

struct DetectionResult {
    CVector hard;       ///< sliced symbols
    Bits bits;          ///< labels of `hard`, concatenated
    CVector soft_mean;  ///< final combined estimate (pre-slicing)
    RVector soft_var;   ///< final posterior variances; zeros for linear detectors
    int iterations = 0;
};

/// Snapshot of one pass of the B-PIC-DSC loop, handed to an observer after
/// every iteration.
struct DetectorState {
    int t = 0;
    CVector x_pic;       ///< interference-cancelled matched-filter outputs
    RVector sigma_pic;   ///< their approximate variances
    CVector x_hat;       ///< posterior means
    RVector v_hat;       ///< posterior variances
    CVector x_dsc;       ///< combined estimate fed back to the next pass
    CVector x_dsc_prev;
    RVector e;           ///< per-symbol MRC residual energy
    RVector e_prev;
    RVector rho;         ///< combining weight on the current estimate
    double delta = 0.0;  ///< ||x_dsc - x_dsc_prev||
};

using IterationObserver = std::function<void(const DetectorState&)>;

/// Linear MMSE filter output (H^H H + sigma2 I)^-1 H^H y, before slicing.
/// Throws SingularSystemError when the normal matrix is numerically singular.
CVector mmse_filter(const CVector& y, const CMatrix& h, double sigma2);

DetectionResult mmse_detect(const CVector& y, const CMatrix& h, double sigma2, const Constellation& c);

/// Starting point of the cancellation loop.
CVector pic_init(const CVector& y, const CMatrix& h, double sigma2, InitMode mode);

/// Matched-filter output for symbol q after subtracting every other
/// symbol's contribution under `x_prev`:
/// h_q^H (y - H x_prev + h_q x_prev[q]) / ||h_q||^2.
Complex pic_step(const CVector& y, const CMatrix& h, const CVector& x_prev, Eigen::Index q);

/// sigma2 / ||h_q||^2.
double pic_variance(const CMatrix& h, double sigma2, Eigen::Index q);

struct SymbolPosterior {
    Complex mean;
    double variance = 0.0;
    std::vector<double> probabilities;  ///< one per constellation point
};

/// Moments of the discrete posterior p(a) ~ exp(-|x_pic - a|^2 / sigma) under a
/// uniform prior. sigma = 0 collapses to a point mass on the nearest point.
SymbolPosterior bse(Complex x_pic, double sigma, const Constellation& c);

/// |h_q^H (y - H x_hat)|^2 / ||h_q||^4, with the full x_hat (entry q kept).
double dsc_error(const CVector& y, const CMatrix& h, const CVector& x_hat, Eigen::Index q);

struct DscOutput {
    Complex x_dsc;
    double rho = 0.0;
};

/// rho = e_prev / (e_t + e_prev), x_dsc = (1 - rho) x_prev + rho x_t.
/// When both residuals vanish rho is 1.
DscOutput dsc_combine(Complex x_hat_t, Complex x_hat_prev, double e_t, double e_prev);

/// Bayesian parallel interference cancellation with decision statistics
/// combining.
///
/// Each pass cancels interference against the previous combined estimate,
/// forms a Gaussian posterior per symbol, takes its mean and variance,
/// weights the current and previous means by their MRC residuals, and feeds
/// the result back. The first pass has no previous estimate and uses rho = 1.
/// Stops when the full-vector change of the combined estimate is at most
/// `cfg.zeta` or after `cfg.t_max` passes. Throws NumericalFailure on a
/// non-finite intermediate value.
DetectionResult bpic_dsc_detect(const CVector& y, const CMatrix& h, double sigma2, const Constellation& c,
                                const DetectorConfig& cfg = {}, const IterationObserver& observer = {});

/// Exhaustive maximum-likelihood search over the alphabet^n. Ties go to the
/// first candidate in lexicographic order (entry 0 most significant).
/// Throws CapacityError when M^n exceeds 2^20.
DetectionResult ml_detect(const CVector& y, const CMatrix& h, const Constellation& c);

}  // namespace otfs
