#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "oracles.hpp"
#include "otfs/detectors.hpp"

using namespace otfs;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// A channel with dominant diagonal and moderate cross-talk, well conditioned.
CMatrix coupled_matrix(Rng& rng, Eigen::Index n, double coupling) {
    return CMatrix::Identity(n, n) + coupling * oracle::random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
}

CVector random_symbols(Rng& rng, const Constellation& c, Eigen::Index n) {
    return map_bits(c, random_bits(rng, static_cast<std::size_t>(n) * c.bits_per_symbol()));
}

CVector add_noise(Rng& rng, CVector y, double sigma2) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += complex_gaussian(rng, sigma2);
    return y;
}

bool in_qam4_hull(Complex z) {
    return std::abs(z.real()) <= kInvSqrt2 + 1e-12 && std::abs(z.imag()) <= kInvSqrt2 + 1e-12;
}

}  // namespace

TEST_CASE("mmse_detect") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(31, 0);
    SUBCASE("identity system without noise") {
        const CVector x = random_symbols(rng, qam, 8);
        const auto res = mmse_detect(x, CMatrix::Identity(8, 8), 0.0, qam);
        CHECK((res.hard - x).norm() < 1e-15);
        CHECK(res.iterations == 1);
        CHECK(res.soft_var.isZero());
    }
    SUBCASE("unit noise shrinks by one half and keeps the quadrant") {
        CVector y(1);
        y[0] = Complex(1.0, 1.0) * kInvSqrt2;
        const auto res = mmse_detect(y, CMatrix::Identity(1, 1), 1.0, qam);
        CHECK(std::abs(res.soft_mean[0] - y[0] / 2.0) < 1e-15);
        CHECK(std::abs(res.hard[0] - y[0]) < 1e-15);
    }
    SUBCASE("normal equations agree with the augmented QR solve") {
        for (int i = 0; i < 20; ++i) {
            const CMatrix h = coupled_matrix(rng, 4, 0.5);
            const CVector y = oracle::random_vector(rng, 4);
            CHECK((mmse_filter(y, h, 0.01) - oracle::mmse_augmented_qr(y, h, 0.01)).norm() < 1e-8);
        }
    }
    SUBCASE("singular system at zero noise") {
        CMatrix h = CMatrix::Identity(3, 3);
        h.col(2) = h.col(1);
        CHECK_THROWS_AS(mmse_detect(CVector::Ones(3), h, 0.0, qam), SingularSystemError);
    }
}

TEST_CASE("pic_init") {
    SUBCASE("orthonormal columns: both modes coincide") {
        CVector y(2);
        y << Complex(2.0, 0.0), Complex(0.0, 2.0);
        for (auto mode : {InitMode::full_mmse, InitMode::scalar_mmse}) {
            const CVector x0 = pic_init(y, CMatrix::Identity(2, 2), 1.0, mode);
            CHECK(std::abs(x0[0] - Complex(1.0, 0.0)) < 1e-15);
            CHECK(std::abs(x0[1] - Complex(0.0, 1.0)) < 1e-15);
        }
    }
    SUBCASE("noiseless identity returns y") {
        Rng rng = trial_rng(32, 0);
        const CVector y = oracle::random_vector(rng, 5);
        for (auto mode : {InitMode::full_mmse, InitMode::scalar_mmse})
            CHECK((pic_init(y, CMatrix::Identity(5, 5), 0.0, mode) - y).norm() < 1e-15);
    }
    SUBCASE("full mode is the MMSE filter, scalar mode is per-column") {
        Rng rng = trial_rng(33, 0);
        const CMatrix h = coupled_matrix(rng, 4, 0.8);
        const CVector y = oracle::random_vector(rng, 4);
        CHECK((pic_init(y, h, 0.2, InitMode::full_mmse) - mmse_filter(y, h, 0.2)).norm() < 1e-12);
        const CVector scalar = pic_init(y, h, 0.2, InitMode::scalar_mmse);
        for (Eigen::Index q = 0; q < 4; ++q) {
            const Complex expected = h.col(q).dot(y) / (h.col(q).squaredNorm() + 0.2);
            CHECK(std::abs(scalar[q] - expected) < 1e-12);
        }
    }
}

TEST_CASE("pic_step") {
    Rng rng = trial_rng(34, 0);
    SUBCASE("no cross-talk returns y_q") {
        const CVector y = oracle::random_vector(rng, 4);
        const CVector prev = oracle::random_vector(rng, 4);
        for (Eigen::Index q = 0; q < 4; ++q) CHECK(std::abs(pic_step(y, CMatrix::Identity(4, 4), prev, q) - y[q]) < 1e-15);
    }
    SUBCASE("perfect cancellation is a fixed point") {
        const CMatrix h = oracle::random_matrix(rng, 6, 6);
        const CVector x = oracle::random_vector(rng, 6);
        const CVector y = h * x;
        for (Eigen::Index q = 0; q < 6; ++q) CHECK(std::abs(pic_step(y, h, x, q) - x[q]) < 1e-12);
    }
    SUBCASE("hand-evaluated 2x2 case") {
        CMatrix h(2, 2);
        h << 1.0, 0.5, 0.0, 1.0;
        CVector x(2);
        x << 1.0, -1.0;
        const CVector y = h * x;
        CVector prev(2);
        prev << 0.0, -1.0;
        CHECK(std::abs(pic_step(y, h, prev, 0) - Complex(1.0, 0.0)) < 1e-15);
    }
    SUBCASE("zero column") {
        CMatrix h = CMatrix::Identity(2, 2);
        h.col(1).setZero();
        CHECK_THROWS_AS(pic_step(CVector::Ones(2), h, CVector::Zero(2), 1), DegenerateColumnError);
    }
}

TEST_CASE("pic_variance") {
    CMatrix h(2, 2);
    h << Complex(kInvSqrt2, 0.0), 3.0, Complex(0.0, kInvSqrt2), 4.0;
    CHECK(pic_variance(h, 0.1, 0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(pic_variance(h, 0.0, 0) == 0.0);
    CHECK(pic_variance(h, 5.0, 1) == doctest::Approx(0.2).epsilon(1e-14));
    h.col(0).setZero();
    CHECK_THROWS_AS(pic_variance(h, 0.1, 0), DegenerateColumnError);
}

TEST_CASE("bse") {
    const auto qam4 = build_qam(4);
    SUBCASE("vanishing noise concentrates on the point") {
        const Complex a = qam4.point(2);
        const auto post = bse(a, 1e-9, qam4);
        CHECK(std::abs(post.mean - a) < 1e-12);
        CHECK(post.variance < 1e-12);
        const auto exact = bse(a + Complex(0.1, -0.05), 0.0, qam4);
        CHECK(exact.mean == a);
        CHECK(exact.variance == 0.0);
        CHECK(exact.probabilities[2] == 1.0);
    }
    SUBCASE("uninformative limit is uniform with unit variance") {
        for (double sigma : {1e12, std::numeric_limits<double>::infinity()}) {
            const auto post = bse({0.3, -0.2}, sigma, qam4);
            for (double p : post.probabilities) CHECK(p == doctest::Approx(0.25));
            CHECK(std::abs(post.mean) < 1e-9);
            CHECK(post.variance == doctest::Approx(1.0));
        }
    }
    SUBCASE("origin is symmetric") {
        for (double sigma : {0.01, 0.5, 3.0}) {
            const auto post = bse(0.0, sigma, qam4);
            for (double p : post.probabilities) CHECK(p == doctest::Approx(0.25));
            CHECK(std::abs(post.mean) < 1e-15);
        }
    }
    SUBCASE("high SNR exponents do not underflow") {
        const auto post = bse({5.0, 5.0}, 1e-4, qam4);
        CHECK(std::isfinite(post.mean.real()));
        CHECK(std::abs(post.mean - qam4.point(3)) < 1e-12);
    }
    SUBCASE("normalized, inside the hull, bounded variance") {
        Rng rng = trial_rng(35, 0);
        for (int order : {4, 16, 64}) {
            const auto c = build_qam(order);
            for (int i = 0; i < 500; ++i) {
                const Complex x = complex_gaussian(rng, 2.0);
                const double sigma = std::exp(std::uniform_real_distribution<double>(-8.0, 3.0)(rng));
                const auto post = bse(x, sigma, c);
                const double total = std::accumulate(post.probabilities.begin(), post.probabilities.end(), 0.0);
                CHECK(std::abs(total - 1.0) < 1e-12);
                CHECK(post.variance >= 0.0);
                CHECK(post.variance <= c.peak_energy() + 1e-12);
                const double edge = std::abs(c.point(0).real());
                CHECK(std::abs(post.mean.real()) <= edge + 1e-12);
                CHECK(std::abs(post.mean.imag()) <= edge + 1e-12);
                if (order == 4) CHECK(post.variance <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("dsc_error") {
    SUBCASE("exact estimate leaves no residual") {
        Rng rng = trial_rng(36, 0);
        const CMatrix h = oracle::random_matrix(rng, 5, 5);
        const CVector x = oracle::random_vector(rng, 5);
        for (Eigen::Index q = 0; q < 5; ++q) CHECK(dsc_error(h * x, h, x, q) < 1e-24);
    }
    SUBCASE("identity, y = [1, 0], zero estimate") {
        CVector y(2);
        y << 1.0, 0.0;
        CHECK(dsc_error(y, CMatrix::Identity(2, 2), CVector::Zero(2), 0) == doctest::Approx(1.0));
    }
    SUBCASE("hand-evaluated 2x2 case") {
        CMatrix h(2, 2);
        h << 1.0, 0.5, 0.0, 1.0;
        CVector x(2);
        x << 1.0, -1.0;
        const CVector y = h * x;
        CVector x_hat(2);
        x_hat << 1.1, -1.0;
        // Residual y - H x_hat = [-0.1, 0].
        CHECK(std::abs(dsc_error(y, h, x_hat, 0) - 0.01) < 1e-12);
        CHECK(std::abs(dsc_error(y, h, x_hat, 1) - 0.0016) < 1e-12);
    }
}

TEST_CASE("dsc_combine") {
    const Complex now(1.0, 0.0);
    const Complex before(0.0, 1.0);
    SUBCASE("equal errors take the midpoint") {
        const auto d = dsc_combine(now, before, 0.4, 0.4);
        CHECK(d.rho == doctest::Approx(0.5));
        CHECK(std::abs(d.x_dsc - Complex(0.5, 0.5)) < 1e-15);
    }
    SUBCASE("zero previous error keeps the previous estimate") {
        const auto d = dsc_combine(now, before, 0.3, 0.0);
        CHECK(d.rho == 0.0);
        CHECK(d.x_dsc == before);
    }
    SUBCASE("hand value 3 / (1 + 3)") { CHECK(dsc_combine(now, before, 1.0, 3.0).rho == doctest::Approx(0.75)); }
    SUBCASE("both residuals vanish") {
        const auto d = dsc_combine(now, before, 0.0, 0.0);
        CHECK(d.rho == 1.0);
        CHECK(d.x_dsc == now);
    }
}

TEST_CASE("bpic_dsc_detect on an interference-free system") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(37, 0);
    const CVector x = random_symbols(rng, qam, 16);
    const auto res = bpic_dsc_detect(x, CMatrix::Identity(16, 16), 1e-6, qam);
    CHECK((res.hard - x).norm() < 1e-15);
    CHECK(res.iterations <= 2);
    CHECK(res.bits == demap_hard(qam, x));
}

TEST_CASE("bpic_dsc_detect internals follow the per-symbol definitions") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(38, 0);
    const Eigen::Index n = 12;
    const double sigma2 = 0.05;
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix h = coupled_matrix(rng, n, 0.9);
        const CVector y = add_noise(rng, h * random_symbols(rng, qam, n), sigma2);
        CVector feedback = pic_init(y, h, sigma2, InitMode::full_mmse);
        CVector x_hat_prev;
        int calls = 0;
        const auto check = [&](const DetectorState& st) {
            ++calls;
            CHECK(st.t == calls);
            for (Eigen::Index q = 0; q < n; ++q) {
                CHECK(std::abs(st.x_pic[q] - pic_step(y, h, feedback, q)) < 1e-12);
                CHECK(std::abs(st.sigma_pic[q] - pic_variance(h, sigma2, q)) < 1e-15);
                const auto post = bse(st.x_pic[q], st.sigma_pic[q], qam);
                CHECK(std::abs(st.x_hat[q] - post.mean) < 1e-12);
                CHECK(std::abs(st.v_hat[q] - post.variance) < 1e-12);
                CHECK(std::abs(st.e[q] - dsc_error(y, h, st.x_hat, q)) < 1e-12);
                CHECK(st.rho[q] >= 0.0);
                CHECK(st.rho[q] <= 1.0);
                CHECK(in_qam4_hull(st.x_hat[q]));
                if (st.t == 1) {
                    CHECK(st.rho[q] == 1.0);
                    CHECK(st.x_dsc[q] == st.x_hat[q]);
                } else {
                    const auto d = dsc_combine(st.x_hat[q], x_hat_prev[q], st.e[q], st.e_prev[q]);
                    CHECK(std::abs(st.x_dsc[q] - d.x_dsc) < 1e-12);
                }
            }
            CHECK(std::abs(st.delta - (st.x_dsc - st.x_dsc_prev).norm()) < 1e-12);
            feedback = st.x_dsc;
            x_hat_prev = st.x_hat;
        };
        const auto res = bpic_dsc_detect(y, h, sigma2, qam, {}, check);
        CHECK(res.iterations == calls);
        CHECK(res.iterations <= 10);
        CHECK((res.soft_mean - feedback).norm() == 0.0);
    }
}

TEST_CASE("bpic_dsc_detect is invariant to a common rescaling") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(39, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix h = coupled_matrix(rng, 10, 1.0);
        const CVector y = add_noise(rng, h * random_symbols(rng, qam, 10), 0.1);
        const double c = 3.7;
        std::vector<DetectorState> base, scaled;
        const auto a = bpic_dsc_detect(y, h, 0.1, qam, {}, [&](const DetectorState& s) { base.push_back(s); });
        const auto b =
            bpic_dsc_detect(c * y, c * h, c * c * 0.1, qam, {}, [&](const DetectorState& s) { scaled.push_back(s); });
        REQUIRE(base.size() == scaled.size());
        for (std::size_t t = 0; t < base.size(); ++t) {
            CHECK((base[t].x_pic - scaled[t].x_pic).norm() < 1e-10);
            CHECK((base[t].sigma_pic - scaled[t].sigma_pic).norm() < 1e-10);
        }
        CHECK(a.hard == b.hard);
    }
}

TEST_CASE("bpic_dsc_detect fixed point at vanishing noise") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(40, 0);
    const CMatrix h = coupled_matrix(rng, 8, 1.5);
    const CVector x = random_symbols(rng, qam, 8);
    const CVector y = h * x;
    for (Eigen::Index q = 0; q < 8; ++q) CHECK(std::abs(pic_step(y, h, x, q) - x[q]) < 1e-12);
    const auto res = bpic_dsc_detect(y, h, 1e-10, qam);
    CHECK((res.hard - x).norm() < 1e-12);
}

TEST_CASE("one pass equals slicing a PIC pass after the MMSE start") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(41, 0);
    DetectorConfig cfg;
    cfg.t_max = 1;
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix h = coupled_matrix(rng, 10, 1.2);
        const CVector y = add_noise(rng, h * random_symbols(rng, qam, 10), 0.2);
        const CVector start = mmse_filter(y, h, 0.2);
        const auto res = bpic_dsc_detect(y, h, 0.2, qam, cfg);
        CHECK(res.iterations == 1);
        for (Eigen::Index q = 0; q < 10; ++q) CHECK(res.hard[q] == slice(qam, pic_step(y, h, start, q)).point);
    }
}

TEST_CASE("scalar initialization runs the same loop") {
    const auto qam = build_qam(16);
    Rng rng = trial_rng(42, 0);
    DetectorConfig cfg;
    cfg.init_mode = InitMode::scalar_mmse;
    const CMatrix h = coupled_matrix(rng, 6, 0.3);
    const CVector x = random_symbols(rng, qam, 6);
    const auto res = bpic_dsc_detect(add_noise(rng, h * x, 1e-4), h, 1e-4, qam, cfg);
    CHECK((res.hard - x).norm() < 1e-12);
}

TEST_CASE("bpic_dsc_detect errors") {
    const auto qam = build_qam(4);
    SUBCASE("zero column") {
        CMatrix h = CMatrix::Identity(3, 3);
        h.col(0).setZero();
        CHECK_THROWS_AS(bpic_dsc_detect(CVector::Ones(3), h, 0.1, qam), DegenerateColumnError);
    }
    SUBCASE("noise variance must be positive") {
        CHECK_THROWS_AS(bpic_dsc_detect(CVector::Ones(3), CMatrix::Identity(3, 3), 0.0, qam), std::invalid_argument);
    }
    SUBCASE("non-finite input reports the iteration and index") {
        CVector y = CVector::Ones(3);
        y[1] = std::numeric_limits<double>::quiet_NaN();
        try {
            bpic_dsc_detect(y, CMatrix::Identity(3, 3), 0.1, qam);
            FAIL("expected NumericalFailure");
        } catch (const NumericalFailure& e) {
            CHECK(e.iteration() == 1);
            // The residual product spreads the NaN, so the first entry reports it.
            CHECK(e.index() == 0);
        }
    }
    SUBCASE("bad config") {
        DetectorConfig cfg;
        cfg.t_max = 0;
        CHECK_THROWS_AS(bpic_dsc_detect(CVector::Ones(2), CMatrix::Identity(2, 2), 0.1, qam, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("ml_detect") {
    const auto qam = build_qam(4);
    Rng rng = trial_rng(43, 0);
    SUBCASE("noiseless invertible system") {
        const CMatrix h = coupled_matrix(rng, 4, 1.0);
        const CVector x = random_symbols(rng, qam, 4);
        CHECK((ml_detect(h * x, h, qam).hard - x).norm() < 1e-15);
    }
    SUBCASE("scalar") {
        CMatrix h(1, 1);
        h(0, 0) = 2.0;
        CVector y(1);
        y[0] = 2.0 * qam.point(1) + Complex(0.01, -0.02);
        CHECK(ml_detect(y, h, qam).hard[0] == qam.point(1));
    }
    SUBCASE("agrees with a recursive tree search") {
        for (int i = 0; i < 100; ++i) {
            const CMatrix h = oracle::random_matrix(rng, 4, 4);
            const CVector y = add_noise(rng, h * random_symbols(rng, qam, 4), 0.3);
            CHECK((ml_detect(y, h, qam).hard - oracle::ml_tree_search(y, h, qam)).norm() == 0.0);
        }
    }
    SUBCASE("column permutation permutes the decision") {
        for (int i = 0; i < 20; ++i) {
            const CMatrix h = oracle::random_matrix(rng, 4, 4);
            const CVector y = add_noise(rng, h * random_symbols(rng, qam, 4), 0.3);
            Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
            perm.indices() << 2, 0, 3, 1;
            const auto plain = ml_detect(y, h, qam);
            const auto permuted = ml_detect(y, h * perm, qam);
            CHECK((perm * permuted.hard - plain.hard).norm() == 0.0);
        }
    }
    SUBCASE("capacity guard") {
        CHECK_NOTHROW(ml_detect(CVector::Zero(10), CMatrix::Identity(10, 10), qam));
        CHECK_THROWS_AS(ml_detect(CVector::Zero(11), CMatrix::Identity(11, 11), qam), CapacityError);
    }
}
