#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "lrukit/experiments.hpp"
#include "lrukit/init.hpp"

using namespace lrukit;

TEST_SUITE("init") {
    TEST_CASE("ring inverse CDF at the boundaries") {
        const auto [nu0, th0] = ring_point(RingConfig{0.5, 0.9}, 0.0, 0.3);
        CHECK(nu0 == doctest::Approx(std::log(2.0)));
        CHECK(std::exp(-nu0) == doctest::Approx(0.5));

        const auto [nu1, th1] = ring_point(RingConfig{0.0, 1.0}, 1.0, 0.25);
        CHECK(nu1 == doctest::Approx(0.0));
        CHECK(th1 == doctest::Approx(std::numbers::pi / 2));
        const auto lam = std::exp(std::complex<double>(-nu1, th1));
        CHECK(lam.real() == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(lam.imag() == doctest::Approx(1.0));
    }

    TEST_CASE("ring sampler matches the closed-form CDF") {
        Rng rng(1);
        const RingConfig cfg{0.4, 0.9};
        const RingSample s = sample_ring(cfg, 100000, rng);
        std::vector<double> abs_sq(s.nu.size());
        for (std::size_t i = 0; i < s.nu.size(); ++i) {
            abs_sq[i] = std::exp(-2.0 * s.nu[i]);
            CHECK(abs_sq[i] >= 0.16 - 1e-12);
            CHECK(abs_sq[i] <= 0.81 + 1e-12);
        }
        CHECK(ring_ks_statistic(abs_sq, 0.4, 0.9) < 0.01);
        const auto [stat, p] = chi_square_uniform(s.theta, 0.0, 2.0 * std::numbers::pi, 32);
        CHECK(stat >= 0.0);
        CHECK(p > 0.001);
    }

    TEST_CASE("phase slice and degenerate ring") {
        Rng rng(2);
        const RingConfig cfg{0.999, 0.9999, 0.0, std::numbers::pi / 10};
        const RingSample s = sample_ring(cfg, 5000, rng);
        for (std::size_t i = 0; i < s.nu.size(); ++i) {
            const double r = std::exp(-s.nu[i]);
            CHECK(r >= 0.999 - 1e-12);
            CHECK(r <= 0.9999 + 1e-12);
            CHECK(s.theta[i] > 0.0);
            CHECK(s.theta[i] <= std::numbers::pi / 10);
        }
        CHECK_THROWS_AS(sample_ring(RingConfig{0.0, 0.0}, 4, rng), InvalidInput);
        CHECK_THROWS_AS(sample_ring(RingConfig{0.5, 0.4}, 4, rng), InvalidInput);
        CHECK_THROWS_AS(sample_ring(RingConfig{0.1, 1.5}, 4, rng), InvalidInput);
    }

    TEST_CASE("gamma normalization") {
        const double inf = std::numeric_limits<double>::infinity();
        const auto g0 = gamma_init({inf}, {1.0});
        CHECK(g0[0] == 0.0);
        const double nu = -std::log(0.99);
        const auto g = gamma_init({nu}, {1.0});
        CHECK(std::exp(g[0]) == doctest::Approx(std::sqrt(0.0199)).epsilon(1e-12));
        CHECK(std::exp(g[0]) == doctest::Approx(0.141067).epsilon(1e-6));
        CHECK_THROWS_AS(gamma_init({0.0}, {1.0}), InvalidInput);
        CHECK_THROWS_AS(gamma_init({-0.1}, {1.0}), InvalidInput);
    }

    TEST_CASE("gamma keeps the steady-state variance at the input variance") {
        Rng rng(3);
        const RingSample s = sample_ring(RingConfig{0.5, 0.99}, 16, rng);
        const auto g = gamma_init(s.nu, s.theta);
        Rng noise(4);
        for (std::size_t i = 0; i < 16; ++i) {
            const std::complex<double> lam = std::exp(std::complex<double>(-s.nu[i], s.theta[i]));
            std::complex<double> x = 0.0;
            double acc = 0.0;
            const std::size_t L = 10000, burn = 2000;
            for (std::size_t k = 0; k < L + burn; ++k) {
                x = lam * x + std::exp(g[i]) * noise.normal();
                if (k >= burn) acc += std::norm(x);
            }
            // Real unit-variance input: E|x|^2 = gamma^2 / (1 - |lambda|^2) = 1.
            CHECK(acc / L == doctest::Approx(1.0).epsilon(0.25));
        }
    }

    TEST_CASE("complex Glorot moments") {
        Rng rng(5);
        double sum_re = 0.0, var = 0.0;
        std::size_t count = 0;
        for (int rep = 0; rep < 245; ++rep) {
            const ComplexMatrix m = glorot_complex(64, 64, rng);
            for (Eigen::Index i = 0; i < m.re.size(); ++i) {
                sum_re += m.re.data()[i];
                var += m.re.data()[i] * m.re.data()[i] + m.im.data()[i] * m.im.data()[i];
                ++count;
            }
        }
        CHECK(var / count == doctest::Approx(2.0 / 128.0).epsilon(0.05));
        const double sd = std::sqrt(1.0 / 128.0);
        CHECK(std::abs(sum_re / count) < 3.0 * sd / std::sqrt(static_cast<double>(count)));

        double v1 = 0.0;
        for (int rep = 0; rep < 20000; ++rep) {
            const ComplexMatrix m = glorot_complex(1, 1, rng);
            v1 += m.re(0, 0) * m.re(0, 0) + m.im(0, 0) * m.im(0, 0);
        }
        CHECK(v1 / 20000 == doctest::Approx(1.0).epsilon(0.05));
    }

    TEST_CASE("dense Glorot entries have variance 1/n") {
        Rng rng(6);
        const DenseMatrix a = glorot_dense(256, rng);
        CHECK(a.squaredNorm() / a.size() == doctest::Approx(1.0 / 256).epsilon(0.05));
        const DenseMatrix one = glorot_dense(1, rng);
        CHECK(one.size() == 1);
    }

    TEST_CASE("lru_init shapes, stability and determinism") {
        Rng rng(7);
        const LruParams p = lru_init(RingConfig{0.0, 1.0}, LruDims{3, 128, 3}, rng);
        p.validate();
        CHECK(p.state_dim() == 128);
        CHECK(p.input_dim() == 3);
        CHECK(p.output_dim() == 3);
        CHECK(p.d.size() == 3);
        CHECK(p.max_abs_lambda() < 1.0);
        std::vector<double> abs_sq;
        const ComplexVec lam = p.lambda();
        for (std::size_t i = 0; i < lam.size(); ++i) abs_sq.push_back(lam.abs(i) * lam.abs(i));
        CHECK(ring_ks_statistic(abs_sq, 0.0, 1.0) < 0.15);
        for (std::size_t j = 0; j < 128; ++j) {
            const double nu = std::exp(p.nu_log[static_cast<Eigen::Index>(j)]);
            CHECK(std::exp(2.0 * p.gamma_log[static_cast<Eigen::Index>(j)]) == doctest::Approx(1.0 - std::exp(-2.0 * nu)));
            CHECK(p.theta(j) > 0.0);
            CHECK(p.theta(j) <= 2.0 * std::numbers::pi);
        }

        Rng again(7);
        const LruParams q = lru_init(RingConfig{0.0, 1.0}, LruDims{3, 128, 3}, again);
        CHECK(p.nu_log == q.nu_log);
        CHECK(p.theta_log == q.theta_log);
        CHECK(p.b_re == q.b_re);
        CHECK(p.c_im == q.c_im);
        CHECK(p.d == q.d);

        Rng other(8);
        const LruParams r = lru_init(RingConfig{0.0, 1.0}, LruDims{2, 4, 5}, other);
        CHECK(r.d.size() == 0);
    }

    TEST_CASE("B variance is doubled relative to C") {
        Rng rng(9);
        double vb = 0.0, vc = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            Rng child = rng.split(rep);
            const LruParams p = lru_init(RingConfig{0.5, 0.9}, LruDims{32, 32, 32}, child);
            vb += p.b_re.squaredNorm() + p.b_im.squaredNorm();
            vc += p.c_re.squaredNorm() + p.c_im.squaredNorm();
        }
        CHECK(vb / vc == doctest::Approx(2.0).epsilon(0.05));
    }

    TEST_CASE("stability holds for any real nu_log") {
        LruParams p;
        p.nu_log = Vector::LinSpaced(41, -30.0, 10.0);
        p.theta_log = Vector::Zero(41);
        p.gamma_log = Vector::Zero(41);
        p.b_re = p.b_im = RowMatrix::Zero(41, 1);
        p.c_re = p.c_im = RowMatrix::Zero(1, 41);
        const ComplexVec lam = p.lambda();
        for (std::size_t i = 0; i < lam.size(); ++i) CHECK(lam.abs(i) <= 1.0);
        CHECK(p.max_abs_lambda() <= 1.0);
    }

    TEST_CASE("param views follow the documented order and groups") {
        Rng rng(10);
        LruParams p = lru_init(RingConfig{0.5, 0.9}, LruDims{2, 4, 2}, rng);
        const auto views = param_views(p, "lru.");
        REQUIRE(views.size() == 8);
        const char* names[] = {"nu_log", "theta_log", "gamma_log", "b_re", "b_im", "c_re", "c_im", "d"};
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(views[i].name == std::string("lru.") + names[i]);
            CHECK(views[i].group == (i < 5 ? ParamGroup::recurrent : ParamGroup::general));
        }
        CHECK(total_size(views) == 4 * 3 + 8 * 2 + 8 * 2 + 2);
    }
}
