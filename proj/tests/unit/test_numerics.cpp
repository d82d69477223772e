#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "lrukit/numerics.hpp"
#include "lrukit/recurrence.hpp"
#include "lrukit/rng.hpp"

using namespace lrukit;

namespace {

// Textbook O(L^2) transform with std::complex and std::polar twiddles.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < n; ++j) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>((m * j) % n) / static_cast<double>(n);
            out[m] += x[j] * std::polar(1.0, angle);
        }
    }
    return out;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

}  // namespace

TEST_SUITE("numerics") {
    TEST_CASE("dft of a constant signal is DC only") {
        const std::vector<double> x{1, 1, 1, 1};
        const Spectrum s = dft(x);
        CHECK(s.power[0] == doctest::Approx(16.0));
        for (std::size_t j = 1; j < 4; ++j) CHECK(s.power[j] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(s.freqs[1] == doctest::Approx(0.25));
    }

    TEST_CASE("single tone lands in bins 8 and 248") {
        const std::size_t L = 256;
        std::vector<double> x(L);
        for (std::size_t k = 0; k < L; ++k) x[k] = std::sin(2.0 * std::numbers::pi * 8.0 * static_cast<double>(k) / L);
        const Spectrum s = dft(x);
        double total = 0.0;
        for (double p : s.power) total += p;
        for (std::size_t j = 0; j < L; ++j) {
            if (j == 8 || j == 248) {
                CHECK(s.power[j] == doctest::Approx(L * L / 4.0));
            } else {
                CHECK(s.power[j] / total < 1e-20);
            }
        }
    }

    TEST_CASE("rectified tone has even harmonics") {
        const std::size_t L = 256;
        std::vector<double> x(L);
        for (std::size_t k = 0; k < L; ++k) {
            x[k] = std::max(0.0, std::sin(2.0 * std::numbers::pi * 8.0 * static_cast<double>(k) / L));
        }
        const Spectrum s = dft(x);
        CHECK(s.power[0] > 1.0);
        CHECK(s.power[8] > 1.0);
        CHECK(s.power[16] > 1.0);
        CHECK(s.power[32] > 1e-2);
        CHECK(s.power[24] < 1e-12 * s.power[8]);
    }

    TEST_CASE("direct and radix-2 paths agree with a naive oracle") {
        for (std::size_t n : {1u, 3u, 17u, 64u, 8192u}) {
            const auto x = random_signal(n, n);
            const ComplexVec got = dft_complex(x);
            const auto want = naive_dft(x);
            double scale = 0.0, err = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                scale = std::max(scale, std::abs(want[m]));
                err = std::max(err, std::abs(want[m] - std::complex<double>(got.re[m], got.im[m])));
            }
            CHECK(err / scale < 1e-9);
        }
    }

    TEST_CASE("Parseval and conjugate symmetry on random signals") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            for (std::size_t n : {5u, 128u, 1000u, 8192u}) {
                const auto x = random_signal(n, 100 + seed);
                const Spectrum s = dft(x);
                double energy = 0.0, power = 0.0;
                for (double v : x) energy += v * v;
                for (double p : s.power) {
                    CHECK(p >= 0.0);
                    power += p;
                }
                CHECK(std::abs(power / static_cast<double>(n) - energy) / energy < 1e-9);
                for (std::size_t j = 1; j < n; ++j) {
                    CHECK(std::abs(s.power[j] - s.power[n - j]) <= 1e-12 * std::max(1.0, s.power[j]) * n);
                }
            }
        }
    }

    TEST_CASE("dft rejects empty and non-finite signals") {
        CHECK_THROWS_AS(dft(std::vector<double>{}), InvalidInput);
        CHECK_THROWS_AS(dft(std::vector<double>{1.0, std::nan("")}), InvalidInput);
    }

    TEST_CASE("Gelfand estimate of a scaled identity") {
        const DenseMatrix a = 0.5 * DenseMatrix::Identity(4, 4);
        const GelfandEstimate g = gelfand_spectral_radius(a, 32);
        // ||0.5^32 I_4||_F = 0.5^32 * 2, so the root is 0.5 * 2^(1/32).
        CHECK(g.radius == doctest::Approx(0.5 * std::pow(2.0, 1.0 / 32.0)).epsilon(1e-12));
        CHECK(g.radius == doctest::Approx(0.5109).epsilon(1e-4));
        CHECK(g.radius_half == doctest::Approx(0.5 * std::pow(2.0, 1.0 / 16.0)).epsilon(1e-12));
        CHECK(gelfand_spectral_radius(DenseMatrix::Zero(3, 3), 16).radius == 0.0);
    }

    TEST_CASE("Gelfand estimate handles huge and tiny scales without overflow") {
        const DenseMatrix big = 1e200 * DenseMatrix::Identity(2, 2);
        CHECK(gelfand_spectral_radius(big, 64).radius == doctest::Approx(1e200 * std::pow(2.0, 1.0 / 128.0)));
        const DenseMatrix tiny = 1e-200 * DenseMatrix::Identity(2, 2);
        CHECK(gelfand_spectral_radius(tiny, 64).radius == doctest::Approx(1e-200 * std::pow(2.0, 1.0 / 128.0)));
        CHECK_THROWS_AS(gelfand_spectral_radius(big, 4), InvalidInput);
    }

    TEST_CASE("Gelfand converges to max |d| for diagonal matrices") {
        Rng rng(7);
        for (int trial = 0; trial < 10; ++trial) {
            const auto n = static_cast<Eigen::Index>(1 + trial % 16);
            DenseMatrix a = DenseMatrix::Zero(n, n);
            double mx = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                a(i, i) = rng.uniform(-2.0, 2.0);
                mx = std::max(mx, std::abs(a(i, i)));
            }
            CHECK(std::abs(gelfand_spectral_radius(a, 64).radius / mx - 1.0) < 0.05);
        }
    }

    TEST_CASE("trace moments") {
        CHECK(trace_moment(DenseMatrix::Identity(5, 5), 3) == doctest::Approx(1.0));
        DenseMatrix d = DenseMatrix::Zero(2, 2);
        d(0, 0) = 0.5;
        d(1, 1) = -0.5;
        CHECK(trace_moment(d, 1) == doctest::Approx(0.0));
        CHECK_THROWS_AS(trace_moment(d, 0), InvalidInput);
        CHECK_THROWS_AS(trace_moment(d, 9), InvalidInput);
    }

    TEST_CASE("trace moments of a real block form match the eigenvalue sum") {
        Rng rng(11);
        ComplexVec lam(6);
        for (std::size_t i = 0; i < 6; ++i) {
            lam.re[i] = rng.uniform(-1.0, 1.0);
            lam.im[i] = rng.uniform(-1.0, 1.0);
        }
        const DenseMatrix a = to_real_block_form(lam);
        for (int k = 1; k <= 8; ++k) {
            // Each complex lambda contributes lambda^k + conj(lambda)^k = 2 Re(lambda^k).
            double want = 0.0;
            for (std::size_t i = 0; i < 6; ++i) want += 2.0 * std::pow(std::complex<double>(lam.re[i], lam.im[i]), k).real();
            want /= 12.0;
            CHECK(trace_moment(a, k) == doctest::Approx(want).epsilon(1e-10));
        }
    }

    TEST_CASE("power of two") {
        CHECK(is_power_of_two(1));
        CHECK(is_power_of_two(65536));
        CHECK_FALSE(is_power_of_two(0));
        CHECK_FALSE(is_power_of_two(12));
    }
}
