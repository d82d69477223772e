#include "lrukit/numerics.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace lrukit {

namespace {

using cplx = std::complex<double>;

constexpr std::size_t kDirectDftLimit = 4096;

std::vector<cplx> direct_dft(const std::vector<cplx>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> twiddle(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        twiddle[j] = {std::cos(angle), std::sin(angle)};
    }
    std::vector<cplx> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        cplx acc = 0.0;
        std::size_t idx = 0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * twiddle[idx];
            idx += m;
            if (idx >= n) idx -= n;
        }
        out[m] = acc;
    }
    return out;
}

std::vector<cplx> radix2_fft(std::vector<cplx> x) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t j = 0; j < half; ++j) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(len);
            const cplx w{std::cos(angle), std::sin(angle)};
            for (std::size_t i = 0; i < n; i += len) {
                const cplx u = x[i + j];
                const cplx v = x[i + j + half] * w;
                x[i + j] = u + v;
                x[i + j + half] = u - v;
            }
        }
    }
    return x;
}

std::vector<cplx> transform(std::vector<cplx> x) {
    require(!x.empty(), "dft: empty signal");
    for (const auto& v : x) {
        require(std::isfinite(v.real()) && std::isfinite(v.imag()), "dft: non-finite sample");
    }
    if (x.size() > kDirectDftLimit && is_power_of_two(x.size())) return radix2_fft(std::move(x));
    return direct_dft(x);
}

ComplexVec to_complex_vec(const std::vector<cplx>& x) {
    ComplexVec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.re[i] = x[i].real();
        out.im[i] = x[i].imag();
    }
    return out;
}

double frobenius(const DenseMatrix& m) { return m.stableNorm(); }

// Returns M with ||M||_F == 1 (or M == 0) and log_scale such that A^k = exp(log_scale) * M.
struct ScaledPower {
    DenseMatrix m;
    double log_scale = 0.0;
    bool zero = false;
};

void renormalize(ScaledPower& p) {
    const double norm = frobenius(p.m);
    if (!std::isfinite(norm)) {
        throw NumericalError(
            "gelfand_spectral_radius: matrix power overflowed; rescale A by its norm, "
            "exponentiate, and rescale back");
    }
    if (norm == 0.0) {
        p.zero = true;
        return;
    }
    p.m /= norm;
    p.log_scale += std::log(norm);
}

ScaledPower multiply(const ScaledPower& a, const ScaledPower& b) {
    ScaledPower out;
    if (a.zero || b.zero) {
        out.m = DenseMatrix::Zero(a.m.rows(), a.m.cols());
        out.zero = true;
        return out;
    }
    out.m = a.m * b.m;
    out.log_scale = a.log_scale + b.log_scale;
    renormalize(out);
    return out;
}

ScaledPower scaled_power(const DenseMatrix& a, int k) {
    ScaledPower base{a, 0.0, false};
    renormalize(base);
    ScaledPower result{DenseMatrix::Identity(a.rows(), a.cols()), 0.0, false};
    renormalize(result);
    bool have_result = false;
    for (int e = k; e > 0; e >>= 1) {
        if (e & 1) {
            result = have_result ? multiply(result, base) : base;
            have_result = true;
        }
        if (e > 1) base = multiply(base, base);
    }
    return result;
}

double radius_from(const ScaledPower& p, int k) {
    if (p.zero) return 0.0;
    return std::exp((std::log(frobenius(p.m)) + p.log_scale) / static_cast<double>(k));
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

ComplexVec dft_complex(std::span<const double> signal) {
    std::vector<cplx> x(signal.begin(), signal.end());
    return to_complex_vec(transform(std::move(x)));
}

ComplexVec dft_complex(const ComplexVec& signal) {
    std::vector<cplx> x(signal.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = {signal.re[i], signal.im[i]};
    return to_complex_vec(transform(std::move(x)));
}

Spectrum dft(std::span<const double> signal) {
    const ComplexVec x = dft_complex(signal);
    Spectrum s;
    s.freqs.resize(x.size());
    s.power.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        s.freqs[j] = static_cast<double>(j) / static_cast<double>(x.size());
        s.power[j] = x.re[j] * x.re[j] + x.im[j] * x.im[j];
    }
    return s;
}

GelfandEstimate gelfand_spectral_radius(const DenseMatrix& a, int k) {
    require(a.rows() >= 1 && a.rows() == a.cols(), "gelfand_spectral_radius: matrix must be square and non-empty");
    require(k >= 8, "gelfand_spectral_radius: power count must be at least 8");
    require(a.allFinite(), "gelfand_spectral_radius: non-finite entries");
    GelfandEstimate est;
    est.k = k;
    est.radius = radius_from(scaled_power(a, k), k);
    est.radius_half = radius_from(scaled_power(a, k / 2), k / 2);
    return est;
}

double trace_moment(const DenseMatrix& a, int k) {
    require(a.rows() >= 1 && a.rows() == a.cols(), "trace_moment: matrix must be square and non-empty");
    require(k >= 1 && k <= 8, "trace_moment: power must be in [1, 8]");
    require(a.allFinite(), "trace_moment: non-finite entries");
    DenseMatrix p = a;
    for (int i = 1; i < k; ++i) p = p * a;
    return p.trace() / static_cast<double>(a.rows());
}

}  // namespace lrukit
