#pragma once

#include <span>
#include <vector>

#include "lrukit/types.hpp"

namespace lrukit {

/// Power spectrum of a real signal. freqs[j] = j / L in cycles per sample.
struct Spectrum {
    std::vector<double> freqs;
    std::vector<double> power;
};

/// Complex DFT, X[m] = sum_n x[n] exp(-2 pi i m n / L). Direct O(L^2) up to
/// 4096 samples, iterative radix-2 for longer power-of-two signals.
ComplexVec dft_complex(std::span<const double> signal);
ComplexVec dft_complex(const ComplexVec& signal);

/// |X[m]|^2 per bin. Parseval: sum(power) / L == sum(signal^2).
Spectrum dft(std::span<const double> signal);

/// ||A^k||_F^(1/k) at k and at k/2.
struct GelfandEstimate {
    double radius = 0.0;
    double radius_half = 0.0;
    int k = 0;
};

/// Gelfand-style spectral radius estimate. Powers are formed by repeated squaring
/// with Frobenius renormalization after every product, so only log-scales grow.
GelfandEstimate gelfand_spectral_radius(const DenseMatrix& a, int k);

/// (1/N) trace(A^k), 1 <= k <= 8.
double trace_moment(const DenseMatrix& a, int k);

bool is_power_of_two(std::size_t n);

}  // namespace lrukit
