#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrukit/gradients.hpp"
#include "lrukit/init.hpp"
#include "lrukit/numerics.hpp"
#include "lrukit/recurrence.hpp"
#include "lrukit/report.hpp"
#include "lrukit/rng.hpp"
#include "lrukit/training.hpp"

namespace lrukit {

// ---------------------------------------------------------------------------
// Forward-pass gain of a ring-initialized diagonal recurrence

/// E||x_inf||^2 / E||Bu||^2 = log((1 - r_min^2) / (1 - r_max^2)) / (r_max^2 - r_min^2),
/// with the equal-radius limit 1 / (1 - r^2).
double gain_formula(double r_min, double r_max);

enum class InputMode { constant, white_noise };

struct GainResult {
    double r_min = 0.0;
    double r_max = 0.0;
    double closed_form = 0.0;
    double monte_carlo = 0.0;  // mean over trials
    double p5 = 0.0;
    double p95 = 0.0;
    std::vector<double> trials;
    std::size_t N = 0;
    std::size_t L = 0;
    std::size_t input_dim = 1;
    InputMode mode = InputMode::white_noise;
    bool transient_warning = false;  // r_max^L not negligible
};

/// Simulates x_k = Lambda x_{k-1} + B u_k (no gamma) with Lambda uniform on the ring and
/// complex-Glorot B (N x input_dim), and reports ||x_L||^2 / mean_k ||B u_k||^2 per trial.
/// input_dim = 0 means input_dim = N, which keeps the components of B u nearly
/// uncorrelated; a scalar input drives every state with the same noise and the per-trial
/// ratio then fluctuates like a one-degree-of-freedom chi-square.
/// r_min = r_max = 0 forces Lambda = 0.
GainResult gain_monte_carlo(double r_min, double r_max, std::size_t N, std::size_t L, InputMode mode,
                            std::size_t trials, Rng& rng, std::size_t input_dim = 0);

/// Linear-interpolated percentile (q in [0, 100]).
double percentile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Convolution-kernel regression task

/// h_k = 0.1 exp(-0.015 k) cos(0.04 k)^2.
double conv_kernel_value(std::size_t k);

struct ConvTaskOptions {
    std::size_t sequences = 32;
    std::size_t length = 100;
    double a_min = 0.5;
    double a_max = 2.0;
};

struct ConvKernelTask {
    SequenceBatch inputs;   // (sequences, length, 1): sin(0.05 a k) cos(0.05 c k)^2
    SequenceBatch targets;  // causal convolution of inputs with h
    std::vector<double> kernel;
    std::vector<std::pair<double, double>> ac;
};

ConvKernelTask conv_kernel_task(std::uint64_t seed, const ConvTaskOptions& opts = {});

/// Direct causal convolution y_k = sum_{j <= k} h_j u_{k-j}.
std::vector<double> causal_convolution(std::span<const double> u, std::span<const double> h);

struct DenseRnnTrainResult {
    std::vector<double> losses;  // loss before each step, plus the final loss
    bool diverged = false;
    double final_loss() const { return losses.empty() ? 0.0 : losses.back(); }
};

/// Single-layer dense RNN (Glorot on every matrix) fit with Adam at a constant learning
/// rate on mean squared error.
DenseRnnTrainResult train_dense_rnn(const ConvKernelTask& task, Activation act, std::size_t hidden, double lr,
                                    std::size_t steps, std::uint64_t init_seed);

DenseRnn dense_rnn_glorot(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng);

// ---------------------------------------------------------------------------
// Learning powers of a complex number

struct PowersTaskConfig {
    int k = 100;
    double nu_star = 0.01;
    double theta_star = 0.45 * std::numbers::pi;
    PowersParameterization parameterization = PowersParameterization::exponential;
    std::size_t iterations = 500;
    double lr = 1e-3;
    // Start at |lambda*| with phase theta* +/- phase_offset; the sign comes from the rng.
    double phase_offset = 0.3;
    double threshold = 1e-4;
};

struct PowersRun {
    std::vector<double> losses;  // loss at iteration 0 .. iterations
    std::optional<std::size_t> iterations_to_threshold;
    std::complex<double> final_lambda;
};

PowersRun powers_task_run(const PowersTaskConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Spectral leakage of position-wise nonlinearities

struct LeakageResult {
    Spectrum before;
    Spectrum after;
    double offband_energy_ratio = 0.0;
};

/// Energy outside bins {0, freq, L - freq} divided by total energy.
double offband_ratio(const Spectrum& s, std::size_t freq);

/// Tone sin(2 pi freq k / L) through a position-wise activation.
LeakageResult leakage_demo(std::size_t freq, std::size_t length, Activation act = Activation::relu);

/// Maximal runs [first, last] of strictly positive samples.
std::vector<std::pair<std::size_t, std::size_t>> activated_intervals(std::span<const double> signal);

/// DFT of ReLU(u) computed as (1/L) (DFT(u) circularly convolved with K), where K is the
/// DFT of the activation indicator: a sum over activated runs P_i = [p_i - L_i, p_i + L_i]
/// of Dirichlet kernels exp(-i w p_i) sin(w (2 L_i + 1) / 2) / sin(w / 2).
ComplexVec relu_spectrum_via_intervals(std::span<const double> signal);

/// Off-band ratio of a single-input single-output LRU driven by a tone; the first
/// `warmup` outputs are discarded so the transient has decayed.
double lru_tone_offband_ratio(const LruParams& params, std::size_t freq, std::size_t length, std::size_t warmup);

// ---------------------------------------------------------------------------
// Eigenvalue spectra

/// Ring config: sampled eigenvalues (exact spectrum) plus a KS check of |lambda|^2.
ExperimentReport spectrum_report_ring(const RingConfig& cfg, std::size_t n, Rng& rng);
/// Dense Glorot matrix: Gelfand radius and trace moments k = 1..3.
ExperimentReport spectrum_report_dense(std::size_t n, int gelfand_k, Rng& rng);

/// KS statistic of samples against the ring CDF F(r^2) = (r^2 - r_min^2) / (r_max^2 - r_min^2).
double ring_ks_statistic(std::vector<double> abs_sq, double r_min, double r_max);

/// Pearson chi-square statistic and p-value for uniformity over `bins` equal bins of [lo, hi].
std::pair<double, double> chi_square_uniform(std::span<const double> samples, double lo, double hi, std::size_t bins);

// ---------------------------------------------------------------------------
// Scan checks and benchmark

/// Max |parallel - sequential| / max |sequential| over the outputs of lru_forward on a
/// random layer (ring [0.5, 0.99]).
double scan_equivalence_error(std::size_t length, std::size_t state, std::size_t batch, std::size_t features,
                              std::uint64_t seed, std::size_t threads = 0);

struct BenchOptions {
    std::vector<std::size_t> lengths{1024, 16384, 65536};
    std::vector<std::size_t> threads{1};
    std::size_t state = 64;
    std::size_t reps = 5;
    std::size_t warmup = 1;
};

/// Median wall time of diagonal_scan per (L, threads, mode). Columns: L,threads,mode,median_ns.
CsvTable bench_scan(const BenchOptions& opts);

/// Median sequential / parallel time ratio for one length and thread count.
double scan_speedup(std::size_t length, std::size_t state, std::size_t threads, std::size_t reps);

}  // namespace lrukit
