#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "lrukit/params.hpp"
#include "lrukit/rng.hpp"
#include "lrukit/types.hpp"

namespace lrukit {

/// Annulus sector {r_min <= |z| <= r_max, phase_min <= arg z <= phase_max}.
struct RingConfig {
    double r_min = 0.0;
    double r_max = 1.0;
    double phase_min = 0.0;
    double phase_max = 2.0 * std::numbers::pi;

    void validate() const;
};

/// Raw ring draw: lambda = exp(-nu + i theta).
struct RingSample {
    std::vector<double> nu;
    std::vector<double> theta;
};

/// Inverse-CDF map from two uniforms to (nu, theta). u1 = 0 lands on r_min, u1 = 1 on r_max.
std::pair<double, double> ring_point(const RingConfig& cfg, double u1, double u2);

/// Samples n eigenvalues uniformly on the configured ring sector. Both uniforms are
/// drawn from (0, 1], so theta > phase_min and |lambda| > r_min.
RingSample sample_ring(const RingConfig& cfg, std::size_t n, Rng& rng);

/// gamma_log_i = log(sqrt(1 - |lambda_i|^2)) with |lambda_i| = exp(-nu_i).
std::vector<double> gamma_init(const std::vector<double>& nu, const std::vector<double>& theta);

/// Complex Glorot: real and imaginary parts i.i.d. N(0, variance_scale / (rows + cols)),
/// i.e. complex variance 2 * variance_scale / (rows + cols) per entry.
ComplexMatrix glorot_complex(std::size_t rows, std::size_t cols, Rng& rng, double variance_scale = 1.0);

/// Dense N x N matrix with i.i.d. N(0, 1/N) entries.
DenseMatrix glorot_dense(std::size_t n, Rng& rng);

/// Real Glorot-normal matrix, variance 2 / (rows + cols).
RowMatrix glorot_real(std::size_t rows, std::size_t cols, Rng& rng);

/// Learnable tensors of one LRU layer.
///
///   lambda_j = exp(-exp(nu_log_j) + i * theta_j),  theta_j = exp(theta_log_j) when phase_is_log
///   x_k = diag(lambda) x_{k-1} + exp(gamma_log) * (B u_k)
///   y_k = Re[C x_k] + D * u_k
///
/// B is N x H_in and C is H_out x N. D is elementwise and has H_out entries when
/// H_in == H_out, otherwise it is empty and the skip term is dropped.
struct LruParams {
    Vector nu_log;
    Vector theta_log;
    Vector gamma_log;
    RowMatrix b_re, b_im;
    RowMatrix c_re, c_im;
    Vector d;
    // When false, theta_log holds the raw phase theta.
    bool phase_is_log = true;

    std::size_t state_dim() const { return static_cast<std::size_t>(nu_log.size()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(b_re.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(c_re.rows()); }

    double theta(std::size_t j) const;
    ComplexVec lambda() const;
    std::vector<double> gamma() const;
    double max_abs_lambda() const;

    void validate() const;
};

struct LruDims {
    std::size_t input = 1;
    std::size_t state = 1;
    std::size_t output = 1;
};

struct LruInitOptions {
    // Multiplier on B's per-entry variance relative to complex Glorot.
    double b_scale = 2.0;
    bool phase_is_log = true;
};

LruParams lru_init(const RingConfig& cfg, const LruDims& dims, Rng& rng, const LruInitOptions& opts = {});

/// Same shapes, all zeros.
LruParams zeros_like(const LruParams& p);

/// Views in a fixed order: nu_log, theta_log, gamma_log, b_re, b_im, c_re, c_im, d.
std::vector<ParamView> param_views(LruParams& p, const std::string& prefix = "");

}  // namespace lrukit
