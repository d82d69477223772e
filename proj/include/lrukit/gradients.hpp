#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lrukit/model.hpp"
#include "lrukit/recurrence.hpp"

namespace lrukit {

// Gradients of LRU parameters share LruParams' layout field for field.
using LruGrads = LruParams;

/// Vector-Jacobian product of lru_forward. `x` must be the trajectory produced by the
/// matching forward call. When `grad_u` is non-null it receives dL/du.
///
/// Complex cotangents follow the real-pair convention g = dL/dRe + i dL/dIm, so the
/// adjoint recurrence runs backward as delta_{k-1} = g_{k-1} + conj(lambda) * delta_k, and
/// the output projection Re[C x] contributes C^H dL/dy (its imaginary co-tangent is zero).
LruGrads lru_backward(const LruParams& params, const SequenceBatch& u, const LruTrajectory& x,
                      const SequenceBatch& grad_y, SequenceBatch* grad_u = nullptr);

struct DenseRnnGrads {
    DenseMatrix a;
    RowMatrix b;
    RowMatrix c;
    RowMatrix d;
};

/// Backpropagation through time for dense_rnn_forward.
DenseRnnGrads dense_rnn_backward(const DenseRnn& rnn, Activation act, const SequenceBatch& u,
                                 const DenseRnnTrace& trace, const SequenceBatch& grad_y);

/// Accumulates block parameter gradients into `grads` and returns dL/du.
SequenceBatch block_backward(const BlockParams& block, const ModelConfig& cfg, const BlockCache& cache,
                             const SequenceBatch& grad_out, BlockParams& grads);

/// Full-model VJP; the cache must come from model_forward with the same params.
ModelParams model_backward(const ModelConfig& cfg, const ModelParams& params, const ModelCache& cache,
                           const SequenceBatch& grad_y);

struct LossValue {
    double value = 0.0;
    SequenceBatch grad;
};

/// mean((pred - target)^2) over all entries.
LossValue mse_loss(const SequenceBatch& pred, const SequenceBatch& target);

/// Mean softmax cross-entropy; pred is (batch, 1, classes), labels index classes.
LossValue cross_entropy_loss(const SequenceBatch& pred, std::span<const std::size_t> labels);

enum class PowersParameterization { standard, exponential };

/// 1/2 |lambda^k - target^k|^2 with lambda = p0 + i p1 (standard) or exp(-p0 + i p1)
/// (exponential). Returns the loss and writes dL/dp into grad.
double powers_loss(PowersParameterization param, std::span<const double, 2> p, std::complex<double> target_power,
                   int k, std::span<double, 2> grad);

std::complex<double> powers_lambda(PowersParameterization param, std::span<const double, 2> p);

struct FdEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct FdReport {
    double h = 0.0;
    std::vector<FdEntry> entries;

    double max_rel_error() const;
    bool passed(double tol) const { return max_rel_error() < tol; }
};

/// Central differences (f(p + h) - f(p - h)) / 2h per scalar, compared to `analytic`
/// (same order and sizes as `params`). Relative error uses the denominator
/// max(|analytic|, |numeric|, 1e-8). The closure is evaluated twice at the unperturbed
/// point; differing values are reported as a non-deterministic closure.
FdReport finite_difference_check(const std::function<double()>& loss, const std::vector<ParamView>& params,
                                 const std::vector<std::span<const double>>& analytic, double h);

}  // namespace lrukit
