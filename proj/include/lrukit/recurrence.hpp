#pragma once

#include <span>
#include <vector>

#include "lrukit/init.hpp"
#include "lrukit/types.hpp"

namespace lrukit {

/// Affine map x -> a * x + b (elementwise, complex).
struct ScanElement {
    ComplexVec a;
    ComplexVec b;
};

ScanElement scan_identity(std::size_t n);

/// Composition "apply earlier, then later": (later.a * earlier.a, later.a * earlier.b + later.b).
ScanElement scan_combine(const ScanElement& earlier, const ScanElement& later);

/// In-place inclusive scan by up-sweep/down-sweep over a binary tree. Any length.
void tree_scan(std::vector<ScanElement>& elements);

enum class ScanMode { sequential, parallel };

/// Hidden states laid out as [batch][time][state].
struct LruTrajectory {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::size_t state = 0;
    std::vector<double> re;
    std::vector<double> im;

    std::size_t offset(std::size_t b, std::size_t k) const { return (b * length + k) * state; }
};

struct LruOutput {
    SequenceBatch y;
    LruTrajectory x;
};

struct ScanOptions {
    ScanMode mode = ScanMode::parallel;
    // 0 means the global num_threads().
    std::size_t threads = 0;
    // Chunks per sequence for the parallel scan; 0 picks one per worker.
    std::size_t chunks = 0;
};

/// Solves x_k = lambda * x_{k-1} + z_k (x_0 = 0) in place, where (re, im) hold z on entry
/// and x on exit, both laid out [batch][time][state].
///
/// Parallel mode splits each sequence into contiguous chunks: every chunk is scanned
/// from a zero state, the chunk carries are chained sequentially, and each chunk is then
/// corrected by lambda^(j+1) * carry. Agrees with sequential mode to rounding.
void diagonal_scan(const ComplexVec& lambda, std::size_t batch, std::size_t length, std::span<double> re,
                   std::span<double> im, const ScanOptions& opts = {});

/// Runs the layer over a batch with x_0 = 0. Throws on NaN input or shape mismatch.
LruOutput lru_forward(const LruParams& params, const SequenceBatch& u, const ScanOptions& opts = {});
inline LruOutput lru_forward(const LruParams& params, const SequenceBatch& u, ScanMode mode) {
    return lru_forward(params, u, ScanOptions{mode});
}

/// Streaming inference: only x_L per sequence is kept.
std::vector<ComplexVec> lru_final_state(const LruParams& params, const SequenceBatch& u);

enum class Activation { linear, tanh, relu };

/// x_k = act(A x_{k-1} + B u_k), y_k = C x_k + D u_k with A: N x N, B: N x H_in,
/// C: H_out x N, D: H_out x H_in.
struct DenseRnn {
    DenseMatrix a;
    RowMatrix b;
    RowMatrix c;
    RowMatrix d;

    void validate() const;
};

/// States and pre-activations stacked time-major: row k*batch + b holds step k of sequence b.
struct DenseRnnTrace {
    RowMatrix pre;
    RowMatrix x;
};

SequenceBatch dense_rnn_forward(const DenseRnn& rnn, Activation act, const SequenceBatch& u,
                                DenseRnnTrace* trace = nullptr);

struct ZohSystem {
    ComplexVec a_tilde;  // continuous-time diagonal, Re < 0
    ComplexMatrix b_tilde;
    double delta = 1e-3;
};

enum class ZohMode { exact, first_order };

struct ZohResult {
    ComplexVec lambda;
    ComplexMatrix b;
};

/// lambda = exp(delta * a), B = diag((lambda - 1) / a) B~ (exact) or delta * B~ (first order).
ZohResult zoh_discretize(const ZohSystem& sys, ZohMode mode = ZohMode::exact);

/// S4D-Lin continuous-time diagonal: a_n = -1/2 + i pi n.
ComplexVec s4d_lin(std::size_t n);

/// Block-diagonal 2N x 2N real matrix with blocks [[Re, -Im], [Im, Re]].
DenseMatrix to_real_block_form(const ComplexVec& lambda);

/// Re(lambda_channel^k) for k = 0 .. L-1: the channel's state after a unit impulse
/// injected directly into it at the first step.
std::vector<double> impulse_response(const LruParams& params, std::size_t length, std::size_t channel);

std::size_t count_sign_changes(std::span<const double> x);

}  // namespace lrukit
