#include "lrukit/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "lrukit/parallel.hpp"

namespace lrukit {

namespace {

using cplx = std::complex<double>;

void require_same_size(const ComplexVec& x, const ComplexVec& y, const char* what) {
    require(x.size() == y.size() && x.re.size() == x.im.size() && y.re.size() == y.im.size(), what);
}

cplx complex_pow(cplx base, std::size_t e) {
    cplx result = 1.0;
    while (e > 0) {
        if (e & 1) result *= base;
        base *= base;
        e >>= 1;
    }
    return result;
}

// Local scan of rows [begin, end) of one sequence, starting from a zero state.
void scan_rows(const ComplexVec& lambda, double* re, double* im, std::size_t begin, std::size_t end,
               std::size_t n) {
    for (std::size_t k = begin + 1; k < end; ++k) {
        const double* pr = re + (k - 1) * n;
        const double* pi = im + (k - 1) * n;
        double* xr = re + k * n;
        double* xi = im + k * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double lr = lambda.re[j];
            const double li = lambda.im[j];
            const double nr = lr * pr[j] - li * pi[j] + xr[j];
            const double ni = lr * pi[j] + li * pr[j] + xi[j];
            xr[j] = nr;
            xi[j] = ni;
        }
    }
}

constexpr double kCarryFlush = 1e-250;

std::size_t resolve_threads(const ScanOptions& opts) { return opts.threads == 0 ? num_threads() : opts.threads; }

}  // namespace

ScanElement scan_identity(std::size_t n) { return {ComplexVec(n, 1.0, 0.0), ComplexVec(n)}; }

ScanElement scan_combine(const ScanElement& earlier, const ScanElement& later) {
    require_same_size(earlier.a, earlier.b, "scan_combine: element a/b length mismatch");
    require_same_size(later.a, later.b, "scan_combine: element a/b length mismatch");
    require(earlier.a.size() == later.a.size(), "scan_combine: dimension mismatch");
    const std::size_t n = earlier.a.size();
    ScanElement out{ComplexVec(n), ComplexVec(n)};
    for (std::size_t j = 0; j < n; ++j) {
        const double ar = later.a.re[j];
        const double ai = later.a.im[j];
        out.a.re[j] = ar * earlier.a.re[j] - ai * earlier.a.im[j];
        out.a.im[j] = ar * earlier.a.im[j] + ai * earlier.a.re[j];
        out.b.re[j] = ar * earlier.b.re[j] - ai * earlier.b.im[j] + later.b.re[j];
        out.b.im[j] = ar * earlier.b.im[j] + ai * earlier.b.re[j] + later.b.im[j];
    }
    return out;
}

void tree_scan(std::vector<ScanElement>& elements) {
    if (elements.size() <= 1) return;
    const std::size_t dim = elements.front().a.size();
    std::size_t m = 1;
    while (m < elements.size()) m <<= 1;
    std::vector<ScanElement> tree(elements);
    tree.resize(m, scan_identity(dim));

    for (std::size_t stride = 1; stride < m; stride <<= 1) {
        for (std::size_t i = 2 * stride - 1; i < m; i += 2 * stride) {
            tree[i] = scan_combine(tree[i - stride], tree[i]);
        }
    }
    tree[m - 1] = scan_identity(dim);
    for (std::size_t stride = m / 2; stride >= 1; stride >>= 1) {
        for (std::size_t i = 2 * stride - 1; i < m; i += 2 * stride) {
            ScanElement left = std::move(tree[i - stride]);
            tree[i - stride] = tree[i];
            tree[i] = scan_combine(tree[i], left);
        }
    }
    // tree now holds exclusive prefixes.
    for (std::size_t i = 0; i < elements.size(); ++i) elements[i] = scan_combine(tree[i], elements[i]);
}

void diagonal_scan(const ComplexVec& lambda, std::size_t batch, std::size_t length, std::span<double> re,
                   std::span<double> im, const ScanOptions& opts) {
    const std::size_t n = lambda.size();
    require(re.size() == batch * length * n && im.size() == re.size(), "diagonal_scan: buffer size mismatch");
    if (batch == 0 || length == 0 || n == 0) return;
    const std::size_t seq_stride = length * n;

    if (opts.mode == ScanMode::sequential) {
        for (std::size_t b = 0; b < batch; ++b) {
            scan_rows(lambda, re.data() + b * seq_stride, im.data() + b * seq_stride, 0, length, n);
        }
        return;
    }

    const std::size_t threads = resolve_threads(opts);
    std::size_t chunks = opts.chunks == 0 ? std::max<std::size_t>(threads, 8) : opts.chunks;
    chunks = std::clamp<std::size_t>(chunks, 1, length);
    auto chunk_begin = [&](std::size_t c) { return length * c / chunks; };

    // Pass 1: independent local scans.
    parallel_for(batch * chunks, threads, [&](std::size_t task) {
        const std::size_t b = task / chunks;
        const std::size_t c = task % chunks;
        scan_rows(lambda, re.data() + b * seq_stride, im.data() + b * seq_stride, chunk_begin(c),
                  chunk_begin(c + 1), n);
    });
    if (chunks == 1) return;

    // Pass 2: chain chunk carries. carry[c] is the true state just before chunk c.
    std::vector<cplx> chunk_power((chunks - 1) * n);
    for (std::size_t c = 0; c + 1 < chunks; ++c) {
        const std::size_t len = chunk_begin(c + 1) - chunk_begin(c);
        for (std::size_t j = 0; j < n; ++j) chunk_power[c * n + j] = complex_pow({lambda.re[j], lambda.im[j]}, len);
    }
    std::vector<cplx> carry(batch * chunks * n, cplx{0.0, 0.0});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 1; c < chunks; ++c) {
            const std::size_t last = b * seq_stride + (chunk_begin(c) - 1) * n;
            for (std::size_t j = 0; j < n; ++j) {
                const cplx local{re[last + j], im[last + j]};
                carry[(b * chunks + c) * n + j] = local + chunk_power[(c - 1) * n + j] * carry[(b * chunks + c - 1) * n + j];
            }
        }
    }

    // Pass 3: x_k = s_k + lambda^(k - begin + 1) * carry.
    parallel_for(batch * (chunks - 1), threads, [&](std::size_t task) {
        const std::size_t b = task / (chunks - 1);
        const std::size_t c = task % (chunks - 1) + 1;
        std::vector<double> pr(n), pi(n);
        for (std::size_t j = 0; j < n; ++j) {
            const cplx l{lambda.re[j], lambda.im[j]};
            const cplx p = l * carry[(b * chunks + c) * n + j];
            pr[j] = p.real();
            pi[j] = p.imag();
        }
        for (std::size_t k = chunk_begin(c); k < chunk_begin(c + 1); ++k) {
            double* xr = re.data() + b * seq_stride + k * n;
            double* xi = im.data() + b * seq_stride + k * n;
            for (std::size_t j = 0; j < n; ++j) {
                xr[j] += pr[j];
                xi[j] += pi[j];
                const double lr = lambda.re[j];
                const double li = lambda.im[j];
                const double nr = lr * pr[j] - li * pi[j];
                const double ni = lr * pi[j] + li * pr[j];
                // The carry decays geometrically; flush it before it turns subnormal,
                // where arithmetic is orders of magnitude slower.
                pr[j] = std::abs(nr) < kCarryFlush ? 0.0 : nr;
                pi[j] = std::abs(ni) < kCarryFlush ? 0.0 : ni;
            }
        }
    });
}

LruOutput lru_forward(const LruParams& params, const SequenceBatch& u, const ScanOptions& opts) {
    params.validate();
    require(u.features() == params.input_dim(), "lru_forward: input features do not match B");
    require(u.length() >= 1, "lru_forward: empty sequence");
    if (!u.all_finite()) throw InvalidInput("lru_forward: non-finite input");

    const std::size_t batch = u.batch();
    const std::size_t length = u.length();
    const std::size_t n = params.state_dim();
    const auto ln = static_cast<Eigen::Index>(length);
    const auto nn = static_cast<Eigen::Index>(n);
    const std::vector<double> gamma = params.gamma();
    const Eigen::Map<const Eigen::RowVectorXd> gamma_row(gamma.data(), nn);

    LruOutput out;
    out.x.batch = batch;
    out.x.length = length;
    out.x.state = n;
    out.x.re.assign(batch * length * n, 0.0);
    out.x.im.assign(batch * length * n, 0.0);
    out.y = SequenceBatch(batch, length, params.output_dim());

    const std::size_t threads = opts.mode == ScanMode::parallel ? resolve_threads(opts) : 1;

    parallel_for(batch, threads, [&](std::size_t b) {
        const ConstMatrixMap ub = u.sequence(b);
        MatrixMap zr(out.x.re.data() + out.x.offset(b, 0), ln, nn);
        MatrixMap zi(out.x.im.data() + out.x.offset(b, 0), ln, nn);
        zr.noalias() = ub * params.b_re.transpose();
        zi.noalias() = ub * params.b_im.transpose();
        zr.array().rowwise() *= gamma_row.array();
        zi.array().rowwise() *= gamma_row.array();
    });

    const ComplexVec lambda = params.lambda();
    diagonal_scan(lambda, batch, length, out.x.re, out.x.im, opts);

    parallel_for(batch, threads, [&](std::size_t b) {
        const ConstMatrixMap ub = u.sequence(b);
        const ConstMatrixMap xr(out.x.re.data() + out.x.offset(b, 0), ln, nn);
        const ConstMatrixMap xi(out.x.im.data() + out.x.offset(b, 0), ln, nn);
        MatrixMap yb = out.y.sequence(b);
        yb.noalias() = xr * params.c_re.transpose();
        yb.noalias() -= xi * params.c_im.transpose();
        if (params.d.size() > 0) yb.noalias() += ub * params.d.asDiagonal();
    });
    return out;
}

std::vector<ComplexVec> lru_final_state(const LruParams& params, const SequenceBatch& u) {
    params.validate();
    require(u.features() == params.input_dim(), "lru_final_state: input features do not match B");
    if (!u.all_finite()) throw InvalidInput("lru_final_state: non-finite input");
    const std::size_t n = params.state_dim();
    const ComplexVec lambda = params.lambda();
    const std::vector<double> gamma = params.gamma();
    std::vector<ComplexVec> out(u.batch(), ComplexVec(n));
    Vector zr(static_cast<Eigen::Index>(n)), zi(static_cast<Eigen::Index>(n));
    for (std::size_t b = 0; b < u.batch(); ++b) {
        const ConstMatrixMap ub = u.sequence(b);
        ComplexVec& x = out[b];
        for (std::size_t k = 0; k < u.length(); ++k) {
            zr.noalias() = params.b_re * ub.row(static_cast<Eigen::Index>(k)).transpose();
            zi.noalias() = params.b_im * ub.row(static_cast<Eigen::Index>(k)).transpose();
            for (std::size_t j = 0; j < n; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                const double nr = lambda.re[j] * x.re[j] - lambda.im[j] * x.im[j] + gamma[j] * zr[jj];
                const double ni = lambda.re[j] * x.im[j] + lambda.im[j] * x.re[j] + gamma[j] * zi[jj];
                x.re[j] = nr;
                x.im[j] = ni;
            }
        }
    }
    return out;
}

void DenseRnn::validate() const {
    require(a.rows() >= 1 && a.rows() == a.cols(), "DenseRnn: A must be square and non-empty");
    require(b.rows() == a.rows() && b.cols() >= 1, "DenseRnn: B must be N x H_in");
    require(c.cols() == a.rows() && c.rows() >= 1, "DenseRnn: C must be H_out x N");
    require(d.rows() == c.rows() && d.cols() == b.cols(), "DenseRnn: D must be H_out x H_in");
}

SequenceBatch dense_rnn_forward(const DenseRnn& rnn, Activation act, const SequenceBatch& u, DenseRnnTrace* trace) {
    rnn.validate();
    require(u.features() == static_cast<std::size_t>(rnn.b.cols()), "dense_rnn_forward: input features do not match B");
    require(u.length() >= 1, "dense_rnn_forward: empty sequence");
    if (!u.all_finite()) throw InvalidInput("dense_rnn_forward: non-finite input");

    const auto batch = static_cast<Eigen::Index>(u.batch());
    const auto n = rnn.a.rows();
    const auto h_in = rnn.b.cols();
    SequenceBatch y(u.batch(), u.length(), static_cast<std::size_t>(rnn.c.rows()));
    RowMatrix x = RowMatrix::Zero(batch, n);
    RowMatrix uk(batch, h_in);
    RowMatrix pre(batch, n);
    if (trace) {
        trace->pre.resize(batch * static_cast<Eigen::Index>(u.length()), n);
        trace->x.resize(batch * static_cast<Eigen::Index>(u.length()), n);
    }
    for (std::size_t k = 0; k < u.length(); ++k) {
        for (Eigen::Index b = 0; b < batch; ++b) uk.row(b) = u.sequence(static_cast<std::size_t>(b)).row(static_cast<Eigen::Index>(k));
        pre.noalias() = x * rnn.a.transpose();
        pre.noalias() += uk * rnn.b.transpose();
        switch (act) {
            case Activation::linear: x = pre; break;
            case Activation::tanh: x = pre.array().tanh(); break;
            case Activation::relu: x = pre.cwiseMax(0.0); break;
        }
        const RowMatrix yk = x * rnn.c.transpose() + uk * rnn.d.transpose();
        for (Eigen::Index b = 0; b < batch; ++b) y.sequence(static_cast<std::size_t>(b)).row(static_cast<Eigen::Index>(k)) = yk.row(b);
        if (trace) {
            const auto first = static_cast<Eigen::Index>(k) * batch;
            trace->pre.middleRows(first, batch) = pre;
            trace->x.middleRows(first, batch) = x;
        }
    }
    return y;
}

ZohResult zoh_discretize(const ZohSystem& sys, ZohMode mode) {
    const std::size_t n = sys.a_tilde.size();
    require(sys.a_tilde.im.size() == n, "zoh_discretize: a_tilde real/imag length mismatch");
    require(sys.b_tilde.rows() == static_cast<Eigen::Index>(n), "zoh_discretize: B~ must have one row per state");
    require(sys.delta > 0.0 && std::isfinite(sys.delta), "zoh_discretize: delta must be positive");
    ZohResult out;
    out.lambda = ComplexVec(n);
    out.b = ComplexMatrix(sys.b_tilde.rows(), sys.b_tilde.cols());
    for (std::size_t j = 0; j < n; ++j) {
        const cplx a{sys.a_tilde.re[j], sys.a_tilde.im[j]};
        if (mode == ZohMode::exact && a == cplx{0.0, 0.0}) {
            throw InvalidInput("zoh_discretize: a_tilde is zero; use first-order mode (delta * B~) explicitly");
        }
        const cplx lam = std::exp(sys.delta * a);
        out.lambda.re[j] = lam.real();
        out.lambda.im[j] = lam.imag();
        const cplx scale = mode == ZohMode::exact ? (lam - 1.0) / a : cplx{sys.delta, 0.0};
        const auto row = static_cast<Eigen::Index>(j);
        for (Eigen::Index c = 0; c < sys.b_tilde.cols(); ++c) {
            const cplx bt{sys.b_tilde.re(row, c), sys.b_tilde.im(row, c)};
            const cplx v = scale * bt;
            out.b.re(row, c) = v.real();
            out.b.im(row, c) = v.imag();
        }
    }
    return out;
}

ComplexVec s4d_lin(std::size_t n) {
    ComplexVec a(n);
    for (std::size_t j = 0; j < n; ++j) {
        a.re[j] = -0.5;
        a.im[j] = std::numbers::pi * static_cast<double>(j);
    }
    return a;
}

DenseMatrix to_real_block_form(const ComplexVec& lambda) {
    const auto n = static_cast<Eigen::Index>(lambda.size());
    DenseMatrix m = DenseMatrix::Zero(2 * n, 2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double r = lambda.re[static_cast<std::size_t>(j)];
        const double i = lambda.im[static_cast<std::size_t>(j)];
        m(2 * j, 2 * j) = r;
        m(2 * j, 2 * j + 1) = -i;
        m(2 * j + 1, 2 * j) = i;
        m(2 * j + 1, 2 * j + 1) = r;
    }
    return m;
}

std::vector<double> impulse_response(const LruParams& params, std::size_t length, std::size_t channel) {
    require(length >= 1, "impulse_response: length must be >= 1");
    require(channel < params.state_dim(), "impulse_response: channel out of range");
    const double decay = std::exp(params.nu_log[static_cast<Eigen::Index>(channel)]);
    const double theta = params.theta(channel);
    std::vector<double> out(length);
    for (std::size_t k = 0; k < length; ++k) {
        const double kd = static_cast<double>(k);
        out[k] = std::exp(-kd * decay) * std::cos(kd * theta);
    }
    return out;
}

std::size_t count_sign_changes(std::span<const double> x) {
    std::size_t count = 0;
    int prev = 0;
    for (double v : x) {
        const int s = (v > 0.0) - (v < 0.0);
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++count;
        prev = s;
    }
    return count;
}

}  // namespace lrukit
