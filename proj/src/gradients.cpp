#include "lrukit/gradients.hpp"

#include <utility>
#include <algorithm>
#include <cmath>

#include "lrukit/parallel.hpp"

namespace lrukit {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

MatrixMap flat(SequenceBatch& s) {
    return MatrixMap(s.data().data(), idx(s.batch() * s.length()), idx(s.features()));
}
ConstMatrixMap flat(const SequenceBatch& s) {
    return ConstMatrixMap(s.data().data(), idx(s.batch() * s.length()), idx(s.features()));
}

void accumulate(LruParams& acc, const LruParams& g) {
    acc.nu_log += g.nu_log;
    acc.theta_log += g.theta_log;
    acc.gamma_log += g.gamma_log;
    acc.b_re += g.b_re;
    acc.b_im += g.b_im;
    acc.c_re += g.c_re;
    acc.c_im += g.c_im;
    acc.d += g.d;
}

// Raw per-sequence sums before the chain rule through the eigenvalue parameterization:
// nu_log holds Re(g_lambda), theta_log holds Im(g_lambda), gamma_log holds dL/dgamma.
void backward_sequence(const LruParams& p, const ComplexVec& lambda, const std::vector<double>& gamma,
                       const SequenceBatch& u, const LruTrajectory& x, const SequenceBatch& gy, std::size_t b,
                       LruParams& acc, SequenceBatch* grad_u) {
    const std::size_t length = u.length();
    const std::size_t n = p.state_dim();
    const auto ln = idx(length);
    const auto nn = idx(n);
    const ConstMatrixMap ub = u.sequence(b);
    const ConstMatrixMap g = gy.sequence(b);
    const ConstMatrixMap xr(x.re.data() + x.offset(b, 0), ln, nn);
    const ConstMatrixMap xi(x.im.data() + x.offset(b, 0), ln, nn);

    if (p.d.size() > 0) acc.d += g.cwiseProduct(ub).colwise().sum().transpose();
    acc.c_re.noalias() += g.transpose() * xr;
    acc.c_im.noalias() -= g.transpose() * xi;

    RowMatrix dr = g * p.c_re;
    RowMatrix di = -(g * p.c_im);
    for (std::size_t k = length - 1; k-- > 0;) {
        const auto kk = idx(k);
        for (Eigen::Index j = 0; j < nn; ++j) {
            const double lr = lambda.re[static_cast<std::size_t>(j)];
            const double li = lambda.im[static_cast<std::size_t>(j)];
            const double nr = dr(kk + 1, j);
            const double ni = di(kk + 1, j);
            dr(kk, j) += lr * nr + li * ni;
            di(kk, j) += lr * ni - li * nr;
        }
    }

    for (Eigen::Index k = 1; k < ln; ++k) {
        for (Eigen::Index j = 0; j < nn; ++j) {
            const double pr = xr(k - 1, j);
            const double pi = xi(k - 1, j);
            acc.nu_log[j] += dr(k, j) * pr + di(k, j) * pi;
            acc.theta_log[j] += di(k, j) * pr - dr(k, j) * pi;
        }
    }

    const RowMatrix br = ub * p.b_re.transpose();
    const RowMatrix bi = ub * p.b_im.transpose();
    acc.gamma_log += (dr.cwiseProduct(br) + di.cwiseProduct(bi)).colwise().sum().transpose();

    const Eigen::Map<const Eigen::RowVectorXd> gamma_row(gamma.data(), nn);
    dr.array().rowwise() *= gamma_row.array();
    di.array().rowwise() *= gamma_row.array();
    acc.b_re.noalias() += dr.transpose() * ub;
    acc.b_im.noalias() += di.transpose() * ub;

    if (grad_u) {
        MatrixMap gu = grad_u->sequence(b);
        gu.noalias() = dr * p.b_re;
        gu.noalias() += di * p.b_im;
        if (p.d.size() > 0) gu.noalias() += g * p.d.asDiagonal();
    }
}

}  // namespace

LruGrads lru_backward(const LruParams& params, const SequenceBatch& u, const LruTrajectory& x,
                      const SequenceBatch& grad_y, SequenceBatch* grad_u) {
    params.validate();
    require(u.features() == params.input_dim(), "lru_backward: input features do not match B");
    require(grad_y.batch() == u.batch() && grad_y.length() == u.length() && grad_y.features() == params.output_dim(),
            "lru_backward: dL/dy shape mismatch");
    require(x.batch == u.batch() && x.length == u.length() && x.state == params.state_dim() &&
                x.re.size() == x.batch * x.length * x.state && x.im.size() == x.re.size(),
            "lru_backward: trajectory does not match input length");
    require(u.length() >= 1, "lru_backward: empty sequence");

    const ComplexVec lambda = params.lambda();
    const std::vector<double> gamma = params.gamma();
    if (grad_u) *grad_u = SequenceBatch(u.batch(), u.length(), u.features());

    const std::size_t threads = std::min(num_threads(), std::max<std::size_t>(u.batch(), 1));
    std::vector<LruParams> partial(threads, zeros_like(params));
    parallel_blocks(u.batch(), threads, [&](std::size_t begin, std::size_t end, std::size_t t) {
        for (std::size_t b = begin; b < end; ++b) {
            backward_sequence(params, lambda, gamma, u, x, grad_y, b, partial[t], grad_u);
        }
    });
    LruGrads g = zeros_like(params);
    for (const auto& p : partial) accumulate(g, p);

    for (Eigen::Index j = 0; j < g.nu_log.size(); ++j) {
        const double gr = g.nu_log[j];
        const double gi = g.theta_log[j];
        const double lr = lambda.re[static_cast<std::size_t>(j)];
        const double li = lambda.im[static_cast<std::size_t>(j)];
        // lambda = exp(-exp(nu_log) + i theta): d/dnu_log = -exp(nu_log) lambda, d/dtheta = i lambda.
        g.nu_log[j] = -std::exp(params.nu_log[j]) * (gr * lr + gi * li);
        const double g_theta = gi * lr - gr * li;
        g.theta_log[j] = params.phase_is_log ? params.theta(static_cast<std::size_t>(j)) * g_theta : g_theta;
        g.gamma_log[j] *= gamma[static_cast<std::size_t>(j)];
    }
    return g;
}

DenseRnnGrads dense_rnn_backward(const DenseRnn& rnn, Activation act, const SequenceBatch& u,
                                 const DenseRnnTrace& trace, const SequenceBatch& grad_y) {
    rnn.validate();
    const std::size_t length = u.length();
    require(trace.x.rows() == idx(length * u.batch()) && trace.pre.rows() == trace.x.rows(),
            "dense_rnn_backward: trace length mismatch");
    require(grad_y.batch() == u.batch() && grad_y.length() == length &&
                grad_y.features() == static_cast<std::size_t>(rnn.c.rows()),
            "dense_rnn_backward: dL/dy shape mismatch");
    const auto batch = idx(u.batch());
    const auto n = rnn.a.rows();

    DenseRnnGrads g{DenseMatrix::Zero(n, n), RowMatrix::Zero(rnn.b.rows(), rnn.b.cols()),
                    RowMatrix::Zero(rnn.c.rows(), rnn.c.cols()), RowMatrix::Zero(rnn.d.rows(), rnn.d.cols())};
    // Time-major stacks so the weight gradients reduce to one GEMM each.
    const auto rows = idx(length) * batch;
    const RowMatrix& xs = trace.x;
    RowMatrix us(rows, rnn.b.cols()), gys(rows, rnn.c.rows()), gpres(rows, n);
    for (std::size_t k = 0; k < length; ++k) {
        const auto kk = idx(k);
        for (Eigen::Index b = 0; b < batch; ++b) {
            us.row(kk * batch + b) = u.sequence(static_cast<std::size_t>(b)).row(kk);
            gys.row(kk * batch + b) = grad_y.sequence(static_cast<std::size_t>(b)).row(kk);
        }
    }
    RowMatrix gx(batch, n);
    for (std::size_t k = length; k-- > 0;) {
        const auto kk = idx(k);
        gx.noalias() = gys.middleRows(kk * batch, batch) * rnn.c;
        if (k + 1 < length) gx.noalias() += gpres.middleRows((kk + 1) * batch, batch) * rnn.a;
        auto gpre = gpres.middleRows(kk * batch, batch);
        const auto xk = xs.middleRows(kk * batch, batch);
        switch (act) {
            case Activation::linear: gpre = gx; break;
            case Activation::tanh: gpre = (gx.array() * (1.0 - xk.array().square())).matrix(); break;
            case Activation::relu: gpre = (trace.pre.middleRows(kk * batch, batch).array() > 0.0).select(gx, 0.0); break;
        }
    }
    g.c.noalias() = gys.transpose() * xs;
    g.d.noalias() = gys.transpose() * us;
    g.b.noalias() = gpres.transpose() * us;
    if (length > 1) g.a.noalias() = gpres.bottomRows(rows - batch).transpose() * xs.topRows(rows - batch);
    return g;
}

SequenceBatch block_backward(const BlockParams& block, const ModelConfig& cfg, const BlockCache& cache,
                             const SequenceBatch& grad_out, BlockParams& grads) {
    const SequenceBatch& u = cache.input;
    require(grad_out.batch() == u.batch() && grad_out.length() == u.length() && grad_out.features() == cfg.H,
            "block_backward: gradient shape mismatch");
    const std::size_t rows = u.batch() * u.length();
    const std::size_t h = cfg.H;

    RowMatrix g_gated = flat(grad_out);
    if (!cache.mask.empty()) {
        g_gated.array() *= Eigen::Map<const RowMatrix>(cache.mask.data(), idx(rows), idx(h)).array();
    }
    const RowMatrix& value = cache.gate_value;
    const RowMatrix& sig = cache.gate_sig;
    const RowMatrix g_value = g_gated.cwiseProduct(sig);
    const RowMatrix g_sigpre = (g_gated.array() * value.array() * sig.array() * (1.0 - sig.array())).matrix();

    const ConstMatrixMap z = flat(cache.lru.y);
    SequenceBatch gz(u.batch(), u.length(), h);
    MatrixMap gzm = flat(gz);
    if (cfg.glu_variant == GluVariant::full) {
        grads.glu_w1.noalias() += z.transpose() * g_value;
        grads.glu_b1 += g_value.colwise().sum().transpose();
        gzm.noalias() = g_value * block.glu_w1.transpose();
    } else {
        gzm = g_value;
    }
    grads.glu_w2.noalias() += z.transpose() * g_sigpre;
    grads.glu_b2 += g_sigpre.colwise().sum().transpose();
    gzm.noalias() += g_sigpre * block.glu_w2.transpose();

    SequenceBatch g_normed;
    accumulate(grads.lru, lru_backward(block.lru, cache.normed, cache.lru.x, gz, &g_normed));

    SequenceBatch gu = grad_out;
    const double* gn = g_normed.data().data();
    double* gi = gu.data().data();
    std::vector<double> gxhat(h);
    for (std::size_t r = 0; r < rows; ++r) {
        double mean_g = 0.0;
        double mean_gx = 0.0;
        for (std::size_t f = 0; f < h; ++f) {
            const double xh = cache.xhat[r * h + f];
            const double gnf = gn[r * h + f];
            grads.norm_scale[idx(f)] += gnf * xh;
            grads.norm_shift[idx(f)] += gnf;
            gxhat[f] = gnf * block.norm_scale[idx(f)];
            mean_g += gxhat[f];
            mean_gx += gxhat[f] * xh;
        }
        mean_g /= static_cast<double>(h);
        mean_gx /= static_cast<double>(h);
        for (std::size_t f = 0; f < h; ++f) {
            gi[r * h + f] += cache.inv_std[r] * (gxhat[f] - mean_g - cache.xhat[r * h + f] * mean_gx);
        }
    }
    return gu;
}

ModelParams model_backward(const ModelConfig& cfg, const ModelParams& params, const ModelCache& cache,
                           const SequenceBatch& grad_y) {
    require(cache.blocks.size() == cfg.depth, "model_backward: cache does not match depth");
    const SequenceBatch& hfin = cache.final_features;
    const std::size_t batch = hfin.batch();
    const std::size_t length = hfin.length();
    const std::size_t pooled_len = cfg.pooling == Pooling::none ? length : 1;
    require(grad_y.batch() == batch && grad_y.length() == pooled_len && grad_y.features() == cfg.output_dim,
            "model_backward: dL/dy shape mismatch");

    ModelParams g = zeros_like(params);

    SequenceBatch pooled(batch, pooled_len, cfg.H);
    for (std::size_t b = 0; b < batch; ++b) {
        switch (cfg.pooling) {
            case Pooling::none: pooled.sequence(b) = hfin.sequence(b); break;
            case Pooling::mean: pooled.sequence(b).row(0) = hfin.sequence(b).colwise().mean(); break;
            case Pooling::last: pooled.sequence(b).row(0) = hfin.sequence(b).row(idx(length - 1)); break;
        }
    }
    const ConstMatrixMap gy = flat(grad_y);
    g.head_w.noalias() = flat(pooled).transpose() * gy;
    g.head_b = gy.colwise().sum().transpose();
    const RowMatrix gp = gy * params.head_w.transpose();

    SequenceBatch gh(batch, length, cfg.H);
    for (std::size_t b = 0; b < batch; ++b) {
        MatrixMap ghb = gh.sequence(b);
        switch (cfg.pooling) {
            case Pooling::none: ghb = gp.middleRows(idx(b * length), idx(length)); break;
            case Pooling::mean: ghb.rowwise() = gp.row(idx(b)) / static_cast<double>(length); break;
            case Pooling::last: ghb.row(idx(length - 1)) = gp.row(idx(b)); break;
        }
    }

    for (std::size_t i = cfg.depth; i-- > 0;) {
        gh = block_backward(params.blocks[i], cfg, cache.blocks[i], gh, g.blocks[i]);
    }
    const ConstMatrixMap ghm = flat(std::as_const(gh));
    g.enc_w.noalias() = flat(cache.input).transpose() * ghm;
    g.enc_b = ghm.colwise().sum().transpose();
    return g;
}

LossValue mse_loss(const SequenceBatch& pred, const SequenceBatch& target) {
    require(pred.batch() == target.batch() && pred.length() == target.length() &&
                pred.features() == target.features(),
            "mse_loss: shape mismatch");
    require(pred.size() > 0, "mse_loss: empty prediction");
    LossValue out;
    out.grad = SequenceBatch(pred.batch(), pred.length(), pred.features());
    const double inv = 1.0 / static_cast<double>(pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        sum += d * d;
        out.grad.data()[i] = 2.0 * d * inv;
    }
    out.value = sum * inv;
    return out;
}

LossValue cross_entropy_loss(const SequenceBatch& pred, std::span<const std::size_t> labels) {
    const std::size_t rows = pred.batch() * pred.length();
    const std::size_t classes = pred.features();
    require(labels.size() == rows, "cross_entropy_loss: one label per row required");
    require(classes >= 1, "cross_entropy_loss: no classes");
    LossValue out;
    out.grad = SequenceBatch(pred.batch(), pred.length(), classes);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        require(labels[r] < classes, "cross_entropy_loss: label out of range");
        const double* z = pred.data().data() + r * classes;
        double* g = out.grad.data().data() + r * classes;
        const double zmax = *std::max_element(z, z + classes);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
        const double log_denom = std::log(denom) + zmax;
        out.value += (log_denom - z[labels[r]]) * inv;
        for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(z[c] - log_denom) * inv;
        g[labels[r]] -= inv;
    }
    return out;
}

std::complex<double> powers_lambda(PowersParameterization param, std::span<const double, 2> p) {
    if (param == PowersParameterization::standard) return {p[0], p[1]};
    return std::exp(std::complex<double>(-p[0], p[1]));
}

double powers_loss(PowersParameterization param, std::span<const double, 2> p, std::complex<double> target_power,
                   int k, std::span<double, 2> grad) {
    require(k >= 1, "powers_loss: k must be >= 1");
    using cplx = std::complex<double>;
    const cplx lam = powers_lambda(param, p);
    cplx pow_km1 = 1.0;
    for (int i = 0; i < k - 1; ++i) pow_km1 *= lam;
    const cplx w = pow_km1 * lam - target_power;
    const double loss = 0.5 * std::norm(w);
    const cplx g_lambda = w * static_cast<double>(k) * std::conj(pow_km1);
    if (param == PowersParameterization::standard) {
        grad[0] = g_lambda.real();
        grad[1] = g_lambda.imag();
    } else {
        const cplx z = std::conj(g_lambda) * lam;
        grad[0] = -z.real();
        grad[1] = -z.imag();
    }
    return loss;
}

double FdReport::max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
}

FdReport finite_difference_check(const std::function<double()>& loss, const std::vector<ParamView>& params,
                                 const std::vector<std::span<const double>>& analytic, double h) {
    require(h >= 1e-7 && h <= 1e-3, "finite_difference_check: h must be in [1e-7, 1e-3]");
    require(params.size() == analytic.size(), "finite_difference_check: analytic gradient count mismatch");
    const double f0 = loss();
    const double f1 = loss();
    if (f0 != f1 && !(std::isnan(f0) && std::isnan(f1))) {
        throw NumericalError("finite_difference_check: loss closure is not deterministic");
    }
    FdReport report;
    report.h = h;
    for (std::size_t t = 0; t < params.size(); ++t) {
        const ParamView& view = params[t];
        require(analytic[t].size() == view.values.size(), "finite_difference_check: size mismatch for " + view.name);
        FdEntry entry;
        entry.name = view.name;
        for (std::size_t i = 0; i < view.values.size(); ++i) {
            const double saved = view.values[i];
            view.values[i] = saved + h;
            const double fp = loss();
            view.values[i] = saved - h;
            const double fm = loss();
            view.values[i] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[t][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            if (rel > entry.max_rel_error || !std::isfinite(rel)) {
                entry.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
                entry.worst_index = i;
                entry.analytic = a;
                entry.numeric = numeric;
            }
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace lrukit
