#include "lrukit/init.hpp"

#include <cmath>

namespace lrukit {

std::size_t total_size(const std::vector<ParamView>& views) {
    std::size_t n = 0;
    for (const auto& v : views) n += v.values.size();
    return n;
}

void RingConfig::validate() const {
    require(std::isfinite(r_min) && std::isfinite(r_max) && std::isfinite(phase_min) && std::isfinite(phase_max),
            "ring: non-finite bound");
    require(0.0 <= r_min && r_min <= r_max && r_max <= 1.0, "ring: need 0 <= r_min <= r_max <= 1");
    require(0.0 <= phase_min && phase_min <= phase_max && phase_max <= 2.0 * std::numbers::pi + 1e-12,
            "ring: need 0 <= phase_min <= phase_max <= 2*pi");
}

std::pair<double, double> ring_point(const RingConfig& cfg, double u1, double u2) {
    const double r2min = cfg.r_min * cfg.r_min;
    const double r2max = cfg.r_max * cfg.r_max;
    const double nu = -0.5 * std::log(u1 * (r2max - r2min) + r2min);
    const double theta = cfg.phase_min + (cfg.phase_max - cfg.phase_min) * u2;
    return {nu, theta};
}

RingSample sample_ring(const RingConfig& cfg, std::size_t n, Rng& rng) {
    cfg.validate();
    require(cfg.r_max > 0.0, "sample_ring: degenerate ring r_min = r_max = 0; use r_max > 0");
    RingSample out;
    out.nu.resize(n);
    out.theta.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u1 = rng.uniform_open_zero();
        const double u2 = rng.uniform_open_zero();
        const auto [nu, theta] = ring_point(cfg, u1, u2);
        if (!std::isfinite(nu)) throw InvalidInput("sample_ring: non-finite nu drawn");
        out.nu[i] = nu;
        out.theta[i] = theta;
    }
    return out;
}

std::vector<double> gamma_init(const std::vector<double>& nu, const std::vector<double>& theta) {
    require(nu.size() == theta.size(), "gamma_init: nu and theta differ in length");
    std::vector<double> out(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
        // |lambda|^2 = exp(-2 nu); 1 - |lambda|^2 = -expm1(-2 nu).
        if (!(nu[i] > 0.0)) throw InvalidInput("gamma_init: |lambda| >= 1, normalization undefined");
        out[i] = 0.5 * std::log(-std::expm1(-2.0 * nu[i]));
    }
    return out;
}

ComplexMatrix glorot_complex(std::size_t rows, std::size_t cols, Rng& rng, double variance_scale) {
    require(rows >= 1 && cols >= 1, "glorot_complex: empty shape");
    const double sd = std::sqrt(variance_scale / static_cast<double>(rows + cols));
    ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.re.size(); ++i) {
        m.re.data()[i] = rng.normal(0.0, sd);
        m.im.data()[i] = rng.normal(0.0, sd);
    }
    return m;
}

DenseMatrix glorot_dense(std::size_t n, Rng& rng) {
    require(n >= 1, "glorot_dense: n must be >= 1");
    const double sd = 1.0 / std::sqrt(static_cast<double>(n));
    DenseMatrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal(0.0, sd);
    return a;
}

RowMatrix glorot_real(std::size_t rows, std::size_t cols, Rng& rng) {
    require(rows >= 1 && cols >= 1, "glorot_real: empty shape");
    const double sd = std::sqrt(2.0 / static_cast<double>(rows + cols));
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
    return m;
}

double LruParams::theta(std::size_t j) const {
    const auto idx = static_cast<Eigen::Index>(j);
    return phase_is_log ? std::exp(theta_log[idx]) : theta_log[idx];
}

ComplexVec LruParams::lambda() const {
    const std::size_t n = state_dim();
    ComplexVec lam(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double mag = std::exp(-std::exp(nu_log[static_cast<Eigen::Index>(j)]));
        const double th = theta(j);
        lam.re[j] = mag * std::cos(th);
        lam.im[j] = mag * std::sin(th);
    }
    return lam;
}

std::vector<double> LruParams::gamma() const {
    std::vector<double> g(state_dim());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = std::exp(gamma_log[static_cast<Eigen::Index>(j)]);
    return g;
}

double LruParams::max_abs_lambda() const {
    double m = 0.0;
    for (Eigen::Index j = 0; j < nu_log.size(); ++j) m = std::max(m, std::exp(-std::exp(nu_log[j])));
    return m;
}

void LruParams::validate() const {
    const auto n = nu_log.size();
    require(n >= 1, "LruParams: empty state");
    require(theta_log.size() == n && gamma_log.size() == n, "LruParams: eigenvalue parameter lengths differ");
    require(b_re.rows() == n && b_im.rows() == n && b_re.cols() == b_im.cols() && b_re.cols() >= 1,
            "LruParams: B shape mismatch");
    require(c_re.cols() == n && c_im.cols() == n && c_re.rows() == c_im.rows() && c_re.rows() >= 1,
            "LruParams: C shape mismatch");
    require(d.size() == 0 || (d.size() == c_re.rows() && b_re.cols() == c_re.rows()),
            "LruParams: D must be empty or match H_in == H_out");
    require(nu_log.allFinite() && theta_log.allFinite() && gamma_log.allFinite() && b_re.allFinite() &&
                b_im.allFinite() && c_re.allFinite() && c_im.allFinite() && d.allFinite(),
            "LruParams: non-finite entries");
}

LruParams lru_init(const RingConfig& cfg, const LruDims& dims, Rng& rng, const LruInitOptions& opts) {
    require(dims.input >= 1 && dims.state >= 1 && dims.output >= 1, "lru_init: dimensions must be >= 1");
    require(opts.b_scale > 0.0, "lru_init: b_scale must be positive");
    Rng ring_rng = rng.split(0);
    Rng b_rng = rng.split(1);
    Rng c_rng = rng.split(2);
    Rng d_rng = rng.split(3);

    const RingSample ring = sample_ring(cfg, dims.state, ring_rng);
    for (std::size_t j = 0; j < dims.state; ++j) {
        require(ring.nu[j] > 0.0, "lru_init: eigenvalue sampled on the unit circle");
        require(ring.theta[j] > 0.0, "lru_init: phase must be > 0 for the log-phase parameterization");
    }
    const std::vector<double> gamma_log = gamma_init(ring.nu, ring.theta);

    LruParams p;
    p.phase_is_log = opts.phase_is_log;
    const auto n = static_cast<Eigen::Index>(dims.state);
    p.nu_log.resize(n);
    p.theta_log.resize(n);
    p.gamma_log.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        p.nu_log[j] = std::log(ring.nu[static_cast<std::size_t>(j)]);
        const double th = ring.theta[static_cast<std::size_t>(j)];
        p.theta_log[j] = opts.phase_is_log ? std::log(th) : th;
        p.gamma_log[j] = gamma_log[static_cast<std::size_t>(j)];
    }
    ComplexMatrix b = glorot_complex(dims.state, dims.input, b_rng, opts.b_scale);
    ComplexMatrix c = glorot_complex(dims.output, dims.state, c_rng);
    p.b_re = std::move(b.re);
    p.b_im = std::move(b.im);
    p.c_re = std::move(c.re);
    p.c_im = std::move(c.im);
    if (dims.input == dims.output) {
        p.d.resize(static_cast<Eigen::Index>(dims.output));
        for (Eigen::Index i = 0; i < p.d.size(); ++i) p.d[i] = d_rng.normal();
    }
    return p;
}

LruParams zeros_like(const LruParams& p) {
    LruParams z;
    z.phase_is_log = p.phase_is_log;
    z.nu_log = Vector::Zero(p.nu_log.size());
    z.theta_log = Vector::Zero(p.theta_log.size());
    z.gamma_log = Vector::Zero(p.gamma_log.size());
    z.b_re = RowMatrix::Zero(p.b_re.rows(), p.b_re.cols());
    z.b_im = RowMatrix::Zero(p.b_im.rows(), p.b_im.cols());
    z.c_re = RowMatrix::Zero(p.c_re.rows(), p.c_re.cols());
    z.c_im = RowMatrix::Zero(p.c_im.rows(), p.c_im.cols());
    z.d = Vector::Zero(p.d.size());
    return z;
}

std::vector<ParamView> param_views(LruParams& p, const std::string& prefix) {
    return {
        make_view(prefix + "nu_log", p.nu_log, ParamGroup::recurrent),
        make_view(prefix + "theta_log", p.theta_log, ParamGroup::recurrent),
        make_view(prefix + "gamma_log", p.gamma_log, ParamGroup::recurrent),
        make_view(prefix + "b_re", p.b_re, ParamGroup::recurrent),
        make_view(prefix + "b_im", p.b_im, ParamGroup::recurrent),
        make_view(prefix + "c_re", p.c_re, ParamGroup::general),
        make_view(prefix + "c_im", p.c_im, ParamGroup::general),
        make_view(prefix + "d", p.d, ParamGroup::general),
    };
}

}  // namespace lrukit
