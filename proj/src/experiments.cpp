#include "lrukit/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "lrukit/parallel.hpp"

namespace lrukit {

using cplx = std::complex<double>;

double gain_formula(double r_min, double r_max) {
    require(std::isfinite(r_min) && std::isfinite(r_max), "gain_formula: radii must be finite");
    require(r_max < 1.0, "gain_formula: r_max >= 1 makes the gain diverge");
    require(r_min >= 0.0 && r_min <= r_max, "gain_formula: need 0 <= r_min <= r_max");
    const double a = r_min * r_min;
    const double b = r_max * r_max;
    if (b - a < 1e-12) return 1.0 / (1.0 - 0.5 * (a + b));
    return (std::log1p(-a) - std::log1p(-b)) / (b - a);
}

double percentile(std::vector<double> values, double q) {
    require(!values.empty(), "percentile: empty sample");
    require(q >= 0.0 && q <= 100.0, "percentile: q must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

GainResult gain_monte_carlo(double r_min, double r_max, std::size_t N, std::size_t L, InputMode mode,
                            std::size_t trials, Rng& rng, std::size_t input_dim) {
    require(N >= 1 && L >= 1 && trials >= 1, "gain_monte_carlo: sizes must be positive");
    if (input_dim == 0) input_dim = N;
    GainResult result;
    result.r_min = r_min;
    result.r_max = r_max;
    result.closed_form = gain_formula(r_min, r_max);
    result.N = N;
    result.L = L;
    result.input_dim = input_dim;
    result.mode = mode;
    result.transient_warning = std::pow(r_max, static_cast<double>(L)) > 1e-6;
    result.trials.assign(trials, 0.0);

    const bool zero_lambda = r_max == 0.0;
    const Rng base = rng.split(0x6a1);
    parallel_for(trials, num_threads(), [&](std::size_t t) {
        Rng trial_rng = base.split(t);
        Rng ring_rng = trial_rng.split(0);
        Rng b_rng = trial_rng.split(1);
        Rng u_rng = trial_rng.split(2);

        std::vector<cplx> lam(N, cplx(0.0, 0.0));
        if (!zero_lambda) {
            RingConfig cfg{r_min, r_max, 0.0, 2.0 * std::numbers::pi};
            const RingSample s = sample_ring(cfg, N, ring_rng);
            for (std::size_t i = 0; i < N; ++i) lam[i] = std::exp(cplx(-s.nu[i], s.theta[i]));
        }
        const ComplexMatrix b = glorot_complex(N, input_dim, b_rng);

        // Inputs are drawn and projected a block of steps at a time: B U is one matrix product.
        constexpr std::size_t kBlock = 256;
        const auto rows = static_cast<Eigen::Index>(input_dim);
        DenseMatrix u_block;
        DenseMatrix bu_re, bu_im;
        auto project_block = [&](std::size_t cols) {
            u_block.resize(rows, static_cast<Eigen::Index>(cols));
            for (Eigen::Index c = 0; c < u_block.cols(); ++c) {
                for (Eigen::Index h = 0; h < rows; ++h) u_block(h, c) = u_rng.normal();
            }
            bu_re.noalias() = b.re * u_block;
            bu_im.noalias() = b.im * u_block;
            return bu_re.squaredNorm() + bu_im.squaredNorm();
        };
        auto step = [&](Eigen::Index c, std::vector<cplx>& x) {
            for (std::size_t i = 0; i < N; ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                x[i] = lam[i] * x[i] + cplx(bu_re(r, c), bu_im(r, c));
            }
        };

        std::vector<cplx> x(N, cplx(0.0, 0.0));
        double input_energy = 0.0;
        if (mode == InputMode::constant) {
            input_energy = project_block(1);
            for (std::size_t k = 0; k < L; ++k) step(0, x);
        } else {
            double sum = 0.0;
            for (std::size_t k0 = 0; k0 < L; k0 += kBlock) {
                const std::size_t cols = std::min(kBlock, L - k0);
                sum += project_block(cols);
                for (std::size_t c = 0; c < cols; ++c) step(static_cast<Eigen::Index>(c), x);
            }
            input_energy = sum / static_cast<double>(L);
        }
        double state_energy = 0.0;
        for (const auto& v : x) state_energy += std::norm(v);
        result.trials[t] = state_energy / input_energy;
    });

    result.monte_carlo = std::accumulate(result.trials.begin(), result.trials.end(), 0.0) /
                         static_cast<double>(trials);
    result.p5 = percentile(result.trials, 5.0);
    result.p95 = percentile(result.trials, 95.0);
    return result;
}

double conv_kernel_value(std::size_t k) {
    const double kk = static_cast<double>(k);
    const double c = std::cos(0.04 * kk);
    return 0.1 * std::exp(-0.015 * kk) * c * c;
}

std::vector<double> causal_convolution(std::span<const double> u, std::span<const double> h) {
    std::vector<double> y(u.size(), 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= k && j < h.size(); ++j) acc += h[j] * u[k - j];
        y[k] = acc;
    }
    return y;
}

ConvKernelTask conv_kernel_task(std::uint64_t seed, const ConvTaskOptions& opts) {
    require(opts.sequences >= 1 && opts.length >= 1, "conv_kernel_task: sizes must be positive");
    require(opts.a_min <= opts.a_max, "conv_kernel_task: empty a/c range");
    ConvKernelTask task;
    task.inputs = SequenceBatch(opts.sequences, opts.length, 1);
    task.targets = SequenceBatch(opts.sequences, opts.length, 1);
    task.kernel.resize(opts.length);
    for (std::size_t k = 0; k < opts.length; ++k) task.kernel[k] = conv_kernel_value(k);

    Rng rng = Rng(seed).split(0xc0);
    std::vector<double> u(opts.length);
    for (std::size_t s = 0; s < opts.sequences; ++s) {
        const double a = rng.uniform(opts.a_min, opts.a_max);
        const double c = rng.uniform(opts.a_min, opts.a_max);
        task.ac.emplace_back(a, c);
        for (std::size_t k = 0; k < opts.length; ++k) {
            const double kk = static_cast<double>(k);
            const double cc = std::cos(0.05 * c * kk);
            u[k] = std::sin(0.05 * a * kk) * cc * cc;
            task.inputs.at(s, k, 0) = u[k];
        }
        const auto y = causal_convolution(u, task.kernel);
        for (std::size_t k = 0; k < opts.length; ++k) task.targets.at(s, k, 0) = y[k];
    }
    return task;
}

DenseRnn dense_rnn_glorot(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng) {
    Rng ra = rng.split(0), rb = rng.split(1), rc = rng.split(2), rd = rng.split(3);
    DenseRnn rnn;
    rnn.a = glorot_dense(hidden, ra);
    rnn.b = glorot_real(hidden, input, rb);
    rnn.c = glorot_real(output, hidden, rc);
    rnn.d = glorot_real(output, input, rd);
    return rnn;
}

namespace {

std::vector<ParamView> rnn_views(DenseRnn& r) {
    return {make_view("a", r.a, ParamGroup::general), make_view("b", r.b, ParamGroup::general),
            make_view("c", r.c, ParamGroup::general), make_view("d", r.d, ParamGroup::general)};
}

std::vector<ParamView> rnn_views(DenseRnnGrads& g) {
    return {make_view("a", g.a, ParamGroup::general), make_view("b", g.b, ParamGroup::general),
            make_view("c", g.c, ParamGroup::general), make_view("d", g.d, ParamGroup::general)};
}

DenseRnn zeros_like(const DenseRnn& r) {
    DenseRnn z;
    z.a = DenseMatrix::Zero(r.a.rows(), r.a.cols());
    z.b = RowMatrix::Zero(r.b.rows(), r.b.cols());
    z.c = RowMatrix::Zero(r.c.rows(), r.c.cols());
    z.d = RowMatrix::Zero(r.d.rows(), r.d.cols());
    return z;
}

OptimConfig plain_adam(double lr) {
    OptimConfig cfg;
    cfg.base_lr = lr;
    cfg.lr_factor = 1.0;
    cfg.weight_decay = 0.0;
    return cfg;
}

}  // namespace

DenseRnnTrainResult train_dense_rnn(const ConvKernelTask& task, Activation act, std::size_t hidden, double lr,
                                    std::size_t steps, std::uint64_t init_seed) {
    require(hidden >= 1, "train_dense_rnn: hidden must be >= 1");
    require(lr > 0.0, "train_dense_rnn: lr must be positive");
    Rng rng(init_seed);
    DenseRnn rnn = dense_rnn_glorot(task.inputs.features(), hidden, task.targets.features(), rng);
    DenseRnn m = zeros_like(rnn);
    DenseRnn v = zeros_like(rnn);
    const OptimConfig cfg = plain_adam(lr);

    DenseRnnTrainResult result;
    auto forward_loss = [&](DenseRnnTrace* trace, LossValue* out) {
        const SequenceBatch y = dense_rnn_forward(rnn, act, task.inputs, trace);
        *out = mse_loss(y, task.targets);
        return out->value;
    };
    DenseRnnTrace trace;
    for (std::size_t step = 0; step < steps; ++step) {
        LossValue loss;
        forward_loss(&trace, &loss);
        result.losses.push_back(loss.value);
        if (!std::isfinite(loss.value)) {
            result.diverged = true;
            return result;
        }
        DenseRnnGrads grads = dense_rnn_backward(rnn, act, task.inputs, trace, loss.grad);
        try {
            adamw_update(rnn_views(rnn), rnn_views(grads), rnn_views(m), rnn_views(v), step + 1, cfg, lr);
        } catch (const NumericalError&) {
            result.diverged = true;
            result.losses.push_back(std::numeric_limits<double>::infinity());
            return result;
        }
    }
    LossValue final_loss;
    forward_loss(nullptr, &final_loss);
    result.losses.push_back(final_loss.value);
    if (!std::isfinite(final_loss.value)) result.diverged = true;
    return result;
}

PowersRun powers_task_run(const PowersTaskConfig& cfg, Rng& rng) {
    require(cfg.k >= 1, "powers_task_run: k must be >= 1");
    require(cfg.lr > 0.0, "powers_task_run: lr must be positive");
    const cplx target = std::exp(cplx(-cfg.nu_star, cfg.theta_star));
    cplx target_power = 1.0;
    for (int i = 0; i < cfg.k; ++i) target_power *= target;

    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double theta0 = cfg.theta_star + sign * cfg.phase_offset;
    Vector p(2);
    if (cfg.parameterization == PowersParameterization::standard) {
        const cplx start = std::exp(cplx(-cfg.nu_star, theta0));
        p << start.real(), start.imag();
    } else {
        p << cfg.nu_star, theta0;
    }
    Vector g = Vector::Zero(2), m = Vector::Zero(2), v = Vector::Zero(2);
    const OptimConfig opt = plain_adam(cfg.lr);
    const std::vector<ParamView> pv{make_view("p", p, ParamGroup::general)};
    const std::vector<ParamView> gv{make_view("p", g, ParamGroup::general)};
    const std::vector<ParamView> mv{make_view("p", m, ParamGroup::general)};
    const std::vector<ParamView> vv{make_view("p", v, ParamGroup::general)};

    PowersRun run;
    auto evaluate = [&] {
        return powers_loss(cfg.parameterization, std::span<const double, 2>(p.data(), 2), target_power, cfg.k,
                           std::span<double, 2>(g.data(), 2));
    };
    for (std::size_t it = 0; it <= cfg.iterations; ++it) {
        const double loss = evaluate();
        run.losses.push_back(loss);
        if (!run.iterations_to_threshold && loss < cfg.threshold) run.iterations_to_threshold = it;
        if (it == cfg.iterations || !std::isfinite(loss)) break;
        adamw_update(pv, gv, mv, vv, it + 1, opt, cfg.lr);
    }
    run.final_lambda = powers_lambda(cfg.parameterization, std::span<const double, 2>(p.data(), 2));
    return run;
}

double offband_ratio(const Spectrum& s, std::size_t freq) {
    const std::size_t L = s.power.size();
    require(L > 0, "offband_ratio: empty spectrum");
    double total = 0.0, off = 0.0;
    for (std::size_t m = 0; m < L; ++m) {
        total += s.power[m];
        const bool in_band = m == 0 || m == freq % L || m == (L - freq % L) % L;
        if (!in_band) off += s.power[m];
    }
    return total > 0.0 ? off / total : 0.0;
}

LeakageResult leakage_demo(std::size_t freq, std::size_t length, Activation act) {
    require(is_power_of_two(length), "leakage_demo: L must be a power of two");
    require(freq >= 1 && freq < length / 2, "leakage_demo: freq must be a bin in [1, L/2)");
    std::vector<double> tone(length), out(length);
    for (std::size_t k = 0; k < length; ++k) {
        tone[k] = std::sin(2.0 * std::numbers::pi * static_cast<double>(freq * k % length) / static_cast<double>(length));
        switch (act) {
            case Activation::linear: out[k] = tone[k]; break;
            case Activation::tanh: out[k] = std::tanh(tone[k]); break;
            case Activation::relu: out[k] = std::max(0.0, tone[k]); break;
        }
    }
    LeakageResult r;
    r.before = dft(tone);
    r.after = dft(out);
    r.offband_energy_ratio = offband_ratio(r.after, freq);
    return r;
}

std::vector<std::pair<std::size_t, std::size_t>> activated_intervals(std::span<const double> signal) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t k = 0;
    while (k < signal.size()) {
        if (signal[k] > 0.0) {
            const std::size_t first = k;
            while (k + 1 < signal.size() && signal[k + 1] > 0.0) ++k;
            runs.emplace_back(first, k);
        }
        ++k;
    }
    return runs;
}

ComplexVec relu_spectrum_via_intervals(std::span<const double> signal) {
    const std::size_t L = signal.size();
    require(L >= 1, "relu_spectrum_via_intervals: empty signal");
    const ComplexVec fu = dft_complex(signal);
    const auto runs = activated_intervals(signal);

    std::vector<cplx> kernel(L, cplx(0.0, 0.0));
    for (std::size_t m = 0; m < L; ++m) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(L);
        cplx acc = 0.0;
        for (const auto& [first, last] : runs) {
            const double len = static_cast<double>(last - first + 1);
            const double center = 0.5 * static_cast<double>(first + last);
            const double dirichlet = m == 0 ? len : std::sin(w * len / 2.0) / std::sin(w / 2.0);
            acc += std::polar(dirichlet, -w * center);
        }
        kernel[m] = acc;
    }
    ComplexVec out(L);
    for (std::size_t m = 0; m < L; ++m) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < L; ++j) acc += cplx(fu.re[j], fu.im[j]) * kernel[(m + L - j) % L];
        acc /= static_cast<double>(L);
        out.re[m] = acc.real();
        out.im[m] = acc.imag();
    }
    return out;
}

double lru_tone_offband_ratio(const LruParams& params, std::size_t freq, std::size_t length, std::size_t warmup) {
    require(params.input_dim() == 1 && params.output_dim() == 1, "lru_tone_offband_ratio: needs a SISO layer");
    require(freq >= 1 && 2 * freq < length, "lru_tone_offband_ratio: freq must be a bin in [1, L/2)");
    SequenceBatch u(1, warmup + length, 1);
    for (std::size_t k = 0; k < warmup + length; ++k) {
        u.at(0, k, 0) = std::sin(2.0 * std::numbers::pi * static_cast<double>(freq * k % length) /
                                 static_cast<double>(length));
    }
    const LruOutput out = lru_forward(params, u, ScanMode::sequential);
    std::vector<double> tail(length);
    for (std::size_t k = 0; k < length; ++k) tail[k] = out.y.at(0, warmup + k, 0);
    return offband_ratio(dft(tail), freq);
}

double ring_ks_statistic(std::vector<double> abs_sq, double r_min, double r_max) {
    require(!abs_sq.empty(), "ring_ks_statistic: empty sample");
    const double a = r_min * r_min;
    const double b = r_max * r_max;
    require(b > a, "ring_ks_statistic: degenerate ring");
    std::sort(abs_sq.begin(), abs_sq.end());
    const double n = static_cast<double>(abs_sq.size());
    double d = 0.0;
    for (std::size_t i = 0; i < abs_sq.size(); ++i) {
        const double f = std::clamp((abs_sq[i] - a) / (b - a), 0.0, 1.0);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

std::pair<double, double> chi_square_uniform(std::span<const double> samples, double lo, double hi,
                                             std::size_t bins) {
    require(bins >= 2 && hi > lo && !samples.empty(), "chi_square_uniform: bad arguments");
    std::vector<double> counts(bins, 0.0);
    for (double s : samples) {
        auto idx = static_cast<std::ptrdiff_t>(std::floor((s - lo) / (hi - lo) * static_cast<double>(bins)));
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    const double expected = static_cast<double>(samples.size()) / static_cast<double>(bins);
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(static_cast<double>(bins - 1));
    return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

ExperimentReport spectrum_report_ring(const RingConfig& cfg, std::size_t n, Rng& rng) {
    cfg.validate();
    const RingSample s = sample_ring(cfg, n, rng);
    ExperimentReport report;
    report.name = "spectrum";
    report.table.header = {"index", "re", "im", "abs", "phase"};
    std::vector<double> abs_sq(n);
    bool in_sector = true;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx lam = std::exp(cplx(-s.nu[i], s.theta[i]));
        const double r = std::exp(-s.nu[i]);
        abs_sq[i] = r * r;
        in_sector = in_sector && r >= cfg.r_min - 1e-12 && r <= cfg.r_max + 1e-12 &&
                    s.theta[i] >= cfg.phase_min && s.theta[i] <= cfg.phase_max;
        report.table.add_row({i, lam.real(), lam.imag(), r, s.theta[i]});
    }
    report.metrics["kind"] = "ring";
    report.metrics["n"] = n;
    report.metrics["all_in_sector"] = in_sector;
    if (cfg.r_max > cfg.r_min) {
        report.metrics["ks_abs_sq"] = ring_ks_statistic(abs_sq, cfg.r_min, cfg.r_max);
    }
    return report;
}

ExperimentReport spectrum_report_dense(std::size_t n, int gelfand_k, Rng& rng) {
    const DenseMatrix a = glorot_dense(n, rng);
    const GelfandEstimate g = gelfand_spectral_radius(a, gelfand_k);
    ExperimentReport report;
    report.name = "spectrum";
    report.table.header = {"quantity", "k", "value"};
    report.table.add_row({"gelfand_radius", g.k, g.radius});
    report.table.add_row({"gelfand_radius", g.k / 2, g.radius_half});
    for (int k = 1; k <= 3; ++k) report.table.add_row({"trace_moment", k, trace_moment(a, k)});
    report.metrics["kind"] = "dense";
    report.metrics["n"] = n;
    report.metrics["gelfand_radius"] = g.radius;
    report.metrics["gelfand_radius_half"] = g.radius_half;
    report.metrics["gelfand_k"] = g.k;
    if (n == 1) report.metrics["entry"] = a(0, 0);
    return report;
}

double scan_equivalence_error(std::size_t length, std::size_t state, std::size_t batch, std::size_t features,
                              std::uint64_t seed, std::size_t threads) {
    Rng rng(seed);
    Rng init_rng = rng.split(0);
    Rng data_rng = rng.split(1);
    const LruParams params = lru_init(RingConfig{0.5, 0.99}, LruDims{features, state, features}, init_rng);
    SequenceBatch u(batch, length, features);
    for (auto& v : u.data()) v = data_rng.normal();
    const LruOutput seq = lru_forward(params, u, ScanOptions{ScanMode::sequential});
    const LruOutput par = lru_forward(params, u, ScanOptions{ScanMode::parallel, threads});
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < seq.y.size(); ++i) {
        diff = std::max(diff, std::abs(seq.y.data()[i] - par.y.data()[i]));
        scale = std::max(scale, std::abs(seq.y.data()[i]));
    }
    if (scale == 0.0) return diff;
    return diff / scale;
}

namespace {

struct ScanBench {
    ComplexVec lambda;
    std::vector<double> z_re, z_im;
    std::size_t length;
};

ScanBench make_bench(std::size_t length, std::size_t state) {
    Rng rng(0xbe);
    Rng ring_rng = rng.split(0);
    const RingSample s = sample_ring(RingConfig{0.5, 0.99}, state, ring_rng);
    ScanBench b{ComplexVec(state), {}, {}, length};
    for (std::size_t i = 0; i < state; ++i) {
        const cplx lam = std::exp(cplx(-s.nu[i], s.theta[i]));
        b.lambda.re[i] = lam.real();
        b.lambda.im[i] = lam.imag();
    }
    b.z_re.resize(length * state);
    b.z_im.resize(length * state);
    Rng data = rng.split(1);
    for (auto& v : b.z_re) v = data.normal();
    for (auto& v : b.z_im) v = data.normal();
    return b;
}

double median_ns(const ScanBench& b, ScanOptions opts, std::size_t reps, std::size_t warmup) {
    std::vector<double> re, im, times;
    for (std::size_t r = 0; r < warmup + reps; ++r) {
        re = b.z_re;
        im = b.z_im;
        const auto t0 = std::chrono::steady_clock::now();
        diagonal_scan(b.lambda, 1, b.length, re, im, opts);
        const auto t1 = std::chrono::steady_clock::now();
        if (r >= warmup) times.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
    }
    return percentile(times, 50.0);
}

}  // namespace

CsvTable bench_scan(const BenchOptions& opts) {
    require(opts.reps >= 5, "bench_scan: at least 5 repetitions");
    require(opts.state >= 1, "bench_scan: state must be >= 1");
    CsvTable table;
    table.header = {"L", "threads", "mode", "median_ns"};
    for (std::size_t L : opts.lengths) {
        require(is_power_of_two(L) && L <= (std::size_t{1} << 20), "bench_scan: lengths must be powers of two up to 2^20");
        const ScanBench b = make_bench(L, opts.state);
        for (std::size_t t : opts.threads) {
            require(t >= 1, "bench_scan: thread counts must be >= 1");
            const double seq = median_ns(b, ScanOptions{ScanMode::sequential, t}, opts.reps, opts.warmup);
            const double par = median_ns(b, ScanOptions{ScanMode::parallel, t}, opts.reps, opts.warmup);
            table.add_row({L, t, "sequential", seq});
            table.add_row({L, t, "parallel", par});
        }
    }
    return table;
}

double scan_speedup(std::size_t length, std::size_t state, std::size_t threads, std::size_t reps) {
    const ScanBench b = make_bench(length, state);
    const double seq = median_ns(b, ScanOptions{ScanMode::sequential, threads}, reps, 1);
    const double par = median_ns(b, ScanOptions{ScanMode::parallel, threads}, reps, 1);
    return seq / par;
}

}  // namespace lrukit
