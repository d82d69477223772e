#include "lrukit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <CLI11.hpp>

#include "lrukit/experiments.hpp"
#include "lrukit/parallel.hpp"

namespace lrukit {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

json ring_json(double r_min, double r_max, double phase_max = 2.0 * kPi) {
    return {{"r_min", r_min}, {"r_max", r_max}, {"phase_min", 0.0}, {"phase_max", phase_max}};
}

json task_params(const std::string& sub) {
    if (sub == "spectrum") return {{"dense", false}, {"n", 256}, {"gelfand_k", 32}};
    if (sub == "gain") {
        return {{"n", 500}, {"len", 10000}, {"trials", 10}, {"input_mode", "white_noise"}, {"input_dim", 0}};
    }
    if (sub == "scan-check") return {{"len", 257}, {"n", 64}, {"batch", 4}, {"features", 2}, {"tol", 1e-10}};
    if (sub == "bench-scan") {
        return {{"lengths", {1024, 16384, 65536}}, {"thread_counts", {1}}, {"n", 64}, {"reps", 5}, {"warmup", 1}};
    }
    if (sub == "leakage") return {{"freq", 8}, {"len", 256}, {"activation", "relu"}};
    if (sub == "impulse") return {{"len", 200}, {"n", 8}};
    if (sub == "train-conv") {
        return {{"arch", "dense"}, {"activation", "linear"}, {"hidden", 100}, {"lr", 1e-3}, {"steps", 2000},
                {"sequences", 32}, {"len", 100}, {"a_min", 0.5}, {"a_max", 2.0}};
    }
    if (sub == "train-powers") {
        return {{"k", 100},           {"nu_star", 0.01},   {"theta_star", 0.45 * kPi},
                {"parameterization", "exponential"},        {"iterations", 500},
                {"lr", 1e-3},         {"phase_offset", 0.3}, {"threshold", 1e-4}};
    }
    if (sub == "grad-check") return {{"len", 32}, {"batch", 2}, {"h", 1e-5}, {"tol", 1e-5}};
    if (sub == "zoh-compare") return {{"n", 8}, {"delta", 1e-3}};
    throw InvalidInput("unknown subcommand '" + sub + "'");
}

json ring_defaults(const std::string& sub) {
    if (sub == "gain") return ring_json(0.9, 0.99);
    if (sub == "impulse") return ring_json(0.9, 0.999, kPi / 50.0);
    if (sub == "spectrum") return ring_json(0.0, 1.0);
    return ring_json(0.9, 0.999);
}

bool numbers_compatible(const json& base, const json& value) {
    if (!value.is_number()) return false;
    if (base.is_number_float()) return true;
    if (value.is_number_float()) {
        const double d = value.get<double>();
        return std::floor(d) == d && (base.is_number_integer() || d >= 0.0);
    }
    return !(base.is_number_unsigned() && value.is_number_integer() && value.get<std::int64_t>() < 0);
}

std::size_t get_size(const json& j, const char* key) { return j.at(key).get<std::size_t>(); }

ModelConfig model_config(const json& cfg) {
    const json& m = cfg.at("model");
    const json& r = cfg.at("ring");
    ModelConfig mc;
    mc.depth = get_size(m, "depth");
    mc.H = get_size(m, "H");
    mc.N = get_size(m, "N");
    mc.input_dim = get_size(m, "input_dim");
    mc.output_dim = get_size(m, "output_dim");
    mc.dropout = m.at("dropout").get<double>();
    mc.pooling = parse_pooling(m.at("pooling").get<std::string>());
    mc.glu_variant = parse_glu_variant(m.at("glu_variant").get<std::string>());
    mc.b_scale = m.at("b_scale").get<double>();
    mc.phase_is_log = m.at("phase_is_log").get<bool>();
    mc.ring = RingConfig{r.at("r_min").get<double>(), r.at("r_max").get<double>(), r.at("phase_min").get<double>(),
                         r.at("phase_max").get<double>()};
    return mc;
}

RingConfig ring_config(const json& cfg) { return model_config(cfg).ring; }

OptimConfig optim_config(const json& cfg) {
    const json& o = cfg.at("optim");
    OptimConfig oc;
    oc.base_lr = o.at("base_lr").get<double>();
    oc.lr_factor = o.at("lr_factor").get<double>();
    oc.weight_decay = o.at("weight_decay").get<double>();
    oc.beta1 = o.at("beta1").get<double>();
    oc.beta2 = o.at("beta2").get<double>();
    oc.eps = o.at("eps").get<double>();
    oc.warmup_frac = o.at("warmup_frac").get<double>();
    oc.total_steps = get_size(o, "total_steps");
    oc.theta_in_recurrent_group = o.at("theta_in_recurrent_group").get<bool>();
    oc.d_in_recurrent_group = o.at("d_in_recurrent_group").get<bool>();
    return oc;
}

Activation parse_activation(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw InvalidInput("unknown activation '" + s + "' (expected linear|tanh|relu)");
}

struct SubResult {
    CsvTable table;
    json metrics = json::object();
    int exit_code = kExitOk;
};

SubResult run_spectrum(const json& cfg, const json& p, Rng& rng) {
    SubResult r;
    ExperimentReport rep = p.at("dense").get<bool>()
                               ? spectrum_report_dense(get_size(p, "n"), p.at("gelfand_k").get<int>(), rng)
                               : spectrum_report_ring(ring_config(cfg), get_size(p, "n"), rng);
    r.table = std::move(rep.table);
    r.metrics = std::move(rep.metrics);
    return r;
}

SubResult run_gain(const json& cfg, const json& p, Rng& rng) {
    const RingConfig ring = ring_config(cfg);
    const std::string mode_s = p.at("input_mode").get<std::string>();
    require(mode_s == "white_noise" || mode_s == "constant", "task.params.input_mode must be white_noise|constant");
    const InputMode mode = mode_s == "constant" ? InputMode::constant : InputMode::white_noise;
    const GainResult g =
        gain_monte_carlo(ring.r_min, ring.r_max, get_size(p, "n"), get_size(p, "len"), mode, get_size(p, "trials"), rng,
                         get_size(p, "input_dim"));
    SubResult r;
    r.table.header = {"run", "gain_mc", "gain_formula"};
    for (std::size_t t = 0; t < g.trials.size(); ++t) r.table.add_row({t, g.trials[t], g.closed_form});
    r.metrics = {{"gain_formula", g.closed_form}, {"gain_mc_mean", g.monte_carlo},
                 {"p5", g.p5},                    {"p95", g.p95},
                 {"relative_error", g.monte_carlo / g.closed_form - 1.0},
                 {"input_dim", g.input_dim},
                 {"transient_warning", g.transient_warning}};
    return r;
}

SubResult run_scan_check(const json& cfg, const json& p, Rng&) {
    const double err = scan_equivalence_error(get_size(p, "len"), get_size(p, "n"), get_size(p, "batch"),
                                              get_size(p, "features"), cfg.at("seed").get<std::uint64_t>());
    const double tol = p.at("tol").get<double>();
    SubResult r;
    r.table.header = {"L", "N", "batch", "max_rel_error", "passed"};
    r.table.add_row({get_size(p, "len"), get_size(p, "n"), get_size(p, "batch"), err, err <= tol});
    r.metrics = {{"max_rel_error", err}, {"tol", tol}, {"passed", err <= tol}};
    if (!(err <= tol)) r.exit_code = kExitNumerical;
    return r;
}

SubResult run_bench_scan(const json&, const json& p, Rng&) {
    BenchOptions opts;
    opts.lengths = p.at("lengths").get<std::vector<std::size_t>>();
    opts.threads = p.at("thread_counts").get<std::vector<std::size_t>>();
    opts.state = get_size(p, "n");
    opts.reps = get_size(p, "reps");
    opts.warmup = get_size(p, "warmup");
    SubResult r;
    r.table = bench_scan(opts);
    r.metrics["hardware_threads"] = std::thread::hardware_concurrency();
    return r;
}

SubResult run_leakage(const json&, const json& p, Rng&) {
    const LeakageResult lr =
        leakage_demo(get_size(p, "freq"), get_size(p, "len"), parse_activation(p.at("activation").get<std::string>()));
    SubResult r;
    r.table.header = {"bin", "freq", "power_before", "power_after"};
    for (std::size_t m = 0; m < lr.after.power.size(); ++m) {
        r.table.add_row({m, lr.after.freqs[m], lr.before.power[m], lr.after.power[m]});
    }
    r.metrics["offband_energy_ratio"] = lr.offband_energy_ratio;
    return r;
}

SubResult run_impulse(const json& cfg, const json& p, Rng& rng) {
    const std::size_t len = get_size(p, "len");
    const std::size_t n = get_size(p, "n");
    const RingConfig ring = ring_config(cfg);
    const LruParams params = lru_init(ring, LruDims{1, n, 1}, rng);
    SubResult r;
    r.table.header = {"channel", "k", "value"};
    json changes = json::array();
    std::size_t max_changes = 0;
    for (std::size_t c = 0; c < n; ++c) {
        const auto resp = impulse_response(params, len, c);
        for (std::size_t k = 0; k < len; ++k) r.table.add_row({c, k, resp[k]});
        const std::size_t sc = count_sign_changes(resp);
        changes.push_back(sc);
        max_changes = std::max(max_changes, sc);
    }
    const double bound = ring.phase_max * static_cast<double>(len) / kPi + 1.0;
    r.metrics = {{"sign_changes", changes}, {"max_sign_changes", max_changes}, {"sign_change_bound", bound}};
    return r;
}

Task conv_task_from(const json& p, std::uint64_t seed, ConvKernelTask* raw) {
    ConvTaskOptions opts;
    opts.sequences = get_size(p, "sequences");
    opts.length = get_size(p, "len");
    opts.a_min = p.at("a_min").get<double>();
    opts.a_max = p.at("a_max").get<double>();
    *raw = conv_kernel_task(seed, opts);
    return Task{"conv-kernel", raw->inputs, raw->targets, {}};
}

SubResult run_train_conv(const json& cfg, const json& p, Rng&, const std::filesystem::path& stem) {
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    const std::string arch = p.at("arch").get<std::string>();
    ConvKernelTask raw;
    const Task task = conv_task_from(p, seed, &raw);
    SubResult r;
    if (arch == "dense") {
        const DenseRnnTrainResult tr = train_dense_rnn(raw, parse_activation(p.at("activation").get<std::string>()),
                                                       get_size(p, "hidden"), p.at("lr").get<double>(),
                                                       get_size(p, "steps"), seed);
        r.table.header = {"step", "train_loss"};
        for (std::size_t s = 0; s < tr.losses.size(); ++s) r.table.add_row({s, tr.losses[s]});
        r.metrics = {{"final_train_loss", tr.final_loss()}, {"diverged", tr.diverged}};
        if (tr.diverged) r.exit_code = kExitNumerical;
        return r;
    }
    require(arch == "lru", "task.params.arch must be dense|lru");
    ModelConfig mc = model_config(cfg);
    mc.input_dim = 1;
    mc.output_dim = 1;
    mc.pooling = Pooling::none;
    OptimConfig oc = optim_config(cfg);
    oc.base_lr = p.at("lr").get<double>();
    oc.total_steps = get_size(p, "steps");
    ModelParams final_params;
    ExperimentReport rep = train_loop(mc, task, oc, seed, TrainOptions{oc.total_steps, 50}, &final_params);
    r.table = std::move(rep.table);
    r.metrics = std::move(rep.metrics);
    std::filesystem::path ckpt = stem;
    ckpt += "-params";
    save_checkpoint(final_params, mc, ckpt);
    r.metrics["checkpoint"] = ckpt.string();
    if (rep.diverged) r.exit_code = kExitNumerical;
    return r;
}

SubResult run_train_powers(const json&, const json& p, Rng& rng) {
    PowersTaskConfig pc;
    pc.k = p.at("k").get<int>();
    pc.nu_star = p.at("nu_star").get<double>();
    pc.theta_star = p.at("theta_star").get<double>();
    const std::string param = p.at("parameterization").get<std::string>();
    require(param == "standard" || param == "exponential", "task.params.parameterization must be standard|exponential");
    pc.parameterization = param == "standard" ? PowersParameterization::standard : PowersParameterization::exponential;
    pc.iterations = get_size(p, "iterations");
    pc.lr = p.at("lr").get<double>();
    pc.phase_offset = p.at("phase_offset").get<double>();
    pc.threshold = p.at("threshold").get<double>();
    const PowersRun run = powers_task_run(pc, rng);
    SubResult r;
    r.table.header = {"iteration", "loss"};
    for (std::size_t i = 0; i < run.losses.size(); ++i) r.table.add_row({i, run.losses[i]});
    r.metrics = {{"final_loss", run.losses.back()},
                 {"iterations_to_threshold", run.iterations_to_threshold ? json(*run.iterations_to_threshold) : json()},
                 {"final_lambda", {run.final_lambda.real(), run.final_lambda.imag()}}};
    if (!std::isfinite(run.losses.back())) r.exit_code = kExitNumerical;
    return r;
}

SubResult run_grad_check(const json& cfg, const json& p, Rng& rng) {
    const ModelConfig mc = model_config(cfg);
    mc.validate();
    Rng init_rng = rng.split(0), data_rng = rng.split(1);
    ModelParams params = model_init(mc, init_rng);
    const std::size_t batch = get_size(p, "batch");
    const std::size_t len = get_size(p, "len");
    SequenceBatch u(batch, len, mc.input_dim);
    for (auto& v : u.data()) v = data_rng.normal();
    const std::size_t out_len = mc.pooling == Pooling::none ? len : 1;
    SequenceBatch target(batch, out_len, mc.output_dim);
    for (auto& v : target.data()) v = data_rng.normal();

    const Rng dropout_rng = rng.split(2);
    auto loss_fn = [&] {
        Rng local = dropout_rng;
        return mse_loss(model_forward(mc, params, u, true, local, nullptr), target).value;
    };
    ModelCache cache;
    Rng local = dropout_rng;
    const SequenceBatch pred = model_forward(mc, params, u, true, local, &cache);
    ModelParams grads = model_backward(mc, params, cache, mse_loss(pred, target).grad);
    std::vector<std::span<const double>> analytic;
    for (const auto& v : param_views(grads)) analytic.emplace_back(v.values.data(), v.values.size());
    const FdReport rep = finite_difference_check(loss_fn, param_views(params), analytic, p.at("h").get<double>());
    const double tol = p.at("tol").get<double>();
    SubResult r;
    r.table.header = {"tensor", "max_rel_error", "worst_index", "analytic", "numeric"};
    for (const auto& e : rep.entries) r.table.add_row({e.name, e.max_rel_error, e.worst_index, e.analytic, e.numeric});
    r.metrics = {{"max_rel_error", rep.max_rel_error()}, {"tol", tol}, {"passed", rep.passed(tol)}};
    if (!rep.passed(tol)) r.exit_code = kExitNumerical;
    return r;
}

SubResult run_zoh_compare(const json&, const json& p, Rng&) {
    const std::size_t n = get_size(p, "n");
    ZohSystem sys;
    sys.a_tilde = s4d_lin(n);
    sys.b_tilde = ComplexMatrix(static_cast<Eigen::Index>(n), 1);
    sys.b_tilde.re.setOnes();
    sys.delta = p.at("delta").get<double>();
    const ZohResult exact = zoh_discretize(sys, ZohMode::exact);
    const ZohResult first = zoh_discretize(sys, ZohMode::first_order);
    SubResult r;
    r.table.header = {"n", "lambda_re", "lambda_im", "abs_lambda", "b_exact_re", "b_exact_im", "b_first_order", "rel_diff"};
    double max_abs = 0.0, max_rel = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const std::complex<double> be(exact.b.re(ii, 0), exact.b.im(ii, 0));
        const std::complex<double> bf(first.b.re(ii, 0), first.b.im(ii, 0));
        const double rel = std::abs(be - bf) / std::abs(be);
        max_abs = std::max(max_abs, exact.lambda.abs(i));
        max_rel = std::max(max_rel, rel);
        r.table.add_row({i, exact.lambda.re[i], exact.lambda.im[i], exact.lambda.abs(i), be.real(), be.imag(),
                         bf.real(), rel});
    }
    r.metrics = {{"max_abs_lambda", max_abs}, {"max_rel_diff_b", max_rel}};
    return r;
}

struct Alias {
    const char* flag;
    const char* path;
    const char* help;
};

constexpr Alias kAliases[] = {
    {"--r-min", "ring.r_min", "ring inner radius"},
    {"--r-max", "ring.r_max", "ring outer radius"},
    {"--n", "task.params.n", "state / matrix size"},
    {"--len", "task.params.len", "sequence length"},
    {"--trials", "task.params.trials", "Monte-Carlo trials"},
    {"--arch", "task.params.arch", "dense|lru"},
    {"--seed", "seed", "random seed"},
    {"--output-dir", "output_dir", "directory for CSV/JSON outputs"},
    {"--threads", "threads", "worker thread cap (0: LRU_THREADS or hardware)"},
};

}  // namespace

const std::vector<std::string>& cli_subcommands() {
    static const std::vector<std::string> subs{"spectrum", "gain",       "scan-check",   "bench-scan", "leakage",
                                               "impulse",  "train-conv", "train-powers", "grad-check", "zoh-compare"};
    return subs;
}

json default_run_config(const std::string& sub) {
    json params = task_params(sub);
    const ModelConfig mc;
    const OptimConfig oc;
    json cfg;
    cfg["seed"] = 0;
    cfg["output_dir"] = "out";
    cfg["threads"] = 0;
    cfg["model"] = {{"depth", mc.depth},
                    {"H", mc.H},
                    {"N", mc.N},
                    {"input_dim", mc.input_dim},
                    {"output_dim", mc.output_dim},
                    {"dropout", mc.dropout},
                    {"pooling", sub == "train-conv" ? "none" : to_string(mc.pooling)},
                    {"glu_variant", to_string(mc.glu_variant)},
                    {"b_scale", mc.b_scale},
                    {"phase_is_log", mc.phase_is_log}};
    cfg["ring"] = ring_defaults(sub);
    cfg["optim"] = {{"base_lr", oc.base_lr},
                    {"lr_factor", oc.lr_factor},
                    {"weight_decay", oc.weight_decay},
                    {"beta1", oc.beta1},
                    {"beta2", oc.beta2},
                    {"eps", oc.eps},
                    {"warmup_frac", oc.warmup_frac},
                    {"total_steps", oc.total_steps},
                    {"theta_in_recurrent_group", oc.theta_in_recurrent_group},
                    {"d_in_recurrent_group", oc.d_in_recurrent_group}};
    cfg["task"] = {{"name", sub}, {"params", params}};
    return cfg;
}

void merge_config(json& base, const json& overlay, const std::string& path) {
    require(overlay.is_object(), "config" + (path.empty() ? std::string() : " at '" + path + "'") + " must be an object");
    for (const auto& [key, value] : overlay.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) throw InvalidInput("unknown config key '" + here + "'");
        json& slot = base[key];
        if (slot.is_object()) {
            merge_config(slot, value, here);
        } else if (slot.is_number()) {
            if (!numbers_compatible(slot, value)) throw InvalidInput("config key '" + here + "' expects a number");
            if (slot.is_number_float()) {
                slot = value.get<double>();
            } else if (slot.is_number_unsigned()) {
                slot = value.is_number_float() ? static_cast<std::uint64_t>(value.get<double>())
                                               : value.get<std::uint64_t>();
            } else {
                slot = value.is_number_float() ? static_cast<std::int64_t>(value.get<double>()) : value.get<std::int64_t>();
            }
        } else if (slot.is_array()) {
            if (!value.is_array()) throw InvalidInput("config key '" + here + "' expects an array");
            slot = value;
        } else if (slot.type() != value.type()) {
            throw InvalidInput("config key '" + here + "' expects a " + std::string(slot.type_name()));
        } else {
            slot = value;
        }
    }
}

void apply_override(json& config, const std::string& dotted, const std::string& text) {
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json overlay = value;
    std::string rest = dotted;
    std::vector<std::string> parts;
    std::size_t pos;
    while ((pos = rest.find('.')) != std::string::npos) {
        parts.push_back(rest.substr(0, pos));
        rest = rest.substr(pos + 1);
    }
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        require(!it->empty(), "malformed override '--" + dotted + "'");
        overlay = json{{*it, overlay}};
    }
    merge_config(config, overlay);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"lrukit: linear recurrent unit experiments"};
    app.allow_extras();
    std::string sub;
    std::string config_path;
    bool dense = false;
    app.add_option("subcommand", sub, "one of: spectrum gain scan-check bench-scan leakage impulse train-conv "
                                      "train-powers grad-check zoh-compare")
        ->required();
    app.add_option("--config", config_path, "JSON run config");
    app.add_flag("--dense", dense, "spectrum of a dense Glorot matrix instead of the ring");
    std::vector<std::string> alias_values(std::size(kAliases));
    for (std::size_t i = 0; i < std::size(kAliases); ++i) {
        app.add_option(kAliases[i].flag, alias_values[i], kAliases[i].help);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }

    json cfg;
    try {
        if (std::find(cli_subcommands().begin(), cli_subcommands().end(), sub) == cli_subcommands().end()) {
            throw InvalidInput("unknown subcommand '" + sub + "'");
        }
        cfg = default_run_config(sub);
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw InvalidInput("config file '" + config_path + "' not found");
            const json file = json::parse(in, nullptr, false);
            if (file.is_discarded()) throw InvalidInput("config file '" + config_path + "' is not valid JSON");
            if (file.is_object() && file.contains("task") && file["task"].is_object() && file["task"].contains("name") &&
                file["task"]["name"] != sub) {
                throw InvalidInput("config task.name '" + file["task"]["name"].dump() + "' does not match subcommand");
            }
            merge_config(cfg, file);
        }
        for (std::size_t i = 0; i < std::size(kAliases); ++i) {
            if (app.count(kAliases[i].flag) > 0) apply_override(cfg, kAliases[i].path, alias_values[i]);
        }
        if (dense) apply_override(cfg, "task.params.dense", "true");
        const auto extras = app.remaining();
        for (std::size_t i = 0; i < extras.size(); ++i) {
            const std::string& tok = extras[i];
            if (tok.rfind("--", 0) != 0 || tok.size() <= 2) throw InvalidInput("unexpected argument '" + tok + "'");
            const std::string body = tok.substr(2);
            const auto eq = body.find('=');
            if (eq != std::string::npos) {
                apply_override(cfg, body.substr(0, eq), body.substr(eq + 1));
            } else {
                if (i + 1 >= extras.size()) throw InvalidInput("missing value for '" + tok + "'");
                apply_override(cfg, body, extras[++i]);
            }
        }

        const std::size_t threads = cfg.at("threads").get<std::size_t>();
        if (threads > 0) set_num_threads(threads);
        optim_config(cfg).validate();
        ring_config(cfg).validate();

        const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
        const std::filesystem::path dir = cfg.at("output_dir").get<std::string>();
        const std::filesystem::path stem = dir / (sub + "-" + std::to_string(seed));
        const json& p = cfg.at("task").at("params");
        Rng rng(seed);

        SubResult result;
        if (sub == "spectrum") result = run_spectrum(cfg, p, rng);
        else if (sub == "gain") result = run_gain(cfg, p, rng);
        else if (sub == "scan-check") result = run_scan_check(cfg, p, rng);
        else if (sub == "bench-scan") result = run_bench_scan(cfg, p, rng);
        else if (sub == "leakage") result = run_leakage(cfg, p, rng);
        else if (sub == "impulse") result = run_impulse(cfg, p, rng);
        else if (sub == "train-conv") result = run_train_conv(cfg, p, rng, stem);
        else if (sub == "train-powers") result = run_train_powers(cfg, p, rng);
        else if (sub == "grad-check") result = run_grad_check(cfg, p, rng);
        else result = run_zoh_compare(cfg, p, rng);

        std::filesystem::path csv = stem, js = stem;
        csv += ".csv";
        js += ".json";
        write_text(csv, result.table.to_string());
        const json summary = {{"subcommand", sub},
                              {"seed", seed},
                              {"threads_used", num_threads()},
                              {"config", cfg},
                              {"csv", csv.string()},
                              {"csv_header", result.table.header},
                              {"metrics", result.metrics},
                              {"exit_code", result.exit_code}};
        write_text(js, summary.dump(2) + "\n");
        out << summary["metrics"].dump() << "\n";
        return result.exit_code;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const json::exception& e) {
        err << "error: invalid config: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace lrukit
