#include "lrukit/training.hpp"

#include <cmath>
#include <numbers>

namespace lrukit {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_recurrent(const ParamView& v, const OptimConfig& cfg) {
    if (ends_with(v.name, "theta_log")) return cfg.theta_in_recurrent_group;
    if (ends_with(v.name, "lru.d") || v.name == "d") return cfg.d_in_recurrent_group;
    return v.group == ParamGroup::recurrent;
}

}  // namespace

void OptimConfig::validate() const {
    require(base_lr > 0.0 && std::isfinite(base_lr), "optim: base_lr must be positive");
    require(lr_factor > 0.0 && lr_factor <= 1.0, "optim: lr_factor must be in (0, 1]");
    require(weight_decay >= 0.0, "optim: weight_decay must be >= 0");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, "optim: betas must be in (0, 1)");
    require(eps > 0.0, "optim: eps must be positive");
    require(warmup_frac >= 0.0 && warmup_frac <= 1.0, "optim: warmup_frac must be in [0, 1]");
}

double lr_schedule(std::size_t step, const OptimConfig& cfg) {
    const std::size_t total = cfg.total_steps;
    const auto warmup = static_cast<std::size_t>(std::floor(cfg.warmup_frac * static_cast<double>(total)));
    if (step > total) step = total;
    const double span = cfg.base_lr - kScheduleFloor;
    if (warmup > 0 && step <= warmup) {
        return kScheduleFloor + span * static_cast<double>(step) / static_cast<double>(warmup);
    }
    if (total <= warmup) return cfg.base_lr;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return kScheduleFloor + span * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_update(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
                  const std::vector<ParamView>& m, const std::vector<ParamView>& v, std::size_t step,
                  const OptimConfig& cfg, double lr) {
    require(params.size() == grads.size() && params.size() == m.size() && params.size() == v.size(),
            "adamw: buffer lists differ in length");
    require(step >= 1, "adamw: step counter starts at 1");
    for (std::size_t t = 0; t < params.size(); ++t) {
        require(grads[t].values.size() == params[t].values.size() && m[t].values.size() == params[t].values.size() &&
                    v[t].values.size() == params[t].values.size(),
                "adamw: shape mismatch for " + params[t].name);
        for (double g : grads[t].values) {
            if (!std::isfinite(g)) throw NumericalError("adamw: non-finite gradient in " + grads[t].name);
        }
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        const bool recurrent = is_recurrent(params[t], cfg);
        const double group_lr = recurrent ? lr * cfg.lr_factor : lr;
        const double decay = recurrent ? 0.0 : lr * cfg.weight_decay;
        auto p = params[t].values;
        auto g = grads[t].values;
        auto mt = m[t].values;
        auto vt = v[t].values;
        for (std::size_t i = 0; i < p.size(); ++i) {
            mt[i] = cfg.beta1 * mt[i] + (1.0 - cfg.beta1) * g[i];
            vt[i] = cfg.beta2 * vt[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = mt[i] / bc1;
            const double v_hat = vt[i] / bc2;
            p[i] -= decay * p[i];
            p[i] -= group_lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

double task_loss(const ModelConfig& cfg, const ModelParams& params, const Task& task, bool train, Rng& rng,
                 ModelParams* grads) {
    ModelCache cache;
    const SequenceBatch pred = model_forward(cfg, params, task.inputs, train, rng, grads ? &cache : nullptr);
    const LossValue loss = task.labels.empty() ? mse_loss(pred, task.targets) : cross_entropy_loss(pred, task.labels);
    if (grads) *grads = model_backward(cfg, params, cache, loss.grad);
    return loss.value;
}

ExperimentReport train_loop(const ModelConfig& model_cfg, const Task& task, const OptimConfig& optim_cfg,
                            std::uint64_t seed, const TrainOptions& opts, ModelParams* final_params) {
    model_cfg.validate();
    optim_cfg.validate();
    Rng root(seed);
    Rng init_rng = root.split(0);
    TrainState<ModelParams> state(model_init(model_cfg, init_rng));

    ExperimentReport report;
    report.name = "train";
    report.table.header = {"step", "lr", "train_loss", "eval_loss", "max_abs_lambda"};

    auto evaluate = [&] {
        Rng eval_rng = root.split(1);
        return task_loss(model_cfg, state.params, task, false, eval_rng, nullptr);
    };

    double eval = evaluate();
    report.table.add_row({0, 0.0, nullptr, eval, max_abs_lambda(state.params)});
    double last_train = std::nan("");
    double max_lambda_seen = max_abs_lambda(state.params);

    for (std::size_t step = 0; step < opts.steps; ++step) {
        Rng step_rng = root.split(1000 + step);
        ModelParams grads;
        const double loss = task_loss(model_cfg, state.params, task, true, step_rng, &grads);
        if (!std::isfinite(loss)) {
            report.diverged = true;
            break;
        }
        const double lr = lr_schedule(step, optim_cfg);
        try {
            adamw_step(state, grads, optim_cfg, lr);
        } catch (const NumericalError&) {
            report.diverged = true;
            break;
        }
        last_train = loss;
        const double lam = max_abs_lambda(state.params);
        max_lambda_seen = std::max(max_lambda_seen, lam);
        const bool do_eval = opts.eval_every > 0 && ((step + 1) % opts.eval_every == 0 || step + 1 == opts.steps);
        nlohmann::json eval_cell = nullptr;
        if (do_eval) {
            eval = evaluate();
            eval_cell = eval;
        }
        report.table.add_row({step + 1, lr, loss, eval_cell, lam});
    }
    report.metrics["steps_completed"] = state.step;
    report.metrics["final_train_loss"] = std::isfinite(last_train) ? nlohmann::json(last_train) : nlohmann::json(nullptr);
    report.metrics["final_eval_loss"] = eval;
    report.metrics["max_abs_lambda"] = max_lambda_seen;
    report.metrics["diverged"] = report.diverged;
    if (final_params) *final_params = state.params;
    return report;
}

}  // namespace lrukit
