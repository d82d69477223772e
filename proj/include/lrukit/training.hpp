#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lrukit/gradients.hpp"
#include "lrukit/model.hpp"
#include "lrukit/report.hpp"

namespace lrukit {

struct OptimConfig {
    double base_lr = 1e-3;
    // Learning-rate multiplier for the recurrent group.
    double lr_factor = 0.5;
    double weight_decay = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double warmup_frac = 0.1;
    std::size_t total_steps = 1000;
    // Group membership for the tensors the recurrent rule leaves ambiguous.
    bool theta_in_recurrent_group = true;
    bool d_in_recurrent_group = false;

    void validate() const;
};

constexpr double kScheduleFloor = 1e-7;

/// Linear warmup from 1e-7 to base_lr over the first warmup_frac of training, then
/// cosine annealing back down to 1e-7 at total_steps.
double lr_schedule(std::size_t step, const OptimConfig& cfg);

/// Parameters with Adam moment buffers of the same shape.
template <class Params>
struct TrainState {
    Params params;
    Params m;
    Params v;
    std::size_t step = 0;

    explicit TrainState(Params p) : params(std::move(p)), m(zeros_like(params)), v(zeros_like(params)) {}
};

/// One AdamW update over matching view lists. Recurrent-group tensors use lr * lr_factor
/// and no weight decay; the rest use lr and decoupled decay p -= lr * wd * p.
/// Throws NumericalError (and leaves params untouched) on a non-finite gradient.
void adamw_update(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
                  const std::vector<ParamView>& m, const std::vector<ParamView>& v, std::size_t step,
                  const OptimConfig& cfg, double lr);

template <class Params>
void adamw_step(TrainState<Params>& state, Params& grads, const OptimConfig& cfg, double lr) {
    adamw_update(param_views(state.params), param_views(grads), param_views(state.m), param_views(state.v),
                 state.step + 1, cfg, lr);
    ++state.step;
}

/// Full-batch supervised task for the deep model.
struct Task {
    std::string name;
    SequenceBatch inputs;
    SequenceBatch targets;  // regression targets, shaped like the model output
    std::vector<std::size_t> labels;  // classification labels; used instead of targets when non-empty
};

struct TrainOptions {
    std::size_t steps = 100;
    std::size_t eval_every = 10;
};

/// Trains with AdamW under lr_schedule. Deterministic given the seed. Logs per-step loss
/// and max |lambda|; evaluation (train=false) runs every eval_every steps and at the end.
/// A non-finite loss stops training and marks the report diverged.
ExperimentReport train_loop(const ModelConfig& model_cfg, const Task& task, const OptimConfig& optim_cfg,
                            std::uint64_t seed, const TrainOptions& opts, ModelParams* final_params = nullptr);

/// Loss and gradient of the model on a task (dropout active when train is true).
double task_loss(const ModelConfig& cfg, const ModelParams& params, const Task& task, bool train, Rng& rng,
                 ModelParams* grads);

}  // namespace lrukit
