#pragma once

#include <functional>

#include "adamw.hpp"
#include "pcmdm.hpp"

namespace seqdiff {

// Training aborted on a non-finite loss; mapped to exit code 4 by the CLI.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainItem {
    Sequence y0;         // clean segment
    std::size_t label;
    Matrix past;         // h x d tail of the previous segment, 0 x d for first segments
};

struct TrainOptions {
    std::size_t steps = 2000;
    std::size_t batch = 16;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double p_drop = 0.1;  // condition-dropout probability for classifier-free guidance
    std::size_t log_every = 100;
};

// Denoising-objective training: noise a clean segment to a uniform timestep,
// predict it back, MSE, AdamW. Returns the per-step loss trace.
inline std::vector<double> train_pcmdm(
    PCMDM& model, const std::vector<TrainItem>& dataset, const NoiseSchedule& schedule,
    const TrainOptions& opt, GaussianRng& rng,
    const std::function<void(std::size_t, double)>& on_log = nullptr) {
    if (dataset.empty()) throw std::invalid_argument("train_pcmdm: empty dataset");
    const std::size_t T = schedule.steps();
    AdamWState state;
    AdamWConfig acfg;
    acfg.lr = opt.lr;
    acfg.weight_decay = opt.weight_decay;
    std::vector<double> losses;
    losses.reserve(opt.steps);

    for (std::size_t step = 0; step < opt.steps; ++step) {
        Tape tape;
        auto pids = model.leaf_params(tape);
        std::vector<Tape::NodeId> item_losses;
        for (std::size_t b = 0; b < opt.batch; ++b) {
            const TrainItem& item = dataset[rng.index(dataset.size())];
            const std::size_t t = 1 + rng.index(T);
            Sequence eps = gaussian_sample(rng, item.y0.rows(), item.y0.cols());
            Sequence y_t = q_sample(item.y0, t, eps, schedule);
            Condition cond = (rng.uniform() <= opt.p_drop)
                                 ? Condition::unconditional()
                                 : Condition::label(item.label);
            PastContext past = item.past.rows() > 0 ? PastContext(item.past) : PastContext::none();
            Tape::NodeId pred = model.forward(tape, pids, y_t, t, cond, past);
            item_losses.push_back(tape.mse(pred, tape.leaf(item.y0)));
        }
        Tape::NodeId loss = item_losses[0];
        for (std::size_t i = 1; i < item_losses.size(); ++i) loss = tape.add(loss, item_losses[i]);
        loss = tape.scale(loss, 1.0 / static_cast<double>(item_losses.size()));
        const double loss_val = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_val))
            throw NumericError("train_pcmdm: non-finite loss at step " + std::to_string(step));
        tape.backward(loss);
        std::vector<Matrix> grads;
        grads.reserve(pids.size());
        for (auto id : pids) {
            Matrix g = tape.grad(id);
            if (g.size() == 0) g = Matrix(tape.value(id).rows(), tape.value(id).cols());
            grads.push_back(std::move(g));
        }
        if (!state.step(model.params, grads, acfg))
            throw NumericError("train_pcmdm: non-finite gradient at step " + std::to_string(step));
        losses.push_back(loss_val);
        if (on_log && opt.log_every > 0 && (step % opt.log_every == 0 || step + 1 == opt.steps))
            on_log(step, loss_val);
    }
    return losses;
}

}  // namespace seqdiff
