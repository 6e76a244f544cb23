#pragma once

#include <vector>

#include "ledg/meta/config.hpp"
#include "ledg/model/ledg_model.hpp"

namespace ledg {

/// Target time t and the w snapshots the inner loop adapts on. Relative index
/// i = 1..w corresponds to times[i - 1].
struct EpisodeWindow {
    std::size_t target = 0;
    std::size_t structure = 0;  // snapshot that supplies the target's message-passing structure
    std::vector<std::size_t> times;

    std::size_t size() const noexcept { return times.size(); }
};

/// Window for target time t (1-based). same_snapshot: t-w+i; previous_snapshot: t-1-w+i.
inline EpisodeWindow make_window(const DynamicGraphSequence& seq, std::size_t t, std::size_t w, StructureMode mode) {
    if (w < 1) throw ContractError("window size must be >= 1");
    if (t < 1 || t > seq.size()) throw ContractError("target time " + std::to_string(t) + " outside the sequence");
    const std::size_t last = mode == StructureMode::same_snapshot ? t : t - 1;
    if (last < w)
        throw ContractError("window of size " + std::to_string(w) + " ending at time " + std::to_string(last) +
                            " would extend before time 1");
    EpisodeWindow win;
    win.target = t;
    win.structure = last;
    for (std::size_t i = 1; i <= w; ++i) win.times.push_back(last - w + i);
    return win;
}

/// Earliest target time for which the whole window exists.
inline std::size_t first_target_time(std::size_t w, StructureMode mode) {
    return mode == StructureMode::same_snapshot ? w : w + 1;
}

struct InnerResult {
    std::vector<std::vector<Var>> states;  // w adapted handle sets, one per inner step
    std::vector<double> losses;            // time-regression loss at each step (before the update)
};

/// Sequential SGD on the time-regression loss over the window: step i encodes
/// snapshot times[i-1], regresses towards i, and moves only gnn and adapter
/// parameters by -eta_in * grad. In exact mode the updates are recorded on the
/// tape, so later gradients flow through them.
inline InnerResult inner_adapt(Tape& tape, const LedgModel& model, const DynamicGraphSequence& seq,
                               const EpisodeWindow& win, const ParameterSet& layout, std::vector<Var> vars,
                               const TrainingConfig& cfg) {
    if (win.size() != cfg.window_size)
        throw ContractError("inner_adapt: window holds " + std::to_string(win.size()) + " snapshots, expected " +
                            std::to_string(cfg.window_size));
    static constexpr Group adaptable[] = {Group::gnn, Group::adapter};
    const std::vector<std::size_t> idx = layout.indices(adaptable);
    InnerResult res;
    for (std::size_t i = 1; i <= win.size(); ++i) {
        const LedgVars v = model.bind(layout, vars);
        const EmbeddingBundle b = model.embed(tape, seq.at(win.times[i - 1]), v);
        const Var loss = time_loss(b.h_time, v.predictor, static_cast<double>(i));
        res.losses.push_back(loss.value().item());
        std::vector<Var> wrt;
        for (std::size_t k : idx) wrt.push_back(vars[k]);
        const std::vector<Var> g = tape.grad_for_update(loss, wrt);
        for (std::size_t k = 0; k < idx.size(); ++k) vars[idx[k]] = sub(vars[idx[k]], scale(g[k], cfg.eta_in));
        res.states.push_back(vars);
    }
    return res;
}

struct OuterObjective {
    Var total;
    double task_sum = 0.0;
    double time_sum = 0.0;
};

/// sum_i [ L_task(target; theta_i, phi_i, psi) + lambda * L_time(target; theta_i, phi_i) ]
/// with the target's regression target equal to w.
inline OuterObjective outer_objective(Tape& tape, const LedgModel& model, const DynamicGraphSequence& seq,
                                      const EpisodeWindow& win, const std::vector<std::vector<Var>>& states,
                                      const TaskBatch& target_batch, const ParameterSet& layout,
                                      const TrainingConfig& cfg) {
    if (states.size() != win.size()) throw ContractError("outer step needs one adapted state per window step");
    if (target_batch.size() == 0) throw ContractError("outer step needs a non-empty target batch");
    const SnapshotGraph& structure = seq.at(win.structure);
    OuterObjective obj;
    for (const auto& state : states) {
        const auto l = model.joint_loss(tape, structure, target_batch, model.bind(layout, state),
                                        static_cast<double>(win.size()), cfg.lambda);
        obj.task_sum += l.task.value().item();
        obj.time_sum += l.time.value().item();
        obj.total = obj.total.valid() ? add(obj.total, l.total) : l.total;
    }
    return obj;
}

struct EpisodeReport {
    std::size_t target = 0;
    std::vector<double> inner_losses;
    double task_loss = 0.0;  // summed over inner steps
    double time_loss = 0.0;  // summed over inner steps
    double objective = 0.0;
    std::vector<std::pair<Group, double>> grad_norms;
};

/// Gradient of the outer objective with respect to the pre-episode parameters.
struct MetaGradient {
    std::vector<Tensor> grads;
    EpisodeReport report;
};

inline MetaGradient meta_gradient(const LedgModel& model, const DynamicGraphSequence& seq, const ParameterSet& params,
                                  const EpisodeWindow& win, const TaskBatch& target_batch, const TrainingConfig& cfg) {
    Tape tape(cfg.gradient_mode);
    const std::vector<Var> base = params.bind(tape);
    InnerResult inner = inner_adapt(tape, model, seq, win, params, base, cfg);
    const OuterObjective obj = outer_objective(tape, model, seq, win, inner.states, target_batch, params, cfg);
    MetaGradient out;
    out.grads = tape.grad(obj.total, base);
    out.report.target = win.target;
    out.report.inner_losses = std::move(inner.losses);
    out.report.task_loss = obj.task_sum;
    out.report.time_loss = obj.time_sum;
    out.report.objective = obj.total.value().item();
    for (Group g : all_groups) {
        double s = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params.entry(i).group == g)
                for (double x : out.grads[i].data()) s += x * x;
        out.report.grad_norms.emplace_back(g, std::sqrt(s));
    }
    return out;
}

/// One episode: inner adaptation, outer objective, one optimizer step on all groups.
inline EpisodeReport outer_step(const LedgModel& model, const DynamicGraphSequence& seq, ParameterSet& params,
                                Optimizer& opt, const EpisodeWindow& win, const TaskBatch& target_batch,
                                const TrainingConfig& cfg) {
    MetaGradient mg = meta_gradient(model, seq, params, win, target_batch, cfg);
    opt.step(params, mg.grads);
    return std::move(mg.report);
}

/// Embeddings (as values) and class probabilities after test-time adaptation.
struct AdaptedPrediction {
    Tensor h;
    Tensor s;
    Tensor h_time;
    Tensor h_graph;
    Tensor probabilities;
};

/// Clones the parameters, adapts gnn/adapter by time regression on the window
/// that ends at (or just before) t, then predicts t's batch with the adapted
/// state. No labels of t are used for adaptation; `params` is left untouched.
inline AdaptedPrediction adapt_and_predict(const LedgModel& model, const DynamicGraphSequence& seq,
                                           const ParameterSet& params, std::size_t t, const TaskBatch& batch,
                                           const TrainingConfig& cfg, bool symmetrize = false) {
    if (t <= seq.splits().train_end)
        throw ContractError("adapt_and_predict: time " + std::to_string(t) + " is a training time");
    const EpisodeWindow win = make_window(seq, t, cfg.window_size, cfg.structure);
    const ParameterSet clone = params;
    Tape tape(GradMode::first_order);
    InnerResult inner = inner_adapt(tape, model, seq, win, clone, clone.bind(tape), cfg);
    const LedgVars v = model.bind(clone, inner.states.back());
    const EmbeddingBundle b = model.embed(tape, seq.at(win.structure), v);
    const Var p = task_predict(b, v.cls_time, v.cls_graph, batch, model.config().task, symmetrize);
    return {b.h.value(), b.s.value(), b.h_time.value(), b.h_graph.value(), p.value()};
}

/// Forward pass with the given parameters and no adaptation.
inline Tensor predict_direct(const LedgModel& model, const SnapshotGraph& structure, const ParameterSet& params,
                             const TaskBatch& batch, bool symmetrize = false) {
    Tape tape;
    const LedgVars v = model.bind(params, params.bind(tape));
    const EmbeddingBundle b = model.embed(tape, structure, v);
    return task_predict(b, v.cls_time, v.cls_graph, batch, model.config().task, symmetrize).value();
}

}  // namespace ledg
