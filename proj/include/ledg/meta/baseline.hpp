#pragma once

#include "ledg/meta/train.hpp"

namespace ledg {

// Static baseline: the same encoder with a single classifier on H (the
// classifier_graph head), trained on every training snapshot with gradients
// accumulated over time and one update per epoch. No disentanglement, no
// time regression, no adaptation.

inline Var static_predict(Tape& tape, const LedgModel& model, const SnapshotGraph& structure, const TaskBatch& batch,
                          const LedgVars& v, bool symmetrize = false) {
    const Var h = encode(tape, structure, v.gnn, model.config().encoder);
    if (batch.task != model.config().task) throw ContractError("static_predict: batch task differs from model task");
    if (!is_edge_task(batch.task))
        return softmax_rows(mlp(gather_rows(h, make_index(batch.nodes)), v.cls_graph));
    const Index src = make_index(batch.src), dst = make_index(batch.dst);
    auto probs = [&](const Index& a, const Index& b) {
        return softmax_rows(mlp(concat_cols(gather_rows(h, a), gather_rows(h, b)), v.cls_graph));
    };
    const Var fwd = probs(src, dst);
    return symmetrize ? scale(add(fwd, probs(dst, src)), 0.5) : fwd;
}

/// Snapshot whose structure encodes the batch at time t.
inline std::size_t structure_time(std::size_t t, StructureMode mode) {
    return mode == StructureMode::same_snapshot ? t : t - 1;
}

inline TrainResult train_static(const LedgModel& model, const DynamicGraphSequence& seq, ParameterSet params,
                                const TrainingConfig& cfg) {
    cfg.validate();
    const std::size_t first = cfg.structure == StructureMode::same_snapshot ? 1 : 2;
    const std::size_t last = seq.splits().train_end;
    if (first > last) throw ValidationError("not enough training snapshots for the static baseline");
    Optimizer opt(cfg.outer_optimizer, cfg.eta_out);
    TrainResult res;
    res.first_target = first;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<Tensor> total;
        EpochLog log;
        log.epoch = epoch;
        for (std::size_t t = first; t <= last; ++t) {
            const TaskBatch batch = make_task_batch(seq, t, cfg.train_negatives, derive_seed(cfg.seed, epoch, t));
            Tape tape;
            const auto vars = params.bind(tape);
            const LedgVars v = model.bind(params, vars);
            const Var loss =
                task_loss(static_predict(tape, model, seq.at(structure_time(t, cfg.structure)), batch, v), batch.labels);
            auto g = tape.grad(loss, vars);
            if (total.empty()) {
                total = std::move(g);
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) total[i] = kernels::add(total[i], g[i]);
            }
            log.task_loss += loss.value().item();
            ++log.episodes;
            res.episode_targets.push_back(t);
        }
        opt.step(params, total);
        log.task_loss /= static_cast<double>(log.episodes);
        log.objective = log.task_loss;
        res.epochs.push_back(log);
    }
    res.params = std::move(params);
    return res;
}

inline std::vector<MetricReport> evaluate_static(const LedgModel& model, const DynamicGraphSequence& seq,
                                                 const ParameterSet& params, const TrainingConfig& cfg,
                                                 std::span<const std::size_t> times) {
    const bool sym = is_edge_task(seq.task());
    return evaluate_with_scorer(seq, times, cfg.eval_negatives, cfg.seed, [&](std::size_t t, const TaskBatch& b) {
        Tape tape;
        const LedgVars v = model.bind(params, params.bind(tape));
        return static_predict(tape, model, seq.at(structure_time(t, cfg.structure)), b, v, sym).value();
    });
}

}  // namespace ledg
