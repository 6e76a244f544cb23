#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ledg/eval/evaluate.hpp"
#include "ledg/meta/episode.hpp"

namespace ledg {

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    std::size_t episodes = 0;
    double objective = 0.0;  // mean over episodes
    double task_loss = 0.0;  // mean over episodes of the per-step mean
    double time_loss = 0.0;
    std::optional<double> val_primary;    // MAP or micro-F1
    std::optional<double> val_secondary;  // MRR for link prediction
};

struct TrainResult {
    ParameterSet params;
    std::vector<EpochLog> epochs;
    std::vector<std::size_t> episode_targets;  // target time of every episode, in execution order
    std::size_t first_target = 0;
    bool stopped_early = false;
};

using EpisodeSink = std::function<void(std::size_t epoch, const EpisodeReport&)>;

inline std::size_t check_training_window(const DynamicGraphSequence& seq, const TrainingConfig& cfg) {
    cfg.validate();
    const std::size_t train_len = seq.splits().train_end;
    if (cfg.window_size >= train_len)
        throw ValidationError("window_size " + std::to_string(cfg.window_size) + " must be smaller than the " +
                              std::to_string(train_len) + " training snapshots");
    const std::size_t first = first_target_time(cfg.window_size, cfg.structure);
    if (first > train_len) throw ValidationError("no training target time has a complete window");
    return first;
}

/// Validation metrics on the val split: (MAP, MRR) or (micro-F1, none).
inline std::pair<double, std::optional<double>> validation_metrics(const LedgModel& model,
                                                                   const DynamicGraphSequence& seq,
                                                                   const ParameterSet& params,
                                                                   const TrainingConfig& cfg) {
    const auto times = split_times(seq, SplitPart::val);
    const auto reports = evaluate_sequence(model, seq, params, cfg, times);
    if (seq.task() == TaskKind::link_prediction)
        return {find_report(reports, "map").value, find_report(reports, "mrr").value};
    return {find_report(reports, "micro_f1").value, std::nullopt};
}

/// Episodic meta-training. Each epoch visits every training target time in
/// temporal order (from the earliest time with a complete window up to
/// train_end), running inner adaptation and one outer update per target.
inline TrainResult train(const LedgModel& model, const DynamicGraphSequence& seq, ParameterSet params,
                         const TrainingConfig& cfg, const EpisodeSink& sink = {}) {
    const std::size_t first = check_training_window(seq, cfg);
    const std::size_t last = seq.splits().train_end;
    Optimizer opt(cfg.outer_optimizer, cfg.eta_out);
    TrainResult res;
    res.first_target = first;
    std::optional<double> best;
    std::size_t since_best = 0;
    ParameterSet best_params = params;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochLog log;
        log.epoch = epoch;
        for (std::size_t t = first; t <= last; ++t) {
            const EpisodeWindow win = make_window(seq, t, cfg.window_size, cfg.structure);
            const TaskBatch batch = make_task_batch(seq, t, cfg.train_negatives, derive_seed(cfg.seed, epoch, t));
            const EpisodeReport rep = outer_step(model, seq, params, opt, win, batch, cfg);
            res.episode_targets.push_back(t);
            ++log.episodes;
            log.objective += rep.objective;
            log.task_loss += rep.task_loss / static_cast<double>(cfg.window_size);
            log.time_loss += rep.time_loss / static_cast<double>(cfg.window_size);
            if (sink) sink(epoch, rep);
        }
        const auto n = static_cast<double>(log.episodes);
        log.objective /= n;
        log.task_loss /= n;
        log.time_loss /= n;
        if (cfg.validate_each_epoch || cfg.early_stop) {
            auto [primary, secondary] = validation_metrics(model, seq, params, cfg);
            log.val_primary = primary;
            log.val_secondary = secondary;
        }
        res.epochs.push_back(log);
        if (cfg.early_stop) {
            if (!best || *log.val_primary > *best) {
                best = log.val_primary;
                best_params = params;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                res.stopped_early = true;
                break;
            }
        }
    }
    res.params = cfg.early_stop && best ? std::move(best_params) : std::move(params);
    return res;
}

}  // namespace ledg
