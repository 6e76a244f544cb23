#pragma once

#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ledg/eval/metrics.hpp"
#include "ledg/meta/episode.hpp"

namespace ledg {

/// One metric over a set of evaluation snapshots.
struct MetricReport {
    std::string metric;
    std::vector<std::pair<std::size_t, double>> per_snapshot;  // (time, value)
    double value = 0.0;
    std::string aggregation = "unweighted_mean";
};

enum class SplitPart { train, val, test };

inline std::vector<std::size_t> split_times(const DynamicGraphSequence& seq, SplitPart part) {
    const Splits& s = seq.splits();
    std::size_t lo = 1, hi = s.train_end;
    if (part == SplitPart::val) lo = s.train_end + 1, hi = s.val_end;
    if (part == SplitPart::test) lo = s.val_end + 1, hi = s.test_end;
    std::vector<std::size_t> t;
    for (std::size_t i = lo; i <= hi; ++i) t.push_back(i);
    return t;
}

/// Probabilities (batch rows x classes) for the batch at time t.
using Scorer = std::function<Tensor(std::size_t t, const TaskBatch& batch)>;

/// One query per source node; candidate score is the edge-class probability.
inline std::vector<RankedQuery> link_queries(const TaskBatch& batch, const Tensor& probs) {
    if (probs.rows() != batch.size() || probs.cols() < 2)
        throw ContractError("link_queries: probabilities do not match the batch");
    std::map<std::size_t, RankedQuery> by_src;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto& q = by_src[batch.src[i]];
        q.query = batch.src[i];
        q.candidates.push_back({batch.dst[i], probs(i, 1), batch.labels[i] == 1});
    }
    std::vector<RankedQuery> out;
    for (auto& [_, q] : by_src) out.push_back(std::move(q));
    return out;
}

inline std::vector<std::size_t> argmax_rows(const Tensor& probs) {
    std::vector<std::size_t> out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols(); ++c)
            if (probs(i, c) > probs(i, best)) best = c;
        out[i] = best;
    }
    return out;
}

/// Seed of the evaluation batch at time t; identical for every scorer so that
/// methods are ranked on the same candidates.
inline std::uint64_t eval_batch_seed(std::uint64_t seed, std::size_t t) { return derive_seed(seed, 0xe7a1, t); }

/// Applies `score` at every time in `times` and aggregates MAP/MRR (link
/// prediction) or micro-F1 (classification) by unweighted mean over snapshots.
inline std::vector<MetricReport> evaluate_with_scorer(const DynamicGraphSequence& seq,
                                                      std::span<const std::size_t> times,
                                                      const NegativeSampling& negatives, std::uint64_t seed,
                                                      const Scorer& score) {
    if (times.empty()) throw ContractError("no evaluation times");
    const bool link = seq.task() == TaskKind::link_prediction;
    std::vector<MetricReport> reports;
    if (link) {
        reports = {{"map", {}, 0.0, "unweighted_mean"}, {"mrr", {}, 0.0, "unweighted_mean"}};
    } else {
        reports = {{"micro_f1", {}, 0.0, "unweighted_mean"}};
    }
    for (std::size_t t : times) {
        const TaskBatch batch = make_task_batch(seq, t, negatives, eval_batch_seed(seed, t));
        const Tensor probs = score(t, batch);
        if (link) {
            const auto queries = link_queries(batch, probs);
            reports[0].per_snapshot.emplace_back(t, mean_average_precision(queries));
            reports[1].per_snapshot.emplace_back(t, mean_reciprocal_rank(queries));
        } else {
            const auto pred = argmax_rows(probs);
            reports[0].per_snapshot.emplace_back(t, micro_f1(pred, batch.labels, seq.num_classes()));
        }
    }
    for (auto& r : reports) {
        double s = 0.0;
        for (const auto& [_, v] : r.per_snapshot) s += v;
        r.value = s / static_cast<double>(r.per_snapshot.size());
    }
    return reports;
}

/// LEDG evaluation: adapt on each evaluation time's window, then score. Edge
/// scores average both endpoint orders.
inline std::vector<MetricReport> evaluate_sequence(const LedgModel& model, const DynamicGraphSequence& seq,
                                                   const ParameterSet& params, const TrainingConfig& cfg,
                                                   std::span<const std::size_t> times) {
    const bool sym = is_edge_task(seq.task());
    return evaluate_with_scorer(seq, times, cfg.eval_negatives, cfg.seed, [&](std::size_t t, const TaskBatch& b) {
        return adapt_and_predict(model, seq, params, t, b, cfg, sym).probabilities;
    });
}

/// Scorer that knows the labels: probability 1 on the true class.
inline Scorer oracle_scorer(std::size_t num_classes) {
    return [num_classes](std::size_t, const TaskBatch& b) {
        Tensor p = Tensor::zeros(b.size(), num_classes);
        for (std::size_t i = 0; i < b.size(); ++i) p(i, b.labels[i]) = 1.0;
        return p;
    };
}

inline const MetricReport& find_report(const std::vector<MetricReport>& reports, const std::string& metric) {
    for (const auto& r : reports)
        if (r.metric == metric) return r;
    throw ContractError("no metric '" + metric + "' in report");
}

/// CSV with header `metric,snapshot_time,value`, one row per snapshot and an
/// `aggregate` row per metric. A non-empty fingerprint adds a
/// `config_fingerprint` column.
inline void write_reports_csv(std::ostream& out, const std::vector<MetricReport>& reports,
                              const std::string& fingerprint = "") {
    const bool fp = !fingerprint.empty();
    out << "metric,snapshot_time,value" << (fp ? ",config_fingerprint" : "") << '\n';
    char buf[32];
    for (const auto& r : reports) {
        for (const auto& [t, v] : r.per_snapshot) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << r.metric << ',' << t << ',' << buf << (fp ? "," + fingerprint : "") << '\n';
        }
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        out << r.metric << ",aggregate," << buf << (fp ? "," + fingerprint : "") << '\n';
    }
}

}  // namespace ledg
