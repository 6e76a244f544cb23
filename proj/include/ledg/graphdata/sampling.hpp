#pragma once

#include <map>
#include <random>
#include <vector>

#include "ledg/graphdata/snapshot.hpp"

namespace ledg {

/// Labelled items of one snapshot. Edge tasks fill src/dst, node tasks fill nodes.
struct TaskBatch {
    std::size_t time = 0;
    TaskKind task = TaskKind::link_prediction;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<std::size_t> nodes;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

enum class SampleMode { train, eval };

/// What to do when a source node has fewer non-neighbours than requested.
enum class Shortfall { error, use_full_pool };

struct NegativeSampling {
    std::size_t ratio = 1;
    Shortfall shortfall = Shortfall::error;

    static NegativeSampling defaults(SampleMode mode) {
        return mode == SampleMode::train ? NegativeSampling{1, Shortfall::error} : NegativeSampling{100, Shortfall::error};
    }
};

/// Positives are the snapshot's edges (label 1). For every source node u, the
/// negatives are `ratio * positives(u)` distinct non-neighbours of u drawn
/// uniformly (label 0). A ratio of 0 means "every non-neighbour".
inline TaskBatch sample_link_prediction_batch(const SnapshotGraph& g, const NegativeSampling& ns, std::uint64_t seed) {
    if (g.edges().empty()) throw ContractError("link prediction batch needs a snapshot with at least one edge");
    const std::size_t n = g.num_nodes();
    TaskBatch b;
    b.time = g.time_index();
    b.task = TaskKind::link_prediction;
    std::map<std::size_t, std::size_t> per_source;
    for (const Edge& e : g.edges()) {
        b.src.push_back(e.src);
        b.dst.push_back(e.dst);
        b.labels.push_back(1);
        ++per_source[e.src];
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pool;
    for (const auto& [u, count] : per_source) {
        pool.clear();
        for (std::size_t v = 0; v < n; ++v)
            if (v != u && !g.has_edge(u, v)) pool.push_back(v);
        if (pool.empty())
            throw ValidationError("node " + std::to_string(u) +
                                  " is adjacent to every other node; no negatives exist (graph too dense)");
        std::size_t want = ns.ratio == 0 ? pool.size() : ns.ratio * count;
        if (want > pool.size()) {
            if (ns.shortfall == Shortfall::error)
                throw ValidationError("graph too dense: node " + std::to_string(u) + " needs " + std::to_string(want) +
                                      " negatives but has " + std::to_string(pool.size()) +
                                      " non-neighbours; use a lower negative ratio");
            want = pool.size();
        }
        for (std::size_t i = 0; i < want; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            b.src.push_back(u);
            b.dst.push_back(pool[i]);
            b.labels.push_back(0);
        }
    }
    return b;
}

inline TaskBatch edge_classification_batch(const SnapshotGraph& g, std::size_t num_classes) {
    TaskBatch b;
    b.time = g.time_index();
    b.task = TaskKind::edge_classification;
    for (const Edge& e : g.edges()) {
        if (e.label < 0) continue;
        if (static_cast<std::size_t>(e.label) >= num_classes)
            throw ValidationError("edge label " + std::to_string(e.label) + " outside class range");
        b.src.push_back(e.src);
        b.dst.push_back(e.dst);
        b.labels.push_back(static_cast<std::size_t>(e.label));
    }
    if (b.labels.empty()) throw ContractError("snapshot " + std::to_string(g.time_index()) + " has no labelled edges");
    return b;
}

inline TaskBatch node_classification_batch(const SnapshotGraph& g, std::size_t num_classes) {
    TaskBatch b;
    b.time = g.time_index();
    b.task = TaskKind::node_classification;
    const auto& labels = g.node_labels();
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] < 0) continue;
        if (static_cast<std::size_t>(labels[v]) >= num_classes)
            throw ValidationError("node label " + std::to_string(labels[v]) + " outside class range");
        b.nodes.push_back(v);
        b.labels.push_back(static_cast<std::size_t>(labels[v]));
    }
    if (b.labels.empty()) throw ContractError("snapshot " + std::to_string(g.time_index()) + " has no labelled nodes");
    return b;
}

/// Batch for the sequence's task at 1-based time t.
inline TaskBatch make_task_batch(const DynamicGraphSequence& seq, std::size_t t, const NegativeSampling& ns,
                                 std::uint64_t seed) {
    const SnapshotGraph& g = seq.at(t);
    switch (seq.task()) {
        case TaskKind::link_prediction: return sample_link_prediction_batch(g, ns, seed);
        case TaskKind::edge_classification: return edge_classification_batch(g, seq.num_classes());
        case TaskKind::node_classification: return node_classification_batch(g, seq.num_classes());
    }
    throw ContractError("unknown task");
}

}  // namespace ledg
