#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "ledg/graphdata/snapshot.hpp"

namespace ledg {

struct SbmParams {
    std::size_t num_nodes = 100;
    std::size_t num_communities = 2;
    double intra_p = 0.2;
    double inter_p = 0.02;
    double drift_rate = 0.05;
    std::size_t num_snapshots = 20;
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
    double val_fraction = 0.1;

    void validate() const {
        if (num_nodes < 2) throw ValidationError("sbm: need at least 2 nodes");
        if (num_communities < 1 || num_communities > num_nodes)
            throw ValidationError("sbm: community count must lie in [1, num_nodes]");
        if (!(inter_p >= 0 && inter_p < intra_p && intra_p <= 1))
            throw ValidationError("sbm: require 0 <= inter_p < intra_p <= 1");
        if (!(drift_rate >= 0 && drift_rate <= 1)) throw ValidationError("sbm: drift_rate must lie in [0, 1]");
        if (num_snapshots < 1) throw ValidationError("sbm: need at least one snapshot");
    }
};

/// Stochastic block model whose community assignment drifts. Communities start
/// balanced (a seeded random permutation dealt round-robin). Before every
/// snapshot after the first, floor(drift_rate * N) distinct nodes move to a
/// uniformly chosen different community. Each node's current community is
/// stored as its node label. Link-prediction task, chronological splits.
inline DynamicGraphSequence generate_drifting_sbm(const SbmParams& p) {
    p.validate();
    std::mt19937_64 rng(p.seed);
    const std::size_t n = p.num_nodes, k = p.num_communities;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> community(n);
    for (std::size_t i = 0; i < n; ++i) community[order[i]] = i % k;

    const auto movers = static_cast<std::size_t>(std::floor(p.drift_rate * static_cast<double>(n)));
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    std::vector<std::vector<Edge>> edge_sets;
    std::vector<std::vector<int>> labels;
    for (std::size_t t = 0; t < p.num_snapshots; ++t) {
        if (t > 0 && k > 1 && movers > 0) {
            std::vector<std::size_t> pool(n);
            std::iota(pool.begin(), pool.end(), 0);
            for (std::size_t i = 0; i < movers; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(pool[i], pool[pick(rng)]);
                std::uniform_int_distribution<std::size_t> other(0, k - 2);
                std::size_t c = other(rng);
                if (c >= community[pool[i]]) ++c;
                community[pool[i]] = c;
            }
        }
        std::vector<Edge> edges;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v) {
                const double prob = community[u] == community[v] ? p.intra_p : p.inter_p;
                if (coin(rng) < prob) edges.push_back({u, v, 1.0, -1});
            }
        edge_sets.push_back(std::move(edges));
        labels.emplace_back(community.begin(), community.end());
    }

    std::size_t maxdeg = 0;
    for (const auto& e : edge_sets) maxdeg = std::max(maxdeg, max_degree(e, n));
    const std::size_t width = degree_feature_width(maxdeg);

    std::vector<SnapshotGraph> snaps;
    for (std::size_t t = 0; t < edge_sets.size(); ++t) {
        Tensor x = degree_bucket_features(edge_sets[t], n, width);
        snaps.emplace_back(t + 1, n, std::move(x), std::move(edge_sets[t]), std::move(labels[t]));
    }
    const Splits splits = chronological_splits(snaps.size(), p.train_fraction, p.val_fraction);
    return DynamicGraphSequence(std::move(snaps), splits, TaskKind::link_prediction, 2);
}

}  // namespace ledg
