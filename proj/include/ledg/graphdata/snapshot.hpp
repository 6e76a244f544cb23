#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ledg/numerics/tensor.hpp"

namespace ledg {

enum class TaskKind { link_prediction, edge_classification, node_classification };

inline std::string_view to_string(TaskKind t) {
    switch (t) {
        case TaskKind::link_prediction: return "link_prediction";
        case TaskKind::edge_classification: return "edge_classification";
        case TaskKind::node_classification: return "node_classification";
    }
    return "?";
}

inline TaskKind task_from_string(std::string_view s) {
    if (s == "link_prediction") return TaskKind::link_prediction;
    if (s == "edge_classification") return TaskKind::edge_classification;
    if (s == "node_classification") return TaskKind::node_classification;
    throw ValidationError("unknown task '" + std::string(s) + "'");
}

inline bool is_edge_task(TaskKind t) { return t != TaskKind::node_classification; }

/// Undirected edge. `src`/`dst` keep the orientation the edge was first seen with.
struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double weight = 1.0;
    int label = -1;

    friend bool operator==(const Edge&, const Edge&) = default;
};

inline std::uint64_t undirected_key(std::size_t u, std::size_t v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

inline void validate_edges(std::span<const Edge> edges, std::size_t num_nodes) {
    for (const Edge& e : edges) {
        if (e.src >= num_nodes || e.dst >= num_nodes)
            throw ValidationError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                                  ") references a node outside [0, " + std::to_string(num_nodes) + ")");
    }
}

/// D^-1/2 (A + I) D^-1/2 over the binary, symmetrized adjacency of `edges`.
inline Tensor normalize_adjacency(std::span<const Edge> edges, std::size_t num_nodes) {
    validate_edges(edges, num_nodes);
    Tensor a = Tensor::identity(num_nodes);
    for (const Edge& e : edges) {
        if (e.src == e.dst) continue;
        a(e.src, e.dst) = 1.0;
        a(e.dst, e.src) = 1.0;
    }
    std::vector<double> deg(num_nodes, 0.0);
    for (std::size_t i = 0; i < num_nodes; ++i)
        for (std::size_t j = 0; j < num_nodes; ++j) deg[i] += a(i, j);
    for (std::size_t i = 0; i < num_nodes; ++i)
        for (std::size_t j = 0; j < num_nodes; ++j)
            if (a(i, j) != 0.0) a(i, j) = 1.0 / std::sqrt(deg[i] * deg[j]);
    return a;
}

/// 0/1 mask of A + I, used to restrict attention to neighborhoods.
inline Tensor neighborhood_mask(std::span<const Edge> edges, std::size_t num_nodes) {
    Tensor m = Tensor::identity(num_nodes);
    for (const Edge& e : edges) {
        m(e.src, e.dst) = 1.0;
        m(e.dst, e.src) = 1.0;
    }
    return m;
}

/// Bucket of a positive degree: 1 -> 0, 2..3 -> 1, 4..7 -> 2, ...
inline std::size_t degree_bucket(std::size_t degree) {
    return static_cast<std::size_t>(std::bit_width(degree)) - 1;
}

inline std::size_t degree_feature_width(std::size_t max_degree) {
    return max_degree == 0 ? 1 : degree_bucket(max_degree) + 1;
}

/// One-hot of the log2 degree bucket per node. Nodes without edges in this
/// snapshot are absent and get an all-zero row.
inline Tensor degree_bucket_features(std::span<const Edge> edges, std::size_t num_nodes, std::size_t width) {
    std::vector<std::size_t> deg(num_nodes, 0);
    for (const Edge& e : edges) {
        ++deg[e.src];
        ++deg[e.dst];
    }
    Tensor x = Tensor::zeros(num_nodes, width);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        if (deg[v] == 0) continue;
        const std::size_t b = degree_bucket(deg[v]);
        if (b >= width) throw ValidationError("degree bucket exceeds feature width");
        x(v, b) = 1.0;
    }
    return x;
}

inline std::size_t max_degree(std::span<const Edge> edges, std::size_t num_nodes) {
    std::vector<std::size_t> deg(num_nodes, 0);
    for (const Edge& e : edges) {
        ++deg[e.src];
        ++deg[e.dst];
    }
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

/// One time step of a dynamic graph over a fixed node universe. Immutable
/// after construction; the normalized adjacency is computed once.
class SnapshotGraph {
public:
    SnapshotGraph(std::size_t time_index, std::size_t num_nodes, Tensor features, std::vector<Edge> edges,
                  std::vector<int> node_labels = {})
        : time_(time_index), num_nodes_(num_nodes), features_(std::move(features)), edges_(std::move(edges)),
          node_labels_(std::move(node_labels)) {
        if (features_.rows() != num_nodes_)
            throw ShapeError("snapshot features have " + std::to_string(features_.rows()) + " rows for " +
                             std::to_string(num_nodes_) + " nodes");
        validate_edges(edges_, num_nodes_);
        std::unordered_set<std::uint64_t> seen;
        for (const Edge& e : edges_) {
            if (e.src == e.dst)
                throw ValidationError("self-loop on node " + std::to_string(e.src) + " (self-loops are implicit)");
            if (!seen.insert(undirected_key(e.src, e.dst)).second)
                throw ValidationError("duplicate edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) + ")");
        }
        if (!node_labels_.empty() && node_labels_.size() != num_nodes_)
            throw ValidationError("node label vector length differs from node count");
        norm_adj_ = std::make_shared<const Tensor>(normalize_adjacency(edges_, num_nodes_));
        mask_ = std::make_shared<const Tensor>(neighborhood_mask(edges_, num_nodes_));
    }

    std::size_t time_index() const noexcept { return time_; }
    std::size_t num_nodes() const noexcept { return num_nodes_; }
    std::size_t feature_dim() const { return features_.cols(); }
    const Tensor& features() const noexcept { return features_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<int>& node_labels() const noexcept { return node_labels_; }
    const Tensor& normalized_adjacency() const noexcept { return *norm_adj_; }
    const std::shared_ptr<const Tensor>& normalized_adjacency_ptr() const noexcept { return norm_adj_; }
    const std::shared_ptr<const Tensor>& neighborhood_mask_ptr() const noexcept { return mask_; }

    bool has_edge(std::size_t u, std::size_t v) const { return (*mask_)(u, v) != 0.0 && u != v; }

private:
    std::size_t time_;
    std::size_t num_nodes_;
    Tensor features_;
    std::vector<Edge> edges_;
    std::vector<int> node_labels_;
    std::shared_ptr<const Tensor> norm_adj_;
    std::shared_ptr<const Tensor> mask_;
};

/// Chronological split, as 1-based inclusive end times of train, val and test.
struct Splits {
    std::size_t train_end = 0;
    std::size_t val_end = 0;
    std::size_t test_end = 0;

    friend bool operator==(const Splits&, const Splits&) = default;
};

/// floor(train_frac*T) training snapshots, floor(val_frac*T) validation, the rest test.
inline Splits chronological_splits(std::size_t num_snapshots, double train_frac = 0.7, double val_frac = 0.1) {
    const auto t = static_cast<double>(num_snapshots);
    Splits s;
    s.train_end = static_cast<std::size_t>(std::floor(train_frac * t + 1e-9));
    s.val_end = s.train_end + static_cast<std::size_t>(std::floor(val_frac * t + 1e-9));
    s.test_end = num_snapshots;
    if (s.train_end < 1 || s.val_end > s.test_end)
        throw ValidationError("cannot split " + std::to_string(num_snapshots) + " snapshots chronologically");
    return s;
}

/// Time-ordered snapshots G^1..G^T with a chronological split and task annotation.
class DynamicGraphSequence {
public:
    DynamicGraphSequence(std::vector<SnapshotGraph> snapshots, Splits splits, TaskKind task, std::size_t num_classes)
        : snapshots_(std::move(snapshots)), splits_(splits), task_(task), num_classes_(num_classes) {
        if (snapshots_.empty()) throw ValidationError("dynamic graph has no snapshots");
        const std::size_t n = snapshots_.front().num_nodes();
        const std::size_t f = snapshots_.front().feature_dim();
        for (std::size_t i = 0; i < snapshots_.size(); ++i) {
            const auto& s = snapshots_[i];
            if (s.num_nodes() != n || s.feature_dim() != f)
                throw ValidationError("snapshot " + std::to_string(i + 1) + " has a different node universe or feature width");
            if (i > 0 && s.time_index() <= snapshots_[i - 1].time_index())
                throw ValidationError("snapshot time indices must be strictly increasing");
        }
        const std::size_t t = snapshots_.size();
        if (!(splits_.train_end >= 1 && splits_.train_end <= splits_.val_end && splits_.val_end <= splits_.test_end &&
              splits_.test_end <= t))
            throw ValidationError("split indices must satisfy 1 <= train_end <= val_end <= test_end <= T");
        if (task_ == TaskKind::link_prediction && num_classes_ != 2)
            throw ValidationError("link prediction uses exactly 2 classes");
        if (num_classes_ < 2) throw ValidationError("a task needs at least 2 classes");
    }

    std::size_t size() const noexcept { return snapshots_.size(); }
    std::size_t num_nodes() const { return snapshots_.front().num_nodes(); }
    std::size_t feature_dim() const { return snapshots_.front().feature_dim(); }
    const Splits& splits() const noexcept { return splits_; }
    TaskKind task() const noexcept { return task_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    const std::vector<SnapshotGraph>& snapshots() const noexcept { return snapshots_; }

    /// Snapshot at 1-based position t.
    const SnapshotGraph& at(std::size_t t) const {
        if (t < 1 || t > snapshots_.size())
            throw ContractError("time " + std::to_string(t) + " outside [1, " + std::to_string(snapshots_.size()) + "]");
        return snapshots_[t - 1];
    }

    DynamicGraphSequence with_task(TaskKind task, std::size_t num_classes) const {
        return DynamicGraphSequence(snapshots_, splits_, task, num_classes);
    }

    DynamicGraphSequence with_splits(Splits splits) const {
        return DynamicGraphSequence(snapshots_, splits, task_, num_classes_);
    }

private:
    std::vector<SnapshotGraph> snapshots_;
    Splits splits_;
    TaskKind task_;
    std::size_t num_classes_;
};

}  // namespace ledg
