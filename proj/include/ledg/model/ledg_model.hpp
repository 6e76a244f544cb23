#pragma once

#include <random>
#include <string>
#include <vector>

#include "ledg/graphdata/sampling.hpp"
#include "ledg/model/layers.hpp"
#include "ledg/numerics/parameters.hpp"

namespace ledg {

/// Per-snapshot embeddings: H, attention map S, and its two gated parts.
struct EmbeddingBundle {
    Var h;
    Var s;
    Var h_time;
    Var h_graph;
};

/// S = sigmoid(f_phi(H)); H_graph = S * H; H_time = (1 - S) * H.
inline EmbeddingBundle disentangle(const Var& h, const MlpVars& adapter) {
    if (adapter.w2.value().cols() != h.value().cols())
        throw ShapeError("disentangle: adapter output width " + std::to_string(adapter.w2.value().cols()) +
                         " differs from embedding width " + std::to_string(h.value().cols()));
    const Var s = sigmoid(mlp(h, adapter));
    return {h, s, hadamard(one_minus(s), h), hadamard(s, h)};
}

/// smooth-L1 of predictor(mean_pool(H_time)) - target. Returns a 1x1 Var.
inline Var time_loss(const Var& h_time, const MlpVars& predictor, double target) {
    if (h_time.value().rows() == 0) throw ContractError("time_loss: empty graph");
    const Var pred = mlp(mean_pool(h_time), predictor);
    return smooth_l1(sub(pred, h_time.tape().constant(Tensor::scalar(target))));
}

/// Class probabilities for every batch item: softmax(f_psi1(H_time) + f_psi2(H_graph)).
/// Edge items use [h_src || h_dst]; with `symmetrize`, the probabilities of both
/// endpoint orders are averaged.
inline Var task_predict(const EmbeddingBundle& b, const MlpVars& cls_time, const MlpVars& cls_graph,
                        const TaskBatch& batch, TaskKind task, bool symmetrize = false) {
    if (batch.task != task) throw ContractError("task_predict: batch task differs from model task");
    if (is_edge_task(task)) {
        if (batch.src.size() != batch.size() || batch.dst.size() != batch.size())
            throw ContractError("task_predict: edge task needs src/dst per item");
        const Index src = make_index(batch.src);
        const Index dst = make_index(batch.dst);
        auto pair_probs = [&](const Index& a, const Index& c) {
            const Var in_time = concat_cols(gather_rows(b.h_time, a), gather_rows(b.h_time, c));
            const Var in_graph = concat_cols(gather_rows(b.h_graph, a), gather_rows(b.h_graph, c));
            return softmax_rows(add(mlp(in_time, cls_time), mlp(in_graph, cls_graph)));
        };
        const Var forward = pair_probs(src, dst);
        if (!symmetrize) return forward;
        return scale(add(forward, pair_probs(dst, src)), 0.5);
    }
    if (batch.nodes.size() != batch.size()) throw ContractError("task_predict: node task needs one node per item");
    const Index nodes = make_index(batch.nodes);
    return softmax_rows(add(mlp(gather_rows(b.h_time, nodes), cls_time), mlp(gather_rows(b.h_graph, nodes), cls_graph)));
}

/// Probability floor applied before the logarithm in cross-entropy.
inline constexpr double probability_floor = 1e-12;

/// Mean cross-entropy of row-stochastic predictions against class labels.
inline Var task_loss(const Var& probs, const std::vector<std::size_t>& labels) {
    const Tensor& p = probs.value();
    if (p.rows() != labels.size()) throw ContractError("task_loss: one label per prediction row required");
    for (std::size_t l : labels)
        if (l >= p.cols())
            throw ValidationError("task_loss: label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(p.cols()) + ")");
    const Var picked = clamp_min(pick_entries(probs, make_index(labels)), probability_floor);
    return scale(sum_all(log(picked)), -1.0 / static_cast<double>(labels.size()));
}

/// Shapes of the full model for one dataset.
struct ModelConfig {
    EncoderConfig encoder;
    TaskKind task = TaskKind::link_prediction;
    std::size_t num_classes = 2;

    std::size_t hidden() const { return encoder.hidden_dim; }
    std::size_t classifier_input() const { return is_edge_task(task) ? 2 * hidden() : hidden(); }
};

/// All trainable pieces of the model, as handles bound to one tape.
struct LedgVars {
    EncoderVars gnn;
    MlpVars adapter;
    MlpVars predictor;
    MlpVars cls_time;
    MlpVars cls_graph;
};

/// Parameter layout of the model: GNN theta, time adapter phi, time predictor,
/// and the two classifier heads psi1 (on H_time) and psi2 (on H_graph).
class LedgModel {
public:
    explicit LedgModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.encoder.validate();
        if (cfg_.num_classes < 2) throw ValidationError("model needs at least 2 classes");
    }

    const ModelConfig& config() const noexcept { return cfg_; }

    /// Seeded initialization: weights uniform in +-1/sqrt(fan_in), zero biases.
    ParameterSet init(std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        ParameterSet p;
        const std::size_t d = cfg_.hidden();
        std::size_t in = cfg_.encoder.input_dim;
        for (std::size_t l = 0; l < cfg_.encoder.num_layers; ++l) {
            const std::string pre = "gnn.layer" + std::to_string(l) + ".";
            p.add(pre + "weight", Group::gnn, uniform_fan_in(in, d, rng));
            if (cfg_.encoder.base == BaseModel::attention) {
                p.add(pre + "att_src", Group::gnn, uniform_fan_in(d, 1, rng));
                p.add(pre + "att_dst", Group::gnn, uniform_fan_in(d, 1, rng));
            }
            in = d;
        }
        add_mlp(p, "adapter", Group::adapter, d, d, d, rng);
        add_mlp(p, "time_predictor", Group::time_predictor, d, d, 1, rng);
        add_mlp(p, "classifier_time", Group::classifier_time, cfg_.classifier_input(), d, cfg_.num_classes, rng);
        add_mlp(p, "classifier_graph", Group::classifier_graph, cfg_.classifier_input(), d, cfg_.num_classes, rng);
        return p;
    }

    /// Maps tape handles (one per entry of a ParameterSet from init()) onto roles.
    LedgVars bind(const ParameterSet& layout, std::span<const Var> vars) const {
        if (vars.size() != layout.size()) throw ContractError("bind: one handle per parameter required");
        auto at = [&](const std::string& name) { return vars[layout.index_of(name)]; };
        auto mlp_vars = [&](const std::string& pre) {
            return MlpVars{at(pre + ".w1"), at(pre + ".b1"), at(pre + ".w2"), at(pre + ".b2")};
        };
        LedgVars v;
        for (std::size_t l = 0; l < cfg_.encoder.num_layers; ++l) {
            const std::string pre = "gnn.layer" + std::to_string(l) + ".";
            v.gnn.weights.push_back(at(pre + "weight"));
            if (cfg_.encoder.base == BaseModel::attention) {
                v.gnn.att_src.push_back(at(pre + "att_src"));
                v.gnn.att_dst.push_back(at(pre + "att_dst"));
            }
        }
        v.adapter = mlp_vars("adapter");
        v.predictor = mlp_vars("time_predictor");
        v.cls_time = mlp_vars("classifier_time");
        v.cls_graph = mlp_vars("classifier_graph");
        return v;
    }

    EmbeddingBundle embed(Tape& tape, const SnapshotGraph& g, const LedgVars& v) const {
        return disentangle(encode(tape, g, v.gnn, cfg_.encoder), v.adapter);
    }

    /// L_task + lambda * L_time for one snapshot, with the batch encoded on `structure`.
    struct Losses {
        Var task;
        Var time;
        Var total;
    };

    Losses joint_loss(Tape& tape, const SnapshotGraph& structure, const TaskBatch& batch, const LedgVars& v,
                      double time_target, double lambda) const {
        const EmbeddingBundle b = embed(tape, structure, v);
        const Var task = task_loss(task_predict(b, v.cls_time, v.cls_graph, batch, cfg_.task), batch.labels);
        const Var time = time_loss(b.h_time, v.predictor, time_target);
        return {task, time, add(task, scale(time, lambda))};
    }

private:
    static void add_mlp(ParameterSet& p, const std::string& pre, Group g, std::size_t in, std::size_t hidden,
                        std::size_t out, std::mt19937_64& rng) {
        p.add(pre + ".w1", g, uniform_fan_in(in, hidden, rng));
        p.add(pre + ".b1", g, Tensor::zeros(1, hidden));
        p.add(pre + ".w2", g, uniform_fan_in(hidden, out, rng));
        p.add(pre + ".b2", g, Tensor::zeros(1, out));
    }

    ModelConfig cfg_;
};

}  // namespace ledg
