#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ledg/graphdata/snapshot.hpp"
#include "ledg/numerics/tape.hpp"

namespace ledg {

enum class BaseModel { gcn, attention };
enum class Activation { relu, identity };

inline std::string_view to_string(BaseModel b) { return b == BaseModel::gcn ? "gcn" : "attention"; }

inline BaseModel base_model_from_string(std::string_view s) {
    if (s == "gcn") return BaseModel::gcn;
    if (s == "attention" || s == "gat") return BaseModel::attention;
    throw ValidationError("unknown base model '" + std::string(s) + "' (expected gcn or attention)");
}

struct EncoderConfig {
    BaseModel base = BaseModel::gcn;
    std::size_t num_layers = 2;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 128;
    Activation activation = Activation::relu;  // identity is for tests

    void validate() const {
        if (num_layers < 1) throw ValidationError("encoder needs at least one layer");
        if (input_dim < 1 || hidden_dim < 1) throw ValidationError("encoder dimensions must be positive");
    }
};

/// Slope of the LeakyReLU applied to attention scores.
inline constexpr double attention_leaky_slope = 0.2;

/// Weights of the message-passing encoder. att_src/att_dst are empty for GCN.
struct EncoderVars {
    std::vector<Var> weights;
    std::vector<Var> att_src;
    std::vector<Var> att_dst;
};

/// Two-layer perceptron with ReLU between the layers.
struct MlpVars {
    Var w1, b1, w2, b2;
};

inline Var mlp(const Var& x, const MlpVars& m) {
    return add_row_vector(matmul(relu(add_row_vector(matmul(x, m.w1), m.b1)), m.w2), m.b2);
}

inline Var activate(const Var& x, Activation a) { return a == Activation::relu ? relu(x) : x; }

/// H = f_theta(X, A). GCN layers compute act(Â h W); attention layers replace Â
/// with single-head additive attention softmax-normalized over each node's
/// neighbourhood including itself.
inline Var encode(Tape& tape, const SnapshotGraph& g, const EncoderVars& theta, const EncoderConfig& cfg) {
    if (g.feature_dim() != cfg.input_dim)
        throw ShapeError("encode: snapshot feature width " + std::to_string(g.feature_dim()) +
                         " differs from encoder input width " + std::to_string(cfg.input_dim));
    if (theta.weights.size() != cfg.num_layers) throw ContractError("encode: wrong number of layer weights");
    Var h = tape.constant(g.features());
    if (cfg.base == BaseModel::gcn) {
        const Var adj = tape.constant(g.normalized_adjacency());
        for (const Var& w : theta.weights) h = activate(matmul(adj, matmul(h, w)), cfg.activation);
        return h;
    }
    const std::size_t n = g.num_nodes();
    for (std::size_t l = 0; l < theta.weights.size(); ++l) {
        const Var z = matmul(h, theta.weights[l]);
        const Var s_self = matmul(z, theta.att_src[l]);  // n x 1
        const Var s_nbr = matmul(z, theta.att_dst[l]);   // n x 1
        const Var scores = leaky_relu(add(broadcast_cols(s_self, n), transpose(broadcast_cols(s_nbr, n))),
                                      attention_leaky_slope);
        const Var alpha = softmax_rows(scores, g.neighborhood_mask_ptr());
        h = activate(matmul(alpha, z), cfg.activation);
    }
    return h;
}

}  // namespace ledg
