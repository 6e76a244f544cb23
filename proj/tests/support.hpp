#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ledg/ledg.hpp"

namespace ledg::testing {

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t = Tensor::zeros(r, c);
    for (auto& x : t.data()) x = u(rng);
    return t;
}

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Value of f at the given inputs, recorded on a fresh tape.
inline double eval_scalar(const ScalarFn& f, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.variable(t));
    return f(tape, vars).value().item();
}

/// Central finite differences of f with respect to every entry of every input.
inline std::vector<Tensor> numeric_grad(const ScalarFn& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
    std::vector<Tensor> out;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor g = Tensor::zeros(inputs[k].rows(), inputs[k].cols());
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            auto plus = inputs, minus = inputs;
            plus[k][i] += h;
            minus[k][i] -= h;
            g[i] = (eval_scalar(f, plus) - eval_scalar(f, minus)) / (2.0 * h);
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline std::vector<Tensor> analytic_grad(const ScalarFn& f, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.variable(t));
    return tape.grad(f(tape, vars), vars);
}

/// ||a - n|| / max(||a||, ||n||) over all entries of all tensors; 0 when both vanish.
inline double relative_error(const std::vector<Tensor>& a, const std::vector<Tensor>& n) {
    double diff = 0, na = 0, nn = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (std::size_t i = 0; i < a[k].size(); ++i) {
            diff += (a[k][i] - n[k][i]) * (a[k][i] - n[k][i]);
            na += a[k][i] * a[k][i];
            nn += n[k][i] * n[k][i];
        }
    }
    const double scale = std::sqrt(std::max(na, nn));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline double gradient_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
    return relative_error(analytic_grad(f, inputs), numeric_grad(f, inputs, h));
}

/// Reduces a tensor-valued output to a scalar with fixed random weights, so a
/// gradient check covers the whole Jacobian.
inline Var weighted_sum(Tape& tape, const Var& out, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    const Var w = tape.constant(random_tensor(out.value().rows(), out.value().cols(), rng));
    return sum_all(hadamard(out, w));
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("ledg_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

/// Small undirected graph snapshot with degree-bucket features.
inline SnapshotGraph make_snapshot(std::size_t t, std::size_t n, std::vector<Edge> edges, std::size_t width,
                                   std::vector<int> labels = {}) {
    Tensor x = degree_bucket_features(edges, n, width);
    return SnapshotGraph(t, n, std::move(x), std::move(edges), std::move(labels));
}

/// Small drifting SBM for fast meta-learning tests.
inline DynamicGraphSequence small_sbm(std::size_t nodes = 12, std::size_t snapshots = 10, std::uint64_t seed = 3) {
    SbmParams p;
    p.num_nodes = nodes;
    p.num_communities = 2;
    p.intra_p = 0.6;
    p.inter_p = 0.1;
    p.drift_rate = 0.1;
    p.num_snapshots = snapshots;
    p.seed = seed;
    return generate_drifting_sbm(p);
}

inline LedgModel small_model(const DynamicGraphSequence& seq, std::size_t hidden = 4,
                             BaseModel base = BaseModel::gcn) {
    ModelConfig m;
    m.encoder.base = base;
    m.encoder.hidden_dim = hidden;
    m.encoder.input_dim = seq.feature_dim();
    m.task = seq.task();
    m.num_classes = seq.num_classes();
    return LedgModel(m);
}

}  // namespace ledg::testing
