#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ledg/numerics/tape.hpp"

namespace ledg {

/// Trainable parameter groups. Only gnn and adapter change inside the inner loop.
enum class Group : std::uint8_t { gnn, adapter, time_predictor, classifier_time, classifier_graph };

inline constexpr Group all_groups[] = {Group::gnn, Group::adapter, Group::time_predictor, Group::classifier_time,
                                       Group::classifier_graph};

inline std::string_view to_string(Group g) {
    switch (g) {
        case Group::gnn: return "gnn";
        case Group::adapter: return "adapter";
        case Group::time_predictor: return "time_predictor";
        case Group::classifier_time: return "classifier_time";
        case Group::classifier_graph: return "classifier_graph";
    }
    return "?";
}

inline Group group_from_string(std::string_view s) {
    for (Group g : all_groups)
        if (to_string(g) == s) return g;
    throw ValidationError("unknown parameter group '" + std::string(s) + "'");
}

/// Named tensors partitioned into groups. Entries are fixed at construction
/// (add() is only used while building the layout); copies are deep.
class ParameterSet {
public:
    struct Entry {
        std::string name;
        Group group;
        Tensor value;
    };

    std::size_t add(std::string name, Group group, Tensor value) {
        for (const auto& e : entries_)
            if (e.name == name) throw ContractError("duplicate parameter '" + name + "'");
        entries_.push_back({std::move(name), group, std::move(value)});
        return entries_.size() - 1;
    }

    std::size_t size() const noexcept { return entries_.size(); }
    const Entry& entry(std::size_t i) const { return entries_.at(i); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    Tensor& value(std::size_t i) { return entries_.at(i).value; }
    const Tensor& value(std::size_t i) const { return entries_.at(i).value; }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].name == name) return i;
        throw ContractError("no parameter named '" + std::string(name) + "'");
    }

    const Tensor& operator[](std::string_view name) const { return entries_[index_of(name)].value; }
    Tensor& operator[](std::string_view name) { return entries_[index_of(name)].value; }

    std::vector<std::size_t> indices(std::span<const Group> groups) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            for (Group g : groups)
                if (entries_[i].group == g) out.push_back(i);
        return out;
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    /// Same names, groups and shapes.
    bool same_layout(const ParameterSet& other) const {
        if (entries_.size() != other.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& a = entries_[i];
            const auto& b = other.entries_[i];
            if (a.name != b.name || a.group != b.group || a.value.shape() != b.value.shape()) return false;
        }
        return true;
    }

    bool bit_equal(const ParameterSet& other) const {
        if (!same_layout(other)) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (!entries_[i].value.bit_equal(other.entries_[i].value)) return false;
        return true;
    }

    /// FNV-1a over the raw bytes of one group's tensors.
    std::uint64_t group_hash(Group g) const {
        std::uint64_t h = 1469598103934665603ull;
        for (const auto& e : entries_) {
            if (e.group != g) continue;
            for (double v : e.value.data()) {
                unsigned char bytes[sizeof(double)];
                std::memcpy(bytes, &v, sizeof(double));
                for (unsigned char b : bytes) {
                    h ^= b;
                    h *= 1099511628211ull;
                }
            }
        }
        return h;
    }

    /// Records every entry as a trainable variable on `tape`, in entry order.
    std::vector<Var> bind(Tape& tape) const {
        std::vector<Var> vars;
        vars.reserve(entries_.size());
        for (const auto& e : entries_) vars.push_back(tape.variable(e.value));
        return vars;
    }

private:
    std::vector<Entry> entries_;
};

/// Weight matrix with entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline Tensor uniform_fan_in(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w = Tensor::zeros(fan_in, fan_out);
    for (double& v : w.data()) v = dist(rng);
    return w;
}

/// Plain or adaptive-moment gradient step over a whole ParameterSet.
class Optimizer {
public:
    enum class Kind { sgd, adam };

    Optimizer(Kind kind, double lr) : kind_(kind), lr_(lr) {}

    Kind kind() const noexcept { return kind_; }
    double learning_rate() const noexcept { return lr_; }

    void step(ParameterSet& params, std::span<const Tensor> grads) {
        if (grads.size() != params.size()) throw ContractError("optimizer: one gradient per parameter required");
        if (kind_ == Kind::sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto p = params.value(i).data();
                auto g = grads[i].data();
                for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr_ * g[k];
            }
            return;
        }
        if (m_.empty()) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                const auto& s = params.value(i).shape();
                m_.emplace_back(s, std::vector<double>(params.value(i).size(), 0.0));
                v_.emplace_back(s, std::vector<double>(params.value(i).size(), 0.0));
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto p = params.value(i).data();
            auto g = grads[i].data();
            auto m = m_[i].data();
            auto v = v_[i].data();
            for (std::size_t k = 0; k < p.size(); ++k) {
                m[k] = beta1 * m[k] + (1 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1 - beta2) * g[k] * g[k];
                p[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
            }
        }
    }

    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

private:
    Kind kind_;
    double lr_;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

}  // namespace ledg
