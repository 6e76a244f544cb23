#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ledg/numerics/error.hpp"

namespace ledg {

struct Candidate {
    std::size_t id = 0;
    double score = 0.0;
    bool relevant = false;
};

/// Candidates scored for one query (source node).
struct RankedQuery {
    std::size_t query = 0;
    std::vector<Candidate> candidates;
};

namespace detail {

/// Candidates by descending score, ties by ascending id.
inline std::vector<Candidate> ranked(const RankedQuery& q) {
    if (q.candidates.empty()) throw ValidationError("ranked query " + std::to_string(q.query) + " has no candidates");
    std::vector<Candidate> c = q.candidates;
    for (const auto& x : c)
        if (!std::isfinite(x.score)) throw ValidationError("non-finite score in query " + std::to_string(q.query));
    std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    return c;
}

inline bool has_relevant(const RankedQuery& q) {
    return std::any_of(q.candidates.begin(), q.candidates.end(), [](const Candidate& c) { return c.relevant; });
}

template <class F>
double mean_over_queries(std::span<const RankedQuery> queries, F per_query) {
    if (queries.empty()) throw ValidationError("no ranked queries to evaluate");
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& q : queries) {
        if (!has_relevant(q)) continue;
        sum += per_query(q);
        ++used;
    }
    if (used == 0) throw ValidationError("no query has a relevant candidate");
    return sum / static_cast<double>(used);
}

}  // namespace detail

inline double average_precision(const RankedQuery& q) {
    const auto c = detail::ranked(q);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < c.size(); ++r) {
        if (!c[r].relevant) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    if (hits == 0) throw ValidationError("average precision of a query without relevant candidates");
    return sum / static_cast<double>(hits);
}

inline double reciprocal_rank(const RankedQuery& q) {
    const auto c = detail::ranked(q);
    for (std::size_t r = 0; r < c.size(); ++r)
        if (c[r].relevant) return 1.0 / static_cast<double>(r + 1);
    throw ValidationError("reciprocal rank of a query without relevant candidates");
}

/// Mean AP over queries that have at least one relevant candidate.
inline double mean_average_precision(std::span<const RankedQuery> queries) {
    return detail::mean_over_queries(queries, average_precision);
}

inline double mean_reciprocal_rank(std::span<const RankedQuery> queries) {
    return detail::mean_over_queries(queries, reciprocal_rank);
}

/// Micro-averaged F1: TP / (TP + (FP + FN) / 2) pooled over all classes.
inline double micro_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                       std::size_t num_classes) {
    if (predicted.size() != truth.size()) throw ValidationError("micro_f1: prediction and label counts differ");
    if (predicted.empty()) throw ValidationError("micro_f1: no samples");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] >= num_classes || truth[i] >= num_classes)
            throw ValidationError("micro_f1: class id outside [0, " + std::to_string(num_classes) + ")");
        if (predicted[i] == truth[i]) {
            tp += 1;
        } else {
            fp += 1;  // counted against the predicted class
            fn += 1;  // and missed for the true class
        }
    }
    return tp / (tp + 0.5 * (fp + fn));
}

inline double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size() || predicted.empty()) throw ValidationError("accuracy: bad input sizes");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) ok += predicted[i] == truth[i];
    return static_cast<double>(ok) / static_cast<double>(predicted.size());
}

}  // namespace ledg
