#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ledg/graphdata/snapshot.hpp"

namespace ledg {

struct Bucketing {
    enum class Kind { fixed_interval, equal_edge_count };
    Kind kind = Kind::fixed_interval;
    double interval = 1.0;      // fixed_interval: timestamp width of one snapshot
    std::size_t edge_count = 1;  // equal_edge_count: raw edges per snapshot

    static Bucketing fixed(double interval) { return {Kind::fixed_interval, interval, 0}; }
    static Bucketing by_count(std::size_t k) { return {Kind::equal_edge_count, 0.0, k}; }
};

/// Meaning of the optional fourth column.
enum class ValueKind { weight, label };

struct IngestOptions {
    Bucketing bucketing;
    ValueKind value = ValueKind::weight;
    TaskKind task = TaskKind::link_prediction;
    bool skip_malformed = false;
    double train_fraction = 0.7;
    double val_fraction = 0.1;
};

struct IngestStats {
    std::size_t lines = 0;
    std::size_t comments = 0;          // comment and blank lines
    std::size_t malformed = 0;         // skipped (only with skip_malformed)
    std::size_t self_loops = 0;        // dropped
    std::size_t duplicates_merged = 0; // folded into an earlier edge of the same snapshot
    std::size_t edges_stored = 0;
};

struct IngestResult {
    DynamicGraphSequence sequence;
    std::vector<std::string> node_ids;  // dense id -> original token
    std::vector<long long> class_values;  // dense class -> original label value (label mode)
    IngestStats stats;
};

namespace detail {

struct RawEdge {
    std::string src, dst;
    double time = 0.0;
    double value = 1.0;
    bool has_value = false;
    std::size_t line = 0;
};

inline bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

inline bool parse_integer(const std::string& tok, long long& out) {
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc{} && p == e;
}

}  // namespace detail

/// Reads `src dst timestamp [value]` lines (whitespace separated, `#` comments),
/// sorts by timestamp, buckets into snapshots and compacts node ids into a dense
/// universe in order of first appearance. Duplicate undirected edges within a
/// snapshot are merged (weights summed, first label kept). Empty buckets are dropped.
inline IngestResult ingest_edge_stream(std::istream& in, const IngestOptions& opt) {
    using detail::RawEdge;
    if (opt.bucketing.kind == Bucketing::Kind::fixed_interval && !(opt.bucketing.interval > 0))
        throw ValidationError("fixed_interval bucketing needs a positive interval");
    if (opt.bucketing.kind == Bucketing::Kind::equal_edge_count && opt.bucketing.edge_count == 0)
        throw ValidationError("equal_edge_count bucketing needs a positive count");

    IngestStats stats;
    std::vector<RawEdge> raw;
    std::string line;
    while (std::getline(in, line)) {
        ++stats.lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            ++stats.comments;
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        RawEdge r;
        r.line = stats.lines;
        std::string problem;
        if (tok.size() < 3 || tok.size() > 4) {
            problem = "expected 'src dst timestamp [value]', got " + std::to_string(tok.size()) + " fields";
        } else if (!detail::parse_double(tok[2], r.time)) {
            problem = "timestamp '" + tok[2] + "' is not a number";
        } else if (tok.size() == 4 && !detail::parse_double(tok[3], r.value)) {
            problem = "value '" + tok[3] + "' is not a number";
        } else if (tok.size() == 4 && opt.value == ValueKind::label) {
            long long v;
            if (!detail::parse_integer(tok[3], v)) problem = "label '" + tok[3] + "' is not an integer";
        }
        if (problem.empty() && opt.value == ValueKind::label && tok.size() != 4) problem = "missing edge label";
        if (!problem.empty()) {
            if (!opt.skip_malformed) throw ParseError(problem, stats.lines);
            ++stats.malformed;
            continue;
        }
        r.src = tok[0];
        r.dst = tok[1];
        r.has_value = tok.size() == 4;
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw ValidationError("edge stream contains no edges");

    std::stable_sort(raw.begin(), raw.end(), [](const RawEdge& a, const RawEdge& b) { return a.time < b.time; });

    // Bucket index per raw edge, in sorted order.
    std::vector<std::size_t> bucket(raw.size());
    if (opt.bucketing.kind == Bucketing::Kind::fixed_interval) {
        const double t0 = raw.front().time;
        for (std::size_t i = 0; i < raw.size(); ++i)
            bucket[i] = static_cast<std::size_t>(std::floor((raw[i].time - t0) / opt.bucketing.interval));
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i) bucket[i] = i / opt.bucketing.edge_count;
    }

    std::unordered_map<std::string, std::size_t> dense;
    std::vector<std::string> node_ids;
    auto intern = [&](const std::string& id) {
        auto [it, fresh] = dense.try_emplace(id, node_ids.size());
        if (fresh) node_ids.push_back(id);
        return it->second;
    };

    std::map<long long, std::size_t> classes;
    if (opt.value == ValueKind::label) {
        for (const RawEdge& r : raw) classes.emplace(static_cast<long long>(r.value), 0);
        std::size_t c = 0;
        for (auto& [v, idx] : classes) idx = c++;
    }

    std::vector<std::vector<Edge>> buckets;
    std::size_t current = static_cast<std::size_t>(-1);
    std::unordered_map<std::uint64_t, std::size_t> where;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const RawEdge& r = raw[i];
        const std::size_t u = intern(r.src);
        const std::size_t v = intern(r.dst);
        if (bucket[i] != current) {
            current = bucket[i];
            buckets.emplace_back();
            where.clear();
        }
        if (u == v) {
            ++stats.self_loops;
            continue;
        }
        Edge e{u, v, 1.0, -1};
        if (opt.value == ValueKind::weight && r.has_value) e.weight = r.value;
        if (opt.value == ValueKind::label) e.label = static_cast<int>(classes.at(static_cast<long long>(r.value)));
        auto [it, fresh] = where.try_emplace(undirected_key(u, v), buckets.back().size());
        if (fresh) {
            buckets.back().push_back(e);
        } else {
            buckets.back()[it->second].weight += e.weight;
            ++stats.duplicates_merged;
        }
    }
    std::erase_if(buckets, [](const std::vector<Edge>& b) { return b.empty(); });
    if (buckets.empty()) throw ValidationError("edge stream contains only self-loops");

    const std::size_t n = node_ids.size();
    std::size_t maxdeg = 0;
    for (const auto& b : buckets) maxdeg = std::max(maxdeg, max_degree(b, n));
    const std::size_t width = degree_feature_width(maxdeg);

    std::vector<SnapshotGraph> snaps;
    for (std::size_t t = 0; t < buckets.size(); ++t) {
        stats.edges_stored += buckets[t].size();
        Tensor x = degree_bucket_features(buckets[t], n, width);
        snaps.emplace_back(t + 1, n, std::move(x), std::move(buckets[t]));
    }

    std::size_t num_classes = 2;
    std::vector<long long> class_values;
    if (opt.value == ValueKind::label) {
        num_classes = std::max<std::size_t>(2, classes.size());
        for (const auto& [v, idx] : classes) class_values.push_back(v);
    }
    if (opt.task == TaskKind::edge_classification && opt.value != ValueKind::label)
        throw ValidationError("edge classification needs labelled edges (value kind 'label')");
    if (opt.task == TaskKind::node_classification)
        throw ValidationError("node classification needs node labels, which edge streams do not carry");
    const std::size_t task_classes = opt.task == TaskKind::link_prediction ? 2 : num_classes;

    const Splits splits = chronological_splits(snaps.size(), opt.train_fraction, opt.val_fraction);
    return IngestResult{DynamicGraphSequence(std::move(snaps), splits, opt.task, task_classes), std::move(node_ids),
                        std::move(class_values), stats};
}

}  // namespace ledg
