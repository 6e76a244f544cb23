#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ledg/graphdata/snapshot.hpp"

namespace ledg {

/// On-disk dataset layout (directory):
///   meta               version tag TGDS1 then `key value` lines
///   nodes.map          `dense_id original_id` per line
///   NNNN.edges         `src dst weight label` per edge of snapshot NNNN (1-based)
///   NNNN.features      sparse `row col value` per nonzero feature
///   NNNN.labels        `node label` per labelled node (optional)
inline constexpr const char* dataset_version = "TGDS1";

struct StoredDataset {
    DynamicGraphSequence sequence;
    std::vector<std::string> node_ids;
};

namespace detail {

inline std::string snapshot_stem(std::size_t t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", t);
    return buf;
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + p.string());
    return in;
}

}  // namespace detail

/// Refuses to write into a non-empty directory unless `force`.
inline void prepare_output_dir(const std::filesystem::path& dir, bool force) {
    namespace fs = std::filesystem;
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ValidationError(dir.string() + " exists and is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw ValidationError(dir.string() + " is not empty; pass --force to overwrite");
    }
    fs::create_directories(dir);
}

inline void write_dataset(const std::filesystem::path& dir, const DynamicGraphSequence& seq,
                          const std::vector<std::string>& node_ids, bool force = false) {
    prepare_output_dir(dir, force);
    {
        auto m = detail::open_out(dir / "meta");
        const auto& s = seq.splits();
        m << dataset_version << '\n'
          << "num_nodes " << seq.num_nodes() << '\n'
          << "feature_dim " << seq.feature_dim() << '\n'
          << "num_snapshots " << seq.size() << '\n'
          << "task " << to_string(seq.task()) << '\n'
          << "num_classes " << seq.num_classes() << '\n'
          << "splits " << s.train_end << ' ' << s.val_end << ' ' << s.test_end << '\n';
    }
    {
        auto m = detail::open_out(dir / "nodes.map");
        for (std::size_t i = 0; i < seq.num_nodes(); ++i)
            m << i << ' ' << (i < node_ids.size() ? node_ids[i] : std::to_string(i)) << '\n';
    }
    for (std::size_t t = 1; t <= seq.size(); ++t) {
        const SnapshotGraph& g = seq.at(t);
        const std::string stem = detail::snapshot_stem(t);
        auto e = detail::open_out(dir / (stem + ".edges"));
        for (const Edge& x : g.edges())
            e << x.src << ' ' << x.dst << ' ' << detail::fmt_double(x.weight) << ' ' << x.label << '\n';
        auto f = detail::open_out(dir / (stem + ".features"));
        const Tensor& feat = g.features();
        for (std::size_t r = 0; r < feat.rows(); ++r)
            for (std::size_t c = 0; c < feat.cols(); ++c)
                if (feat(r, c) != 0.0) f << r << ' ' << c << ' ' << detail::fmt_double(feat(r, c)) << '\n';
        if (!g.node_labels().empty()) {
            auto l = detail::open_out(dir / (stem + ".labels"));
            for (std::size_t v = 0; v < g.node_labels().size(); ++v)
                if (g.node_labels()[v] >= 0) l << v << ' ' << g.node_labels()[v] << '\n';
        }
    }
}

inline StoredDataset read_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ValidationError("dataset directory " + dir.string() + " does not exist");
    auto m = detail::open_in(dir / "meta");
    std::string tag;
    std::getline(m, tag);
    if (tag != dataset_version)
        throw ValidationError("unknown dataset version tag '" + tag + "' (expected " + dataset_version + ")");
    std::map<std::string, std::string> kv;
    std::size_t lineno = 1;
    for (std::string line; std::getline(m, line);) {
        ++lineno;
        if (line.empty()) continue;
        const auto sp = line.find(' ');
        if (sp == std::string::npos) throw ParseError("meta: malformed line '" + line + "'", lineno);
        kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ValidationError("meta: missing key '" + k + "'");
        return it->second;
    };
    const std::size_t n = std::stoul(need("num_nodes"));
    const std::size_t f = std::stoul(need("feature_dim"));
    const std::size_t nt = std::stoul(need("num_snapshots"));
    const TaskKind task = task_from_string(need("task"));
    const std::size_t classes = std::stoul(need("num_classes"));
    Splits splits;
    {
        std::istringstream ss(need("splits"));
        if (!(ss >> splits.train_end >> splits.val_end >> splits.test_end))
            throw ValidationError("meta: malformed splits");
    }

    std::vector<std::string> node_ids(n);
    {
        auto in = detail::open_in(dir / "nodes.map");
        std::size_t ln = 0;
        for (std::string line; std::getline(in, line);) {
            ++ln;
            std::istringstream ss(line);
            std::size_t i;
            std::string id;
            if (!(ss >> i >> id) || i >= n) throw ParseError("nodes.map: malformed entry", ln);
            node_ids[i] = id;
        }
    }

    std::vector<SnapshotGraph> snaps;
    for (std::size_t t = 1; t <= nt; ++t) {
        const std::string stem = detail::snapshot_stem(t);
        std::vector<Edge> edges;
        {
            auto in = detail::open_in(dir / (stem + ".edges"));
            std::size_t ln = 0;
            for (std::string line; std::getline(in, line);) {
                ++ln;
                std::istringstream ss(line);
                Edge e;
                if (!(ss >> e.src >> e.dst >> e.weight >> e.label))
                    throw ParseError(stem + ".edges: malformed edge", ln);
                edges.push_back(e);
            }
        }
        Tensor x = Tensor::zeros(n, f);
        {
            auto in = detail::open_in(dir / (stem + ".features"));
            std::size_t ln = 0;
            for (std::string line; std::getline(in, line);) {
                ++ln;
                std::istringstream ss(line);
                std::size_t r, c;
                double v;
                if (!(ss >> r >> c >> v) || r >= n || c >= f) throw ParseError(stem + ".features: malformed entry", ln);
                x(r, c) = v;
            }
        }
        std::vector<int> labels;
        if (fs::exists(dir / (stem + ".labels"))) {
            labels.assign(n, -1);
            auto in = detail::open_in(dir / (stem + ".labels"));
            std::size_t ln = 0;
            for (std::string line; std::getline(in, line);) {
                ++ln;
                std::istringstream ss(line);
                std::size_t v;
                int l;
                if (!(ss >> v >> l) || v >= n) throw ParseError(stem + ".labels: malformed entry", ln);
                labels[v] = l;
            }
        }
        snaps.emplace_back(t, n, std::move(x), std::move(edges), std::move(labels));
    }
    return StoredDataset{DynamicGraphSequence(std::move(snaps), splits, task, classes), std::move(node_ids)};
}

}  // namespace ledg
