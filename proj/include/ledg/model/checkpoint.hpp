#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ledg/numerics/parameters.hpp"

namespace ledg {

/// Text checkpoint:
///   LEDGCKPT1
///   fingerprint <hex>
///   tensors <count>
///   then per tensor: `<name> <group> <rows> <cols>` and one line of values (%.17g).
inline constexpr const char* checkpoint_version = "LEDGCKPT1";

inline void write_checkpoint(std::ostream& out, const ParameterSet& params, const std::string& fingerprint = "-") {
    out << checkpoint_version << '\n' << "fingerprint " << fingerprint << '\n' << "tensors " << params.size() << '\n';
    char buf[32];
    for (const auto& e : params.entries()) {
        out << e.name << ' ' << to_string(e.group) << ' ' << e.value.rows() << ' ' << e.value.cols() << '\n';
        bool first = true;
        for (double v : e.value.data()) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << (first ? "" : " ") << buf;
            first = false;
        }
        out << '\n';
    }
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                            const std::string& fingerprint = "-") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    write_checkpoint(out, params, fingerprint);
}

inline ParameterSet read_checkpoint(std::istream& in) {
    std::string tag;
    std::getline(in, tag);
    if (tag != checkpoint_version) throw ValidationError("not a checkpoint (version tag '" + tag + "')");
    std::string key, fingerprint;
    std::size_t count = 0;
    if (!(in >> key >> fingerprint) || key != "fingerprint") throw ValidationError("checkpoint: missing fingerprint");
    if (!(in >> key >> count) || key != "tensors") throw ValidationError("checkpoint: missing tensor count");
    ParameterSet p;
    for (std::size_t i = 0; i < count; ++i) {
        std::string name, group;
        std::size_t r = 0, c = 0;
        if (!(in >> name >> group >> r >> c)) throw ValidationError("checkpoint: truncated header of tensor " + std::to_string(i));
        std::vector<double> data(r * c);
        std::string tok;
        for (double& v : data) {
            // strtod rather than operator>> so subnormals parse instead of failing.
            if (!(in >> tok)) throw ValidationError("checkpoint: truncated values of '" + name + "'");
            char* end = nullptr;
            v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) throw ValidationError("checkpoint: bad value in '" + name + "'");
        }
        p.add(name, group_from_string(group), Tensor({r, c}, std::move(data)));
    }
    return p;
}

/// Loads a checkpoint and checks it against the expected layout, naming the
/// first tensor whose name, group or shape differs.
inline ParameterSet load_checkpoint(const std::filesystem::path& path, const ParameterSet& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read checkpoint " + path.string());
    ParameterSet got = read_checkpoint(in);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& want = expected.entry(i);
        if (i >= got.size()) throw ShapeError("checkpoint is missing tensor '" + want.name + "'");
        const auto& have = got.entry(i);
        if (have.name != want.name || have.group != want.group)
            throw ShapeError("checkpoint tensor " + std::to_string(i) + " is '" + have.name + "', expected '" +
                             want.name + "'");
        if (have.value.shape() != want.value.shape())
            throw ShapeError("checkpoint tensor '" + want.name + "' has shape " + have.value.shape_str() +
                             ", model expects " + want.value.shape_str());
    }
    if (got.size() != expected.size())
        throw ShapeError("checkpoint has " + std::to_string(got.size()) + " tensors, model expects " +
                         std::to_string(expected.size()));
    return got;
}

}  // namespace ledg
