#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ledg/meta/config.hpp"
#include "ledg/model/layers.hpp"

namespace ledg {

/// Raised with every problem found in a configuration, one per line.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : ValidationError(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid configuration:";
        for (const auto& x : p) s += "\n  " + x;
        return s;
    }
    std::vector<std::string> problems_;
};

/// Everything a train/eval run needs. Resolved from defaults, then a flat
/// `key = value` file, then command-line overrides.
struct RunConfig {
    std::string dataset;
    std::string task = "auto";  // auto = the dataset's own task
    std::string method = "ledg";  // ledg or static (encoder + one head, no adaptation)
    std::string output_dir = "out";
    BaseModel base_model = BaseModel::gcn;
    std::size_t num_layers = 2;
    std::size_t hidden_dim = 128;
    TrainingConfig training;

    /// Keys in canonical order.
    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k = {
            "dataset",        "task",           "method",              "output_dir",          "base_model",           "num_layers",
            "hidden_dim",     "window_size",    "eta_out",             "eta_in",               "lambda",
            "gradient_mode",  "target_structure_mode", "optimizer",    "epochs",               "seed",
            "train_negative_ratio", "eval_negative_ratio", "early_stop", "patience",           "validate_each_epoch"};
        return k;
    }

    /// `key = value` lines in canonical order; parse(serialize()) reproduces it byte for byte.
    std::string serialize() const {
        std::ostringstream os;
        for (const auto& k : keys()) os << k << " = " << get(k) << '\n';
        return os.str();
    }

    /// FNV-1a of the canonical text, as 16 hex digits.
    std::string fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : serialize()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    std::string get(const std::string& key) const {
        const auto& t = training;
        if (key == "dataset") return dataset;
        if (key == "task") return task;
        if (key == "method") return method;
        if (key == "output_dir") return output_dir;
        if (key == "base_model") return std::string(to_string(base_model));
        if (key == "num_layers") return std::to_string(num_layers);
        if (key == "hidden_dim") return std::to_string(hidden_dim);
        if (key == "window_size") return std::to_string(t.window_size);
        if (key == "eta_out") return fmt(t.eta_out);
        if (key == "eta_in") return fmt(t.eta_in);
        if (key == "lambda") return fmt(t.lambda);
        if (key == "gradient_mode") return std::string(to_string(t.gradient_mode));
        if (key == "target_structure_mode") return std::string(to_string(t.structure));
        if (key == "optimizer") return std::string(to_string(t.outer_optimizer));
        if (key == "epochs") return std::to_string(t.epochs);
        if (key == "seed") return std::to_string(t.seed);
        if (key == "train_negative_ratio") return std::to_string(t.train_negatives.ratio);
        if (key == "eval_negative_ratio") return std::to_string(t.eval_negatives.ratio);
        if (key == "early_stop") return t.early_stop ? "true" : "false";
        if (key == "patience") return std::to_string(t.patience);
        if (key == "validate_each_epoch") return t.validate_each_epoch ? "true" : "false";
        throw ContractError("unknown config key '" + key + "'");
    }

    /// Parses a flat config file into key/value pairs (`#` comments, blank lines allowed).
    static std::map<std::string, std::string> parse_file_text(const std::string& text) {
        std::map<std::string, std::string> kv;
        std::istringstream in(text);
        std::string line;
        std::size_t ln = 0;
        std::vector<std::string> problems;
        while (std::getline(in, line)) {
            ++ln;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                problems.push_back("line " + std::to_string(ln) + ": expected 'key = value'");
                continue;
            }
            kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        if (!problems.empty()) throw ConfigError(problems);
        return kv;
    }

    /// defaults < file < overrides. eta_in defaults to 10 * eta_out when neither
    /// source sets it. All problems are collected and reported together.
    static RunConfig resolve(const std::map<std::string, std::string>& file,
                             const std::map<std::string, std::string>& overrides) {
        std::map<std::string, std::string> merged = file;
        for (const auto& [k, v] : overrides) merged[k] = v;
        RunConfig c;
        std::vector<std::string> problems;
        for (const auto& [k, v] : merged) {
            if (k == "eta_in") continue;
            try {
                c.set(k, v);
            } catch (const std::exception& e) {
                problems.push_back(k + ": " + e.what());
            }
        }
        if (auto it = merged.find("eta_in"); it != merged.end()) {
            try {
                c.set("eta_in", it->second);
            } catch (const std::exception& e) {
                problems.push_back(std::string("eta_in: ") + e.what());
            }
        } else {
            c.training.eta_in = 10.0 * c.training.eta_out;
        }
        c.collect_problems(problems);
        if (!problems.empty()) throw ConfigError(problems);
        return c;
    }

    static RunConfig parse(const std::string& text) { return resolve(parse_file_text(text), {}); }

    void collect_problems(std::vector<std::string>& p) const {
        const auto& t = training;
        if (num_layers < 1) p.push_back("num_layers: must be >= 1");
        if (hidden_dim < 1) p.push_back("hidden_dim: must be >= 1");
        if (t.window_size < 1) p.push_back("window_size: must be >= 1");
        if (!(t.eta_out > 0)) p.push_back("eta_out: must be > 0");
        if (!(t.eta_in >= 0)) p.push_back("eta_in: must be >= 0");
        if (!(t.lambda >= 0)) p.push_back("lambda: must be >= 0");
        if (t.train_negatives.ratio < 1) p.push_back("train_negative_ratio: must be >= 1");
        if (t.early_stop && t.patience < 1) p.push_back("patience: must be >= 1 with early_stop");
        if (method != "ledg" && method != "static") p.push_back("method: expected 'ledg' or 'static'");
        if (task != "auto") {
            try {
                (void)task_from_string(task);
            } catch (const std::exception& e) {
                p.push_back(std::string("task: ") + e.what());
            }
        }
    }

private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& v) {
        std::size_t pos = 0;
        double d = 0;
        try {
            d = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || v.empty()) throw ValidationError("'" + v + "' is not a number");
        return d;
    }

    static std::size_t to_size(const std::string& v) {
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
            throw ValidationError("'" + v + "' is not a non-negative integer");
        return static_cast<std::size_t>(std::stoull(v));
    }

    static bool to_bool(const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ValidationError("'" + v + "' is not a boolean");
    }

    void set(const std::string& key, const std::string& v) {
        auto& t = training;
        if (key == "dataset") dataset = v;
        else if (key == "task") task = v;
        else if (key == "method") method = v;
        else if (key == "output_dir") output_dir = v;
        else if (key == "base_model") base_model = base_model_from_string(v);
        else if (key == "num_layers") num_layers = to_size(v);
        else if (key == "hidden_dim") hidden_dim = to_size(v);
        else if (key == "window_size") t.window_size = to_size(v);
        else if (key == "eta_out") t.eta_out = to_double(v);
        else if (key == "eta_in") t.eta_in = to_double(v);
        else if (key == "lambda") t.lambda = to_double(v);
        else if (key == "gradient_mode") t.gradient_mode = grad_mode_from_string(v);
        else if (key == "target_structure_mode") t.structure = structure_mode_from_string(v);
        else if (key == "optimizer") t.outer_optimizer = optimizer_from_string(v);
        else if (key == "epochs") t.epochs = to_size(v);
        else if (key == "seed") t.seed = static_cast<std::uint64_t>(to_size(v));
        else if (key == "train_negative_ratio") t.train_negatives.ratio = to_size(v);
        else if (key == "eval_negative_ratio") t.eval_negatives.ratio = to_size(v);
        else if (key == "early_stop") t.early_stop = to_bool(v);
        else if (key == "patience") t.patience = to_size(v);
        else if (key == "validate_each_epoch") t.validate_each_epoch = to_bool(v);
        else throw ValidationError("unknown key");
    }
};

}  // namespace ledg
