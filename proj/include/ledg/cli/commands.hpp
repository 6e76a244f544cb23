#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ledg/cli/run_config.hpp"
#include "ledg/graphdata/dataset_io.hpp"
#include "ledg/graphdata/ingest.hpp"
#include "ledg/graphdata/sbm.hpp"
#include "ledg/meta/baseline.hpp"
#include "ledg/model/checkpoint.hpp"

namespace ledg::cli {

namespace fs = std::filesystem;

inline std::string fnv_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

/// Writes the source parameters of a dataset next to it and returns their fingerprint.
inline std::string write_provenance(const fs::path& dir, const std::map<std::string, std::string>& params) {
    std::string text;
    for (const auto& [k, v] : params) text += k + " = " + v + '\n';
    write_text(dir / "source.cfg", text);
    return fnv_hex(text);
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

inline void print_summary(std::ostream& out, const DynamicGraphSequence& seq, const std::string& fingerprint) {
    std::size_t edges = 0;
    for (const auto& g : seq.snapshots()) edges += g.edges().size();
    const Splits& s = seq.splits();
    out << "snapshots " << seq.size() << '\n'
        << "nodes " << seq.num_nodes() << '\n'
        << "edges " << edges << '\n'
        << "splits " << s.train_end << ' ' << s.val_end - s.train_end << ' ' << s.test_end - s.val_end << '\n'
        << "fingerprint " << fingerprint << '\n';
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
    fs::path input;
    fs::path output;
    std::optional<double> interval;
    std::optional<std::size_t> edge_count;
    std::string value = "weight";
    std::string task = "link_prediction";
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    bool skip_malformed = false;
    bool force = false;
};

inline DynamicGraphSequence cmd_ingest(const IngestArgs& a, std::ostream& out) {
    if (a.interval && a.edge_count) throw ValidationError("choose one of --interval and --edge-count");
    IngestOptions opt;
    opt.bucketing = a.edge_count ? Bucketing::by_count(*a.edge_count) : Bucketing::fixed(a.interval.value_or(1.0));
    if (a.value == "weight") opt.value = ValueKind::weight;
    else if (a.value == "label") opt.value = ValueKind::label;
    else throw ValidationError("--value must be 'weight' or 'label'");
    opt.task = task_from_string(a.task);
    opt.skip_malformed = a.skip_malformed;
    opt.train_fraction = a.train_fraction;
    opt.val_fraction = a.val_fraction;
    std::ifstream in(a.input);
    if (!in) throw ValidationError("cannot read " + a.input.string());
    IngestResult r = ingest_edge_stream(in, opt);
    write_dataset(a.output, r.sequence, r.node_ids, a.force);
    const std::string fp = write_provenance(
        a.output, {{"source", a.input.string()},
                   {"bucketing", a.edge_count ? "edge_count " + std::to_string(*a.edge_count)
                                              : "interval " + num(opt.bucketing.interval)},
                   {"value", a.value},
                   {"task", a.task},
                   {"train_fraction", num(a.train_fraction)},
                   {"val_fraction", num(a.val_fraction)},
                   {"skip_malformed", a.skip_malformed ? "true" : "false"}});
    print_summary(out, r.sequence, fp);
    const IngestStats& st = r.stats;
    out << "lines " << st.lines << " comments " << st.comments << " malformed " << st.malformed << " self_loops "
        << st.self_loops << " duplicates_merged " << st.duplicates_merged << '\n';
    return r.sequence;
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
    fs::path output;
    SbmParams sbm;
    bool force = false;
};

inline DynamicGraphSequence cmd_generate(const GenerateArgs& a, std::ostream& out) {
    const DynamicGraphSequence seq = generate_drifting_sbm(a.sbm);
    std::vector<std::string> ids;
    for (std::size_t v = 0; v < seq.num_nodes(); ++v) ids.push_back(std::to_string(v));
    write_dataset(a.output, seq, ids, a.force);
    const SbmParams& p = a.sbm;
    const std::string fp = write_provenance(a.output, {{"generator", "drifting_sbm"},
                                                       {"num_nodes", std::to_string(p.num_nodes)},
                                                       {"num_communities", std::to_string(p.num_communities)},
                                                       {"intra_p", num(p.intra_p)},
                                                       {"inter_p", num(p.inter_p)},
                                                       {"drift_rate", num(p.drift_rate)},
                                                       {"num_snapshots", std::to_string(p.num_snapshots)},
                                                       {"seed", std::to_string(p.seed)},
                                                       {"train_fraction", num(p.train_fraction)},
                                                       {"val_fraction", num(p.val_fraction)}});
    print_summary(out, seq, fp);
    return seq;
}

// ---- shared by train and eval ----------------------------------------------

struct ConfigSource {
    std::optional<fs::path> file;
    std::map<std::string, std::string> overrides;
};

inline RunConfig resolve_config(const ConfigSource& src) {
    std::map<std::string, std::string> file;
    if (src.file) file = RunConfig::parse_file_text(read_text(*src.file));
    return RunConfig::resolve(file, src.overrides);
}

/// Dataset with the configured task applied.
inline DynamicGraphSequence load_for_run(const RunConfig& c) {
    if (c.dataset.empty()) throw ValidationError("no dataset given (set 'dataset' or pass --dataset)");
    DynamicGraphSequence seq = read_dataset(c.dataset).sequence;
    if (c.task == "auto") return seq;
    const TaskKind want = task_from_string(c.task);
    if (want == seq.task()) return seq;
    switch (want) {
        case TaskKind::link_prediction: return seq.with_task(want, 2);
        case TaskKind::node_classification: {
            int top = -1;
            for (const auto& g : seq.snapshots())
                for (int l : g.node_labels()) top = std::max(top, l);
            if (top < 0) throw ValidationError("dataset has no node labels for node_classification");
            return seq.with_task(want, std::max<std::size_t>(2, static_cast<std::size_t>(top) + 1));
        }
        case TaskKind::edge_classification:
            throw ValidationError("edge_classification needs a dataset ingested with edge labels");
    }
    throw ContractError("unknown task");
}

inline LedgModel build_model(const RunConfig& c, const DynamicGraphSequence& seq) {
    ModelConfig m;
    m.encoder.base = c.base_model;
    m.encoder.num_layers = c.num_layers;
    m.encoder.hidden_dim = c.hidden_dim;
    m.encoder.input_dim = seq.feature_dim();
    m.task = seq.task();
    m.num_classes = seq.num_classes();
    return LedgModel(m);
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    ConfigSource config;
    bool force = false;
};

inline constexpr const char* checkpoint_file = "checkpoint.ckpt";
inline constexpr const char* epoch_log_file = "epochs.csv";
inline constexpr const char* episode_log_file = "train_log.jsonl";
inline constexpr const char* resolved_config_file = "resolved_config.txt";

/// Runs training and writes checkpoint, per-epoch CSV, per-episode JSON lines
/// and the resolved config into the output directory.
inline TrainResult cmd_train(const TrainArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(a.config);
    const DynamicGraphSequence seq = load_for_run(c);
    const LedgModel model = build_model(c, seq);
    const TrainingConfig& tc = c.training;
    if (c.method == "ledg") check_training_window(seq, tc);
    const fs::path dir = c.output_dir;
    prepare_output_dir(dir, a.force);
    const std::string fp = c.fingerprint();
    write_text(dir / resolved_config_file, c.serialize());

    std::ofstream jl(dir / episode_log_file, std::ios::binary);
    if (!jl) throw Error("cannot write " + (dir / episode_log_file).string());
    const EpisodeSink sink = [&](std::size_t epoch, const EpisodeReport& r) {
        nlohmann::ordered_json j;
        j["epoch"] = epoch;
        j["target"] = r.target;
        j["inner_losses"] = r.inner_losses;
        j["task_loss"] = r.task_loss;
        j["time_loss"] = r.time_loss;
        j["objective"] = r.objective;
        nlohmann::ordered_json norms = nlohmann::ordered_json::object();
        for (const auto& [g, v] : r.grad_norms) norms[std::string(to_string(g))] = v;
        j["grad_norms"] = norms;
        j["config_fingerprint"] = fp;
        jl << j.dump() << '\n';
    };

    ParameterSet init = model.init(tc.seed);
    TrainResult res = c.method == "static" ? train_static(model, seq, std::move(init), tc)
                                           : train(model, seq, std::move(init), tc, sink);
    save_checkpoint(dir / checkpoint_file, res.params, fp);

    std::ofstream csv(dir / epoch_log_file, std::ios::binary);
    if (!csv) throw Error("cannot write " + (dir / epoch_log_file).string());
    csv << "epoch,episodes,objective,task_loss,time_loss,val_primary,val_secondary,config_fingerprint\n";
    for (const auto& e : res.epochs) {
        csv << e.epoch << ',' << e.episodes << ',' << num(e.objective) << ',' << num(e.task_loss) << ','
            << num(e.time_loss) << ',' << (e.val_primary ? num(*e.val_primary) : "") << ','
            << (e.val_secondary ? num(*e.val_secondary) : "") << ',' << fp << '\n';
    }
    out << "method " << c.method << '\n' << "epochs " << res.epochs.size() << '\n';
    if (!res.epochs.empty()) {
        out << "first_objective " << num(res.epochs.front().objective) << '\n'
            << "last_objective " << num(res.epochs.back().objective) << '\n';
    }
    if (res.stopped_early) out << "stopped_early true\n";
    out << "output " << dir.string() << '\n' << "fingerprint " << fp << '\n';
    return res;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    fs::path checkpoint;
    ConfigSource config;  // defaults to the resolved config next to the checkpoint
    std::string split = "test";
    std::string scorer = "model";
    fs::path output;
    bool force = false;
};

inline std::vector<MetricReport> cmd_eval(const EvalArgs& a, std::ostream& out) {
    ConfigSource src = a.config;
    if (!src.file && !a.checkpoint.empty()) {
        const fs::path sibling = a.checkpoint.parent_path() / resolved_config_file;
        if (fs::exists(sibling)) src.file = sibling;
    }
    const RunConfig c = resolve_config(src);
    SplitPart part;
    if (a.split == "val") part = SplitPart::val;
    else if (a.split == "test") part = SplitPart::test;
    else throw ValidationError("--split must be 'val' or 'test'");
    if (a.scorer != "model" && a.scorer != "oracle") throw ValidationError("--scorer must be 'model' or 'oracle'");
    const DynamicGraphSequence seq = load_for_run(c);
    const auto times = split_times(seq, part);
    if (times.empty()) throw ValidationError("the " + a.split + " split is empty");
    const TrainingConfig& tc = c.training;

    std::vector<MetricReport> reports;
    if (a.scorer == "oracle") {
        reports = evaluate_with_scorer(seq, times, tc.eval_negatives, tc.seed, oracle_scorer(seq.num_classes()));
    } else {
        if (a.checkpoint.empty()) throw ValidationError("--checkpoint is required with the model scorer");
        const LedgModel model = build_model(c, seq);
        const ParameterSet params = load_checkpoint(a.checkpoint, model.init(0));
        reports = c.method == "static" ? evaluate_static(model, seq, params, tc, times)
                                       : evaluate_sequence(model, seq, params, tc, times);
    }

    const fs::path file = a.output / ("metrics_" + a.split + ".csv");
    if (fs::exists(file) && !a.force) throw ValidationError(file.string() + " exists; pass --force to overwrite");
    fs::create_directories(a.output);
    std::ofstream csv(file, std::ios::binary);
    if (!csv) throw Error("cannot write " + file.string());
    const std::string fp = c.fingerprint();
    write_reports_csv(csv, reports, fp);
    for (const auto& r : reports) out << r.metric << ' ' << num(r.value) << '\n';
    out << "fingerprint " << fp << '\n';
    return reports;
}

}  // namespace ledg::cli
