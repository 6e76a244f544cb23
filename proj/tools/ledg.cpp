// ledg: ingest, generate, train and eval from the command line.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <iostream>

#include <CLI11.hpp>

#include "ledg/cli/commands.hpp"

namespace {

using namespace ledg;
using namespace ledg::cli;

// Flags that map onto RunConfig keys; only flags actually given become overrides.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", file, "flat key = value config file");
        for (const auto& key : RunConfig::keys()) {
            std::string flag = "--" + key;
            for (auto& ch : flag)
                if (ch == '_') ch = '-';
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { values[key] = v; }, "override '" + key + "'");
        }
    }

    ConfigSource source() const {
        ConfigSource s;
        if (!file.empty()) s.file = file;
        s.overrides = values;
        return s;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"LEDG meta-learning for GNNs on discrete dynamic graphs"};
    app.require_subcommand(1);

    IngestArgs ingest;
    std::string ingest_in, ingest_out;
    double interval = 0;
    std::size_t edge_count = 0;
    auto* ci = app.add_subcommand("ingest", "bucket a timestamped edge list into a TGDS1 dataset");
    ci->add_option("input", ingest_in, "edge list: src dst timestamp [value]")->required();
    ci->add_option("--out", ingest_out, "output dataset directory")->required();
    auto* opt_interval = ci->add_option("--interval", interval, "fixed time interval per snapshot");
    auto* opt_count = ci->add_option("--edge-count", edge_count, "raw edges per snapshot");
    opt_interval->excludes(opt_count);
    ci->add_option("--value", ingest.value, "meaning of the fourth column: weight or label");
    ci->add_option("--task", ingest.task, "link_prediction or edge_classification");
    ci->add_option("--train-fraction", ingest.train_fraction);
    ci->add_option("--val-fraction", ingest.val_fraction);
    ci->add_flag("--skip-malformed", ingest.skip_malformed, "count malformed lines instead of failing");
    ci->add_flag("--force", ingest.force, "overwrite a non-empty output directory");

    GenerateArgs gen;
    std::string gen_out;
    auto* cg = app.add_subcommand("generate", "write a drifting stochastic block model dataset");
    cg->add_option("--out", gen_out, "output dataset directory")->required();
    cg->add_option("--nodes", gen.sbm.num_nodes);
    cg->add_option("--communities", gen.sbm.num_communities);
    cg->add_option("--intra-p", gen.sbm.intra_p);
    cg->add_option("--inter-p", gen.sbm.inter_p);
    cg->add_option("--drift", gen.sbm.drift_rate);
    cg->add_option("--snapshots", gen.sbm.num_snapshots);
    cg->add_option("--seed", gen.sbm.seed);
    cg->add_option("--train-fraction", gen.sbm.train_fraction);
    cg->add_option("--val-fraction", gen.sbm.val_fraction);
    cg->add_flag("--force", gen.force, "overwrite a non-empty output directory");

    TrainArgs tr;
    ConfigFlags train_flags;
    auto* ct = app.add_subcommand("train", "meta-train a model and write checkpoint and logs");
    train_flags.attach(ct);
    ct->add_flag("--force", tr.force, "overwrite a non-empty output directory");

    EvalArgs ev;
    std::string ev_ckpt, ev_out;
    ConfigFlags eval_flags;
    auto* ce = app.add_subcommand("eval", "evaluate a checkpoint on the val or test split");
    ce->add_option("--checkpoint", ev_ckpt, "checkpoint written by train");
    ce->add_option("--split", ev.split, "val or test")->check(CLI::IsMember({"val", "test"}));
    ce->add_option("--scorer", ev.scorer, "model or oracle")->check(CLI::IsMember({"model", "oracle"}));
    ce->add_option("--out", ev_out, "directory for the metric CSV")->required();
    eval_flags.attach(ce);
    ce->add_flag("--force", ev.force, "overwrite an existing metric CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ci->parsed()) {
            ingest.input = ingest_in;
            ingest.output = ingest_out;
            if (opt_interval->count() > 0) ingest.interval = interval;
            if (opt_count->count() > 0) ingest.edge_count = edge_count;
            cmd_ingest(ingest, std::cout);
        } else if (cg->parsed()) {
            gen.output = gen_out;
            cmd_generate(gen, std::cout);
        } else if (ct->parsed()) {
            tr.config = train_flags.source();
            cmd_train(tr, std::cout);
        } else if (ce->parsed()) {
            ev.checkpoint = ev_ckpt;
            ev.output = ev_out;
            ev.config = eval_flags.source();
            cmd_eval(ev, std::cout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
