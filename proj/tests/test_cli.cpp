#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "ledg/cli/commands.hpp"
#include "support.hpp"

using namespace ledg;
using namespace ledg::cli;
using namespace ledg::testing;
namespace fs = std::filesystem;

namespace {

const std::string toy_edges = "a b 0\nb c 1\nc d 10\na d 11\n";

struct CliRun {
    int code;
    std::string out, err;
};

// Runs the CLI binary with stdout and stderr captured to files.
CliRun run_cli(const std::string& args, const fs::path& scratch) {
    fs::create_directories(scratch);
    const fs::path o = scratch / "stdout.txt", e = scratch / "stderr.txt";
    const std::string cmd = std::string(LEDG_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), read_text(o), read_text(e)};
}

void expect_same_sequence(const DynamicGraphSequence& a, const DynamicGraphSequence& b) {
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(a.num_nodes(), b.num_nodes());
    EXPECT_EQ(a.task(), b.task());
    EXPECT_EQ(a.num_classes(), b.num_classes());
    EXPECT_EQ(a.splits(), b.splits());
    for (std::size_t t = 1; t <= a.size(); ++t) {
        EXPECT_EQ(a.at(t).edges(), b.at(t).edges());
        EXPECT_TRUE(a.at(t).features().bit_equal(b.at(t).features()));
    }
}

// Small SBM dataset on disk plus overrides for a fast training run.
struct Workspace {
    fs::path root, data;
    std::map<std::string, std::string> overrides;
};

Workspace workspace(const std::string& name) {
    Workspace w;
    w.root = scratch_dir(name);
    w.data = w.root / "data";
    GenerateArgs g;
    g.output = w.data;
    g.sbm.num_nodes = 12;
    g.sbm.num_snapshots = 10;
    g.sbm.intra_p = 0.5;
    g.sbm.inter_p = 0.1;
    g.sbm.seed = 4;
    std::ostringstream sink;
    cmd_generate(g, sink);
    w.overrides = {{"dataset", w.data.string()},  {"output_dir", (w.root / "run").string()},
                   {"hidden_dim", "6"},           {"window_size", "3"},
                   {"epochs", "2"},               {"eval_negative_ratio", "5"},
                   {"eta_out", "0.01"}};
    return w;
}

TEST(Ingest, ToyFileGivesTwoSnapshotsAndSummary) {
    const fs::path dir = scratch_dir("cli_ingest");
    fs::create_directories(dir);
    write_text(dir / "edges.txt", toy_edges);
    IngestArgs a;
    a.input = dir / "edges.txt";
    a.output = dir / "ds";
    a.interval = 10;
    std::ostringstream out;
    const auto seq = cmd_ingest(a, out);
    EXPECT_EQ(seq.size(), 2u);
    EXPECT_EQ(seq.at(1).edges().size(), 2u);
    EXPECT_EQ(seq.at(2).edges().size(), 2u);
    const std::string s = out.str();
    EXPECT_NE(s.find("snapshots 2\n"), std::string::npos);
    EXPECT_NE(s.find("nodes 4\n"), std::string::npos);
    EXPECT_NE(s.find("edges 4\n"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "ds" / "source.cfg"));
}

TEST(Ingest, LoadEqualsInMemoryConstruction) {
    const fs::path dir = scratch_dir("cli_roundtrip");
    fs::create_directories(dir);
    write_text(dir / "edges.txt", toy_edges);
    IngestArgs a;
    a.input = dir / "edges.txt";
    a.output = dir / "ds";
    a.interval = 10;
    std::ostringstream out;
    cmd_ingest(a, out);
    std::istringstream in(toy_edges);
    IngestOptions opt;
    opt.bucketing = Bucketing::fixed(10);
    const IngestResult mem = ingest_edge_stream(in, opt);
    const StoredDataset disk = read_dataset(dir / "ds");
    expect_same_sequence(disk.sequence, mem.sequence);
    EXPECT_EQ(disk.node_ids, mem.node_ids);
}

TEST(Ingest, RefusesOverwriteWithoutForce) {
    const fs::path dir = scratch_dir("cli_force");
    fs::create_directories(dir);
    write_text(dir / "edges.txt", toy_edges);
    IngestArgs a;
    a.input = dir / "edges.txt";
    a.output = dir / "ds";
    a.interval = 10;
    std::ostringstream out;
    cmd_ingest(a, out);
    EXPECT_THROW(cmd_ingest(a, out), ValidationError);
    a.force = true;
    EXPECT_NO_THROW(cmd_ingest(a, out));
}

TEST(Binary, IngestSuccessAndErrors) {
    const fs::path dir = scratch_dir("cli_bin_ingest");
    fs::create_directories(dir);
    write_text(dir / "edges.txt", toy_edges);
    const std::string in = (dir / "edges.txt").string(), ds = (dir / "ds").string();
    CliRun r = run_cli("ingest " + in + " --out " + ds + " --interval 10", dir);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("snapshots 2"), std::string::npos);

    r = run_cli("ingest " + in + " --out " + ds + " --interval 10", dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--force"), std::string::npos);

    r = run_cli("ingest " + (dir / "missing.txt").string() + " --out " + (dir / "x").string(), dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
    EXPECT_TRUE(r.out.empty());

    write_text(dir / "bad.txt", "a b 0\na b\n");
    r = run_cli("ingest " + (dir / "bad.txt").string() + " --out " + (dir / "y").string(), dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 2"), std::string::npos);

    r = run_cli("ingest " + in + " --out " + ds + " --interval 10 --edge-count 2", dir);
    EXPECT_EQ(r.code, 1);
}

TEST(Config, SerializeParseRoundTripIsByteIdentical) {
    RunConfig c;
    c.dataset = "/tmp/x";
    c.training.eta_out = 0.1 + 0.2;
    c.training.window_size = 4;
    const std::string text = c.serialize();
    const RunConfig back = RunConfig::parse(text);
    EXPECT_EQ(back.serialize(), text);
    EXPECT_EQ(back.fingerprint(), c.fingerprint());
    EXPECT_EQ(back.training.eta_out, 0.1 + 0.2);
}

TEST(Config, DefaultsAndDerivedInnerRate) {
    const RunConfig d = RunConfig::resolve({}, {});
    EXPECT_EQ(d.hidden_dim, 128u);
    EXPECT_EQ(d.training.eta_out, 0.002);
    EXPECT_EQ(d.training.eta_in, 0.02);
    EXPECT_EQ(d.training.lambda, 0.1);
    EXPECT_EQ(d.training.window_size, 5u);
    const RunConfig c = RunConfig::resolve({{"eta_out", "0.005"}}, {});
    EXPECT_DOUBLE_EQ(c.training.eta_in, 0.05);
    const RunConfig e = RunConfig::resolve({{"eta_out", "0.005"}}, {{"eta_in", "0"}});
    EXPECT_EQ(e.training.eta_in, 0.0);
}

TEST(Config, OverridesBeatFileBeatDefaults) {
    const RunConfig c = RunConfig::resolve({{"epochs", "7"}, {"seed", "3"}}, {{"epochs", "9"}});
    EXPECT_EQ(c.training.epochs, 9u);
    EXPECT_EQ(c.training.seed, 3u);
    EXPECT_EQ(c.training.patience, RunConfig{}.training.patience);
}

TEST(Config, AllProblemsReportedTogether) {
    try {
        RunConfig::resolve({{"window_size", "0"}, {"eta_out", "-1"}, {"bogus", "1"}}, {{"gradient_mode", "what"}});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_GE(e.problems().size(), 4u);
        const std::string msg = e.what();
        for (const char* key : {"window_size", "eta_out", "bogus", "gradient_mode"})
            EXPECT_NE(msg.find(key), std::string::npos) << key;
    }
}

TEST(Config, FileSyntaxErrorsCarryLineNumbers) {
    try {
        RunConfig::parse_file_text("# comment\nepochs = 3\nnot a pair\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Train, ZeroEpochsCheckpointEqualsInitialization) {
    Workspace w = workspace("cli_train0");
    w.overrides["epochs"] = "0";
    TrainArgs a;
    a.config.overrides = w.overrides;
    std::ostringstream out;
    cmd_train(a, out);
    const RunConfig c = resolve_config(a.config);
    const auto seq = load_for_run(c);
    const LedgModel model = build_model(c, seq);
    const ParameterSet init = model.init(c.training.seed);
    const ParameterSet loaded = load_checkpoint(w.root / "run" / checkpoint_file, init);
    EXPECT_TRUE(loaded.bit_equal(init));
}

TEST(Train, OutputsAreByteIdenticalAcrossRuns) {
    Workspace w = workspace("cli_determinism");
    std::vector<std::map<std::string, std::string>> files;
    for (int run = 0; run < 2; ++run) {
        TrainArgs a;
        a.config.overrides = w.overrides;
        a.force = true;
        std::ostringstream out;
        cmd_train(a, out);
        std::map<std::string, std::string> f;
        for (const char* name : {checkpoint_file, epoch_log_file, episode_log_file, resolved_config_file})
            f[name] = read_text(w.root / "run" / name);
        files.push_back(f);
    }
    EXPECT_EQ(files[0], files[1]);
    const std::string fp = resolve_config({std::nullopt, w.overrides}).fingerprint();
    for (const auto& [name, text] : files[0]) {
        if (std::string(name) == resolved_config_file) continue;
        EXPECT_NE(text.find(fp), std::string::npos) << name;
    }
}

TEST(Train, ResolvedConfigReproducesRun) {
    Workspace w = workspace("cli_resolved");
    TrainArgs a;
    a.config.overrides = w.overrides;
    std::ostringstream out;
    cmd_train(a, out);
    const fs::path echo = w.root / "run" / resolved_config_file;
    const RunConfig c = resolve_config({echo, {}});
    EXPECT_EQ(c.serialize(), read_text(echo));
}

TEST(Train, InvalidWindowRejectedBeforeAnyOutput) {
    Workspace w = workspace("cli_badwindow");
    w.overrides["window_size"] = "7";
    TrainArgs a;
    a.config.overrides = w.overrides;
    std::ostringstream out;
    EXPECT_THROW(cmd_train(a, out), ValidationError);
    EXPECT_FALSE(fs::exists(w.root / "run"));
}

TEST(Eval, OracleScorerPrintsOne) {
    Workspace w = workspace("cli_oracle");
    EvalArgs a;
    a.config.overrides = w.overrides;
    a.scorer = "oracle";
    a.output = w.root / "eval";
    std::ostringstream out;
    cmd_eval(a, out);
    EXPECT_NE(out.str().find("map 1.0\n"), std::string::npos);
    EXPECT_NE(out.str().find("mrr 1.0\n"), std::string::npos);
}

TEST(Eval, TwiceGivesIdenticalCsvAndAggregateMatchesRows) {
    Workspace w = workspace("cli_eval");
    TrainArgs t;
    t.config.overrides = w.overrides;
    std::ostringstream out;
    cmd_train(t, out);
    EvalArgs a;
    a.checkpoint = w.root / "run" / checkpoint_file;
    a.output = w.root / "eval";
    cmd_eval(a, out);
    const std::string first = read_text(w.root / "eval" / "metrics_test.csv");
    EXPECT_THROW(cmd_eval(a, out), ValidationError);
    a.force = true;
    cmd_eval(a, out);
    EXPECT_EQ(read_text(w.root / "eval" / "metrics_test.csv"), first);

    std::istringstream in(first);
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::pair<double, int>> sums;
    std::map<std::string, double> agg;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string metric, time, value;
        std::getline(ls, metric, ',');
        std::getline(ls, time, ',');
        std::getline(ls, value, ',');
        if (time == "aggregate") {
            agg[metric] = std::stod(value);
        } else {
            sums[metric].first += std::stod(value);
            sums[metric].second += 1;
        }
    }
    ASSERT_EQ(agg.size(), 2u);
    for (const auto& [m, s] : sums) EXPECT_NEAR(agg[m], s.first / s.second, 1e-15) << m;
}

TEST(Eval, CheckpointShapeMismatchNamesTensor) {
    Workspace w = workspace("cli_shape");
    TrainArgs t;
    t.config.overrides = w.overrides;
    std::ostringstream out;
    cmd_train(t, out);
    EvalArgs a;
    a.checkpoint = w.root / "run" / checkpoint_file;
    a.config.overrides = {{"hidden_dim", "5"}};
    a.config.file = w.root / "run" / resolved_config_file;
    a.output = w.root / "eval";
    try {
        cmd_eval(a, out);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("gnn.layer0.weight"), std::string::npos);
    }
}

TEST(Binary, TrainAndEvalEndToEnd) {
    Workspace w = workspace("cli_bin_train");
    std::string flags;
    for (const auto& [k, v] : w.overrides) {
        std::string f = k;
        std::replace(f.begin(), f.end(), '_', '-');
        flags += " --" + f + " " + v;
    }
    CliRun r = run_cli("train" + flags, w.root);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("epochs 2"), std::string::npos);
    r = run_cli("eval --checkpoint " + (w.root / "run" / checkpoint_file).string() + " --out " +
                    (w.root / "eval").string(),
                w.root);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("map "), std::string::npos);
    r = run_cli("train --dataset " + w.data.string() + " --window-size 0 --eta-out -1", w.root);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("window_size"), std::string::npos);
    EXPECT_NE(r.err.find("eta_out"), std::string::npos);
}

TEST(Generate, NoDriftNoInterEdgesGivesIdenticalSnapshots) {
    const fs::path dir = scratch_dir("cli_gen_static");
    GenerateArgs g;
    g.output = dir / "ds";
    g.sbm.num_nodes = 20;
    g.sbm.inter_p = 0.0;
    g.sbm.drift_rate = 0.0;
    g.sbm.intra_p = 1.0;
    g.sbm.num_snapshots = 6;
    std::ostringstream out;
    const auto seq = cmd_generate(g, out);
    for (std::size_t t = 2; t <= seq.size(); ++t) EXPECT_EQ(seq.at(t).edges(), seq.at(1).edges());
}

TEST(Generate, SeedReproducibleAndSplitSizes) {
    const fs::path dir = scratch_dir("cli_gen_seed");
    GenerateArgs g;
    g.sbm.num_nodes = 20;
    g.sbm.num_snapshots = 20;
    g.sbm.seed = 8;
    std::ostringstream o1, o2;
    g.output = dir / "a";
    const auto a = cmd_generate(g, o1);
    g.output = dir / "b";
    const auto b = cmd_generate(g, o2);
    expect_same_sequence(a, b);
    EXPECT_EQ(read_text(dir / "a" / "source.cfg"), read_text(dir / "b" / "source.cfg"));
    EXPECT_EQ(a.splits(), (Splits{14, 16, 20}));
    EXPECT_NE(o1.str().find("splits 14 2 4\n"), std::string::npos);
    expect_same_sequence(read_dataset(dir / "a").sequence, a);
}

TEST(Binary, GenerateRejectsBadParameters) {
    const fs::path dir = scratch_dir("cli_bin_gen");
    CliRun r = run_cli("generate --out " + (dir / "ds").string() + " --intra-p 1.5", dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
    r = run_cli("generate --out " + (dir / "ds").string() + " --nodes 10 --snapshots 5", dir);
    EXPECT_EQ(r.code, 0) << r.err;
}

}  // namespace
