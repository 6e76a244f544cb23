#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cases.hpp"

using namespace ledg;
using namespace ledg::testing;

namespace {

TrainingConfig config(std::size_t w, double eta_in, GradMode mode = GradMode::first_order) {
    TrainingConfig c;
    c.window_size = w;
    c.eta_in = eta_in;
    c.eta_out = 0.01;
    c.gradient_mode = mode;
    c.epochs = 2;
    c.train_negatives = {1, Shortfall::use_full_pool};
    c.eval_negatives = {5, Shortfall::use_full_pool};
    return c;
}

ParameterSet values_of(const ParameterSet& layout, const std::vector<Var>& state) {
    ParameterSet p = layout;
    for (std::size_t i = 0; i < p.size(); ++i) p.value(i) = state[i].value();
    return p;
}

TEST(InnerAdapt, ZeroStepLeavesEveryStateBitIdentical) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(1);
    for (GradMode mode : {GradMode::first_order, GradMode::exact}) {
        const auto cfg = config(3, 0.0, mode);
        Tape tape(mode);
        const auto inner = inner_adapt(tape, model, seq, make_window(seq, 5, 3, cfg.structure), p, p.bind(tape), cfg);
        ASSERT_EQ(inner.states.size(), 3u);
        for (const auto& s : inner.states) EXPECT_TRUE(values_of(p, s).bit_equal(p));
    }
}

TEST(InnerAdapt, ScalarToySgdStep) {
    // L = 0.5 (p - 1)^2 at p0 = 0 with step 0.1 gives p1 = 0.1.
    for (GradMode mode : {GradMode::first_order, GradMode::exact}) {
        Tape tape(mode);
        const Var p0 = tape.variable(Tensor::scalar(0.0));
        const Var r = sub(p0, tape.constant(Tensor::scalar(1.0)));
        const Var loss = scale(hadamard(r, r), 0.5);
        const Var g = tape.grad_for_update(loss, std::vector{p0})[0];
        const Var p1 = sub(p0, scale(g, 0.1));
        EXPECT_EQ(p1.value().item(), 0.1);
    }
}

TEST(InnerAdapt, TwoStepsMatchManualReplay) {
    const std::vector<Edge> e1 = {{0, 1}}, e2 = {{1, 2}, {0, 2}};
    std::vector<SnapshotGraph> snaps = {make_snapshot(1, 3, e1, 2), make_snapshot(2, 3, e2, 2),
                                        make_snapshot(3, 3, e1, 2)};
    const DynamicGraphSequence seq(snaps, {3, 3, 3}, TaskKind::link_prediction, 2);
    const LedgModel model = small_model(seq, 3);
    const ParameterSet p0 = model.init(4);
    const auto cfg = config(2, 0.3);
    const EpisodeWindow win = make_window(seq, 2, 2, StructureMode::same_snapshot);
    ASSERT_EQ(win.times, (std::vector<std::size_t>{1, 2}));

    Tape tape;
    const auto inner = inner_adapt(tape, model, seq, win, p0, p0.bind(tape), cfg);

    // Oracle: two explicit gradient steps using only the tape and tensor kernels.
    ParameterSet p = p0;
    for (std::size_t i = 1; i <= 2; ++i) {
        Tape t;
        const auto vars = p.bind(t);
        const LedgVars v = model.bind(p, vars);
        const EmbeddingBundle b = model.embed(t, seq.at(i), v);
        const auto g = t.grad(time_loss(b.h_time, v.predictor, static_cast<double>(i)), vars);
        for (std::size_t k = 0; k < p.size(); ++k) {
            const Group grp = p.entry(k).group;
            if (grp == Group::gnn || grp == Group::adapter)
                p.value(k) = kernels::sub(p.value(k), kernels::scale(g[k], cfg.eta_in));
        }
    }
    EXPECT_TRUE(values_of(p0, inner.states[1]).bit_equal(p));
    EXPECT_FALSE(p.bit_equal(p0));
}

TEST(InnerAdapt, OnlyGnnAndAdapterMove) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(2);
    const auto cfg = config(3, 0.5, GradMode::exact);
    Tape tape(cfg.gradient_mode);
    const auto inner = inner_adapt(tape, model, seq, make_window(seq, 6, 3, cfg.structure), p, p.bind(tape), cfg);
    for (const auto& s : inner.states) {
        const ParameterSet q = values_of(p, s);
        for (Group g : {Group::time_predictor, Group::classifier_time, Group::classifier_graph})
            EXPECT_EQ(q.group_hash(g), p.group_hash(g)) << to_string(g);
        EXPECT_NE(q.group_hash(Group::gnn), p.group_hash(Group::gnn));
    }
}

TEST(InnerAdapt, WrongWindowLengthIsContractError) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(2);
    Tape tape;
    EXPECT_THROW(inner_adapt(tape, model, seq, make_window(seq, 6, 2, StructureMode::same_snapshot), p, p.bind(tape),
                             config(3, 0.1)),
                 ContractError);
}

TEST(Window, IndexingAndModes) {
    const auto seq = small_sbm();
    const auto same = make_window(seq, 6, 3, StructureMode::same_snapshot);
    EXPECT_EQ(same.times, (std::vector<std::size_t>{4, 5, 6}));
    EXPECT_EQ(same.structure, 6u);
    const auto prev = make_window(seq, 6, 3, StructureMode::previous_snapshot);
    EXPECT_EQ(prev.times, (std::vector<std::size_t>{3, 4, 5}));
    EXPECT_EQ(prev.structure, 5u);
    EXPECT_THROW(make_window(seq, 2, 3, StructureMode::same_snapshot), ContractError);
    EXPECT_THROW(make_window(seq, 3, 3, StructureMode::previous_snapshot), ContractError);
    EXPECT_EQ(first_target_time(3, StructureMode::same_snapshot), 3u);
    EXPECT_EQ(first_target_time(3, StructureMode::previous_snapshot), 4u);
}

TEST(OuterStep, DegeneracyEqualsJointTrainingBitwise) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(3);
    const std::size_t t = 4;
    const TaskBatch batch = make_task_batch(seq, t, {1, Shortfall::error}, 7);
    const auto win = make_window(seq, t, 1, StructureMode::same_snapshot);
    const auto fo = meta_gradient(model, seq, p, win, batch, config(1, 0.0, GradMode::first_order));
    const auto ex = meta_gradient(model, seq, p, win, batch, config(1, 0.0, GradMode::exact));

    Tape tape;
    const auto vars = p.bind(tape);
    const auto joint = model.joint_loss(tape, seq.at(t), batch, model.bind(p, vars), 1.0, 0.1);
    const auto g = tape.grad(joint.total, vars);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_TRUE(fo.grads[i].bit_equal(ex.grads[i])) << p.entry(i).name;
        EXPECT_TRUE(fo.grads[i].bit_equal(g[i])) << p.entry(i).name;
    }
}

TEST(OuterStep, DegeneracyHoldsForLongerWindows) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    ParameterSet a = model.init(3), b = a;
    const TaskBatch batch = make_task_batch(seq, 6, {1, Shortfall::error}, 7);
    const auto win = make_window(seq, 6, 4, StructureMode::same_snapshot);
    auto cf = config(4, 0.0, GradMode::first_order), ce = config(4, 0.0, GradMode::exact);
    Optimizer oa(Optimizer::Kind::sgd, 0.01), ob(Optimizer::Kind::sgd, 0.01);
    outer_step(model, seq, a, oa, win, batch, cf);
    outer_step(model, seq, b, ob, win, batch, ce);
    EXPECT_TRUE(a.bit_equal(b));
}

TEST(OuterStep, LambdaZeroGivesPredictorNoGradientInFirstOrder) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(5);
    auto cfg = config(3, 0.2);
    cfg.lambda = 0.0;
    const TaskBatch batch = make_task_batch(seq, 6, {1, Shortfall::error}, 1);
    const auto mg = meta_gradient(model, seq, p, make_window(seq, 6, 3, cfg.structure), batch, cfg);
    for (std::size_t i : p.indices(std::array{Group::time_predictor}))
        EXPECT_EQ(mg.grads[i], Tensor::zeros(p.value(i).rows(), p.value(i).cols())) << p.entry(i).name;
    for (std::size_t i : p.indices(std::array{Group::classifier_graph})) EXPECT_GT(l2_norm(mg.grads[i]), 0.0);
}

TEST(OuterStep, SgdUpdateIsMinusStepTimesGradient) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    ParameterSet p = model.init(6);
    const ParameterSet before = p;
    const auto cfg = config(2, 0.1);
    const TaskBatch batch = make_task_batch(seq, 5, {1, Shortfall::error}, 2);
    const auto win = make_window(seq, 5, 2, cfg.structure);
    const auto mg = meta_gradient(model, seq, p, win, batch, cfg);
    Optimizer opt(Optimizer::Kind::sgd, cfg.eta_out);
    const EpisodeReport rep = outer_step(model, seq, p, opt, win, batch, cfg);
    for (std::size_t i = 0; i < p.size(); ++i)
        EXPECT_TRUE(p.value(i).bit_equal(kernels::sub(before.value(i), kernels::scale(mg.grads[i], cfg.eta_out))));
    EXPECT_EQ(rep.inner_losses.size(), 2u);
    EXPECT_NEAR(rep.objective, rep.task_loss + cfg.lambda * rep.time_loss, 1e-12);
}

TEST(OuterStep, EmptyTargetBatchIsContractError) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    TaskBatch empty;
    EXPECT_THROW(meta_gradient(model, seq, model.init(0), make_window(seq, 5, 2, StructureMode::same_snapshot), empty,
                               config(2, 0.1)),
                 ContractError);
}

TEST(MetaGradient, ExactModeMatchesFiniteDifferencesOfFullObjective) {
    const TinyInstance inst = tiny_instance();
    ASSERT_LE(inst.params.scalar_count(), 50u);
    EXPECT_LE(meta_gradient_error(inst, GradMode::exact), 1e-3);
    // First-order drops the second-order terms, so it must disagree here.
    EXPECT_GT(meta_gradient_error(inst, GradMode::first_order), 1e-3);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    auto cfg = config(3, 0.1);
    cfg.epochs = 0;
    const ParameterSet init = model.init(cfg.seed);
    const TrainResult r = train(model, seq, init, cfg);
    EXPECT_TRUE(r.params.bit_equal(init));
    EXPECT_TRUE(r.epochs.empty());
}

TEST(Train, DeterministicUnderSeed) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    auto cfg = config(3, 0.1);
    cfg.outer_optimizer = Optimizer::Kind::adam;
    const TrainResult a = train(model, seq, model.init(0), cfg);
    const TrainResult b = train(model, seq, model.init(0), cfg);
    EXPECT_TRUE(a.params.bit_equal(b.params));
    ASSERT_EQ(a.epochs.size(), b.epochs.size());
    for (std::size_t e = 0; e < a.epochs.size(); ++e) EXPECT_EQ(a.epochs[e].objective, b.epochs[e].objective);
}

TEST(Train, EpisodesRunInTemporalOrderFromFirstCompleteWindow) {
    const auto seq = small_sbm();  // train_end = 7
    const LedgModel model = small_model(seq);
    for (StructureMode mode : {StructureMode::same_snapshot, StructureMode::previous_snapshot}) {
        auto cfg = config(3, 0.1);
        cfg.structure = mode;
        std::vector<std::pair<std::size_t, std::size_t>> log;
        const TrainResult r =
            train(model, seq, model.init(0), cfg, [&](std::size_t e, const EpisodeReport& rep) { log.emplace_back(e, rep.target); });
        const std::size_t first = mode == StructureMode::same_snapshot ? 3 : 4;
        EXPECT_EQ(r.first_target, first);
        std::vector<std::pair<std::size_t, std::size_t>> expected;
        for (std::size_t e = 1; e <= 2; ++e)
            for (std::size_t t = first; t <= 7; ++t) expected.emplace_back(e, t);
        EXPECT_EQ(log, expected);
    }
}

TEST(Train, WindowMustBeShorterThanTrainingSplit) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    EXPECT_THROW(train(model, seq, model.init(0), config(7, 0.1)), ValidationError);
    EXPECT_NO_THROW(train(model, seq, model.init(0), config(6, 0.1)));
}

TEST(Train, ObjectiveDecreasesOnSmallSbm) {
    const auto seq = small_sbm(16, 10, 8);
    const LedgModel model = small_model(seq, 8);
    auto cfg = config(3, 0.05);
    cfg.epochs = 20;
    cfg.eta_out = 0.01;
    cfg.outer_optimizer = Optimizer::Kind::adam;
    const TrainResult r = train(model, seq, model.init(0), cfg);
    EXPECT_LT(r.epochs.back().objective, r.epochs.front().objective);
}

TEST(Train, ValidationMetricsAndEarlyStop) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    auto cfg = config(3, 0.1);
    cfg.epochs = 30;
    cfg.early_stop = true;
    cfg.patience = 2;
    cfg.eta_out = 1e-9;  // validation metric barely moves, so patience runs out
    const TrainResult r = train(model, seq, model.init(0), cfg);
    for (const auto& e : r.epochs) {
        ASSERT_TRUE(e.val_primary.has_value());
        EXPECT_TRUE(e.val_secondary.has_value());
    }
    EXPECT_TRUE(r.stopped_early);
    EXPECT_LT(r.epochs.size(), 30u);
}

TEST(AdaptAndPredict, LeavesParametersUntouched) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(3);
    const ParameterSet copy = p;
    const TaskBatch batch = make_task_batch(seq, 9, {5, Shortfall::use_full_pool}, 0);
    const auto out = adapt_and_predict(model, seq, p, 9, batch, config(3, 0.5), true);
    EXPECT_TRUE(p.bit_equal(copy));
    EXPECT_EQ(out.probabilities.rows(), batch.size());
}

TEST(AdaptAndPredict, ZeroStepEqualsDirectForward) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(3);
    const TaskBatch batch = make_task_batch(seq, 9, {5, Shortfall::use_full_pool}, 0);
    for (StructureMode mode : {StructureMode::same_snapshot, StructureMode::previous_snapshot}) {
        auto cfg = config(3, 0.0);
        cfg.structure = mode;
        const auto out = adapt_and_predict(model, seq, p, 9, batch, cfg);
        const Tensor direct = predict_direct(model, seq.at(mode == StructureMode::same_snapshot ? 9 : 8), p, batch);
        EXPECT_TRUE(out.probabilities.bit_equal(direct));
    }
}

TEST(AdaptAndPredict, SymmetrizedScoresAreSwapInvariant) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(3);
    TaskBatch batch = make_task_batch(seq, 9, {2, Shortfall::use_full_pool}, 0);
    TaskBatch swapped = batch;
    std::swap(swapped.src, swapped.dst);
    const auto cfg = config(3, 0.2);
    const Tensor a = adapt_and_predict(model, seq, p, 9, batch, cfg, true).probabilities;
    const Tensor b = adapt_and_predict(model, seq, p, 9, swapped, cfg, true).probabilities;
    EXPECT_LE(max_abs_diff(a, b), 1e-15);
}

TEST(AdaptAndPredict, RejectsTrainingTimesAndShortWindows) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(3);
    const TaskBatch batch = make_task_batch(seq, 5, {1, Shortfall::use_full_pool}, 0);
    EXPECT_THROW(adapt_and_predict(model, seq, p, 5, batch, config(3, 0.1)), ContractError);
    const auto shifted = seq.with_splits({1, 2, seq.size()});
    const TaskBatch b2 = make_task_batch(shifted, 2, {1, Shortfall::use_full_pool}, 0);
    EXPECT_THROW(adapt_and_predict(model, shifted, p, 2, b2, config(3, 0.1)), ContractError);
}

TEST(StaticBaseline, OneEpochIsOneSgdStepOnSummedGradient) {
    const auto seq = small_sbm();
    const LedgModel model = small_model(seq);
    const ParameterSet p = model.init(4);
    auto cfg = config(3, 0.1);
    cfg.epochs = 1;
    const TrainResult r = train_static(model, seq, p, cfg);
    std::vector<Tensor> total;
    for (std::size_t t = 1; t <= seq.splits().train_end; ++t) {
        const TaskBatch b = make_task_batch(seq, t, cfg.train_negatives, derive_seed(cfg.seed, 1, t));
        Tape tape;
        const auto vars = p.bind(tape);
        const auto g = tape.grad(task_loss(static_predict(tape, model, seq.at(t), b, model.bind(p, vars)), b.labels), vars);
        if (total.empty()) total = g;
        else
            for (std::size_t i = 0; i < g.size(); ++i) total[i] = kernels::add(total[i], g[i]);
    }
    for (std::size_t i = 0; i < p.size(); ++i)
        EXPECT_TRUE(r.params.value(i).bit_equal(kernels::sub(p.value(i), kernels::scale(total[i], cfg.eta_out))));
    for (std::size_t i : p.indices(std::array{Group::adapter, Group::time_predictor, Group::classifier_time}))
        EXPECT_TRUE(r.params.value(i).bit_equal(p.value(i)));
}

TEST(Seeds, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(0, 1, 2), derive_seed(0, 2, 1));
    EXPECT_EQ(derive_seed(5, 6, 7), derive_seed(5, 6, 7));
}

}  // namespace
