#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ssrnn/training.hpp"

using namespace ssrnn;

namespace {

ModelConfig transducer_config(int hidden, int vocab) {
    ModelConfig c;
    c.hidden_dim = hidden;
    c.input_vocab = vocab;
    c.output_vocab = vocab;
    c.encoder_mode = EncoderMode::StaticStart;
    c.feed_input_tokens = true;
    return c;
}

Dataset copy_dataset(int length, int vocab, int n, std::uint64_t seed) {
    TaskSpec spec;
    spec.kind = TaskKind::Copy;
    spec.length = length;
    spec.vocab = vocab;
    spec.num_examples = n;
    spec.seed = seed;
    return generate_dataset(spec);
}

}  // namespace

TEST(TraverseCollect, AlphaOneEqualsTeacherForcedTrace) {
    const ModelConfig c = transducer_config(6, 6);
    const ModelParams p = init_params(c, 5);
    const SequencePair ex = copy_dataset(7, 6, 1, 2)[0];
    Rng rng(9);
    const TraceRecord mixed = traverse_collect(ex, DecaySchedule{1.0, 1.0, 0.0}, p, c, rng);
    const TraceRecord teacher = forward_trace(ex.x, ex.y, teacher_source(ex.y), p, c);
    EXPECT_EQ(mixed.states, teacher.states);
    EXPECT_EQ(mixed.fed_actions, teacher.fed_actions);
    EXPECT_EQ(mixed.distributions, teacher.distributions);
}

TEST(TraverseCollect, AlphaZeroEqualsGreedyPrefixDecode) {
    const ModelConfig c = transducer_config(6, 6);
    const ModelParams p = init_params(c, 6);
    const SequencePair ex = copy_dataset(7, 6, 1, 3)[0];
    Rng rng(9);
    const TraceRecord mixed = traverse_collect(ex, DecaySchedule{0.0, 1.0, 0.0}, p, c, rng);
    const TraceRecord greedy = forward_trace(ex.x, ex.y, greedy_source(p), p, c);
    EXPECT_EQ(mixed.states, greedy.states);
    EXPECT_EQ(mixed.fed_actions, greedy.fed_actions);
}

TEST(TraverseCollect, FixedSeedReproducesFedPattern) {
    const ModelConfig c = transducer_config(6, 6);
    const ModelParams p = init_params(c, 7);
    const SequencePair ex = copy_dataset(10, 6, 1, 4)[0];
    Rng rng_a(33), rng_b(33);
    const TraceRecord a = traverse_collect(ex, DecaySchedule{0.5, 1.0, 0.0}, p, c, rng_a);
    const TraceRecord b = traverse_collect(ex, DecaySchedule{0.5, 1.0, 0.0}, p, c, rng_b);
    EXPECT_EQ(a.fed_actions, b.fed_actions);
    EXPECT_EQ(a.states, b.states);
}

TEST(TraverseCollect, SupervisionAlwaysCarriesTrueLabels) {
    const ModelConfig c = transducer_config(6, 6);
    const ModelParams p = init_params(c, 8);
    const SequencePair ex = copy_dataset(9, 6, 1, 5)[0];
    Rng rng(101);
    const TraceRecord trace = traverse_collect(ex, DecaySchedule{0.3, 1.0, 0.0}, p, c, rng);
    EXPECT_EQ(trace.targets, ex.y);
}

TEST(BatchUpdate, SingleExampleEqualsScaledBpttGradient) {
    const ModelConfig mc = transducer_config(5, 5);
    const ModelParams p = init_params(mc, 11);
    const SequencePair ex = copy_dataset(5, 5, 1, 6)[0];
    TrainConfig tc;
    tc.learning_rate = 0.25;
    tc.clip_norm = std::nullopt;
    tc.regime = Regime::TeacherForcing;

    Rng rng(1);
    const auto [updated, loss] = batch_update({ex}, tc.schedule, p, mc, tc, rng);

    const TraceRecord trace = forward_trace(ex.x, ex.y, teacher_source(ex.y), p, mc);
    EXPECT_DOUBLE_EQ(loss, total_loss(trace));
    const Gradients g = bptt(trace, p, mc);
    ModelParams expected = p;
    auto dst = detail::block_pointers(expected);
    auto src = detail::block_pointers(g);
    for (std::size_t b = 0; b < dst.size(); ++b) {
        for (std::size_t i = 0; i < dst[b].second->size(); ++i) {
            (*dst[b].second)[i] -= 0.25 * (*src[b].second)[i];
        }
    }
    EXPECT_TRUE(updated == expected);
}

TEST(BatchUpdate, EmptyTargetExamplesLeaveParamsUnchanged) {
    const ModelConfig mc = transducer_config(4, 5);
    const ModelParams p = init_params(mc, 12);
    SequencePair empty;
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    Rng rng(1);
    const auto [updated, loss] = batch_update({empty, empty}, tc.schedule, p, mc, tc, rng);
    EXPECT_TRUE(updated == p);
    EXPECT_DOUBLE_EQ(loss, 0.0);
}

TEST(BatchUpdate, HugeClipNormEquivalentToNoClipping) {
    const ModelConfig mc = transducer_config(5, 5);
    const ModelParams p = init_params(mc, 13);
    const Dataset batch = copy_dataset(5, 5, 4, 7);
    TrainConfig unclipped;
    unclipped.clip_norm = std::nullopt;
    unclipped.regime = Regime::TeacherForcing;
    unclipped.learning_rate = 0.5;
    TrainConfig huge = unclipped;
    huge.clip_norm = 1e100;
    Rng rng_a(1), rng_b(1);
    const auto a = batch_update(batch, unclipped.schedule, p, mc, unclipped, rng_a);
    const auto b = batch_update(batch, huge.schedule, p, mc, huge, rng_b);
    EXPECT_TRUE(a.first == b.first);
    EXPECT_DOUBLE_EQ(a.second, b.second);
}

TEST(BatchUpdate, ClippingRescalesToTargetNorm) {
    const ModelConfig mc = transducer_config(5, 5);
    const ModelParams p = init_params(mc, 14);
    const Dataset batch = copy_dataset(5, 5, 4, 8);
    TrainConfig tc;
    tc.clip_norm = 1e-3;  // far below the natural gradient norm
    tc.learning_rate = 1.0;
    tc.regime = Regime::TeacherForcing;
    Rng rng(1);
    const auto [updated, loss] = batch_update(batch, tc.schedule, p, mc, tc, rng);
    // The applied step equals lr * clipped gradient, so its norm is clip_norm.
    double sq = 0.0;
    auto before = detail::block_pointers(p);
    auto after = detail::block_pointers(updated);
    for (std::size_t b = 0; b < before.size(); ++b) {
        for (std::size_t i = 0; i < before[b].second->size(); ++i) {
            const double d = (*after[b].second)[i] - (*before[b].second)[i];
            sq += d * d;
        }
    }
    EXPECT_NEAR(std::sqrt(sq), 1e-3, 1e-9);
}

TEST(BatchUpdate, NonFiniteParametersRejected) {
    const ModelConfig mc = transducer_config(4, 5);
    ModelParams p = init_params(mc, 15);
    p.w_h(0, 0) = std::nan("");
    const Dataset batch = copy_dataset(4, 5, 1, 9);
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    Rng rng(1);
    EXPECT_THROW(batch_update(batch, tc.schedule, p, mc, tc, rng), Error);
}

TEST(Train, CopyTaskIsMemorizedUnderTeacherForcing) {
    const Dataset data = copy_dataset(5, 8, 32, 21);
    const ModelConfig mc = transducer_config(16, 8);
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    tc.epochs = 200;
    tc.batch_size = 8;
    tc.learning_rate = 0.5;
    tc.seed = 3;
    const auto [params, metrics] = train(data, tc, mc);
    ASSERT_EQ(metrics.size(), 200u);
    EXPECT_GE(metrics.back().teacher_forced_accuracy, 0.99);
    EXPECT_LT(metrics.back().mean_loss, metrics.front().mean_loss);
}

TEST(Train, SeqToSeqEncoderModeLearnsCopyTask) {
    const Dataset data = copy_dataset(4, 5, 32, 9);
    ModelConfig mc;
    mc.hidden_dim = 16;
    mc.input_vocab = 5;
    mc.output_vocab = 5;
    mc.encoder_mode = EncoderMode::EncodingRnn;
    mc.feed_input_tokens = false;
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    tc.epochs = 150;
    tc.batch_size = 8;
    tc.learning_rate = 0.5;
    tc.seed = 2;
    const auto [params, metrics] = train(data, tc, mc);
    EXPECT_GE(metrics.back().teacher_forced_accuracy, 0.9);
    EXPECT_LT(metrics.back().mean_loss, 0.2 * metrics.front().mean_loss);
}

TEST(Train, ZeroEpochsReturnsInitialParams) {
    const Dataset data = copy_dataset(4, 5, 8, 22);
    const ModelConfig mc = transducer_config(6, 5);
    TrainConfig tc;
    tc.epochs = 0;
    tc.seed = 5;
    const auto [params, metrics] = train(data, tc, mc);
    EXPECT_TRUE(params == init_params(mc, 5));
    EXPECT_TRUE(metrics.empty());
}

TEST(Train, DeterministicGivenSeed) {
    const Dataset data = copy_dataset(5, 6, 16, 23);
    const ModelConfig mc = transducer_config(8, 6);
    TrainConfig tc;
    tc.regime = Regime::Dagger;
    tc.schedule = DecaySchedule{1.0, 0.9, 0.02};
    tc.epochs = 6;
    tc.batch_size = 4;
    tc.learning_rate = 0.3;
    tc.seed = 7;
    const auto a = train(data, tc, mc);
    const auto b = train(data, tc, mc);
    EXPECT_TRUE(a.first == b.first);
    ASSERT_EQ(a.second.size(), b.second.size());
    for (std::size_t i = 0; i < a.second.size(); ++i) {
        EXPECT_EQ(a.second[i].alpha, b.second[i].alpha);
        EXPECT_EQ(a.second[i].mean_loss, b.second[i].mean_loss);
        EXPECT_EQ(a.second[i].teacher_forced_accuracy, b.second[i].teacher_forced_accuracy);
        EXPECT_EQ(a.second[i].free_running_accuracy, b.second[i].free_running_accuracy);
    }
}

TEST(Train, DaggerWithAlphaPinnedToOneMatchesTeacherForcingBitwise) {
    const Dataset data = copy_dataset(5, 6, 32, 24);
    const ModelConfig mc = transducer_config(8, 6);
    TrainConfig teacher;
    teacher.regime = Regime::TeacherForcing;
    teacher.epochs = 5;
    teacher.batch_size = 4;
    teacher.learning_rate = 0.5;
    teacher.seed = 11;
    TrainConfig dagger = teacher;
    dagger.regime = Regime::Dagger;
    dagger.schedule = DecaySchedule{1.0, 1.0, 1.0};

    const auto a = train(data, teacher, mc);
    const auto b = train(data, dagger, mc);
    EXPECT_TRUE(a.first == b.first);
    for (std::size_t i = 0; i < a.second.size(); ++i) {
        EXPECT_EQ(a.second[i].mean_loss, b.second[i].mean_loss);
    }
}

TEST(Train, AlphaSeriesFollowsDecayRecurrence) {
    const Dataset data = copy_dataset(4, 5, 8, 25);
    const ModelConfig mc = transducer_config(6, 5);
    TrainConfig tc;
    tc.regime = Regime::Dagger;
    tc.schedule = DecaySchedule{1.0, 0.8, 0.3};
    tc.epochs = 10;
    tc.batch_size = 8;
    tc.learning_rate = 0.2;
    tc.seed = 1;
    const auto [params, metrics] = train(data, tc, mc);
    DecaySchedule s = tc.schedule;
    for (const EpochMetrics& m : metrics) {
        s = decay_step(s);
        EXPECT_DOUBLE_EQ(m.alpha, s.alpha);
    }
    EXPECT_DOUBLE_EQ(metrics.back().alpha, 0.3);  // floor engaged
}

TEST(Train, TeacherForcingAlwaysReportsAlphaOne) {
    const Dataset data = copy_dataset(4, 5, 8, 26);
    const ModelConfig mc = transducer_config(6, 5);
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    tc.schedule = DecaySchedule{0.5, 0.5, 0.0};  // ignored in this regime
    tc.epochs = 4;
    tc.batch_size = 4;
    tc.learning_rate = 0.2;
    const auto [params, metrics] = train(data, tc, mc);
    for (const EpochMetrics& m : metrics) EXPECT_DOUBLE_EQ(m.alpha, 1.0);
}

TEST(Train, InMemoryDatasetOrderDoesNotAffectResult) {
    const Dataset data = copy_dataset(5, 6, 20, 27);
    Dataset reversed(data.rbegin(), data.rend());
    const ModelConfig mc = transducer_config(8, 6);
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    tc.epochs = 4;
    tc.batch_size = 4;
    tc.learning_rate = 0.4;
    tc.seed = 9;
    const auto a = train(data, tc, mc);
    const auto b = train(reversed, tc, mc);
    EXPECT_TRUE(a.first == b.first);
}

TEST(Train, ExplodingUpdateAbortsWithEpochAndBatchContext) {
    const Dataset data = copy_dataset(5, 6, 8, 28);
    const ModelConfig mc = transducer_config(8, 6);
    TrainConfig tc;
    tc.regime = Regime::TeacherForcing;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.learning_rate = 1e300;
    tc.clip_norm = std::nullopt;
    try {
        train(data, tc, mc);
        FAIL() << "expected Error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("epoch"), std::string::npos);
        EXPECT_NE(msg.find("batch"), std::string::npos);
        EXPECT_NE(msg.find("non-finite"), std::string::npos);
    }
}

TEST(Train, MetricsStayInValidRanges) {
    const Dataset data = copy_dataset(5, 6, 16, 29);
    const ModelConfig mc = transducer_config(8, 6);
    TrainConfig tc;
    tc.regime = Regime::Dagger;
    tc.schedule = DecaySchedule{1.0, 0.85, 0.02};
    tc.epochs = 8;
    tc.batch_size = 4;
    tc.learning_rate = 0.4;
    const auto [params, metrics] = train(data, tc, mc);
    for (const EpochMetrics& m : metrics) {
        EXPECT_GE(m.mean_loss, 0.0);
        EXPECT_GE(m.teacher_forced_accuracy, 0.0);
        EXPECT_LE(m.teacher_forced_accuracy, 1.0);
        EXPECT_GE(m.free_running_accuracy, 0.0);
        EXPECT_LE(m.free_running_accuracy, 1.0);
        EXPECT_GE(m.wall_time_s, 0.0);
    }
}

TEST(Train, RejectsEmptyDataset) {
    const ModelConfig mc = transducer_config(4, 5);
    TrainConfig tc;
    EXPECT_THROW(train({}, tc, mc), Error);
}
