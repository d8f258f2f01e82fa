#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "devfnn/drift.hpp"
#include "devfnn/stack.hpp"
#include "devfnn/stream.hpp"

using namespace devfnn;

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Two tight, far-apart blobs: class 0 near the origin, class 1 near
/// (10, 10). Trivially separable, so a trained stack makes essentially
/// no errors and every error bit in a test is one we injected.
Eigen::VectorXd blob_point(std::mt19937_64& rng, int cls) {
    const double cx = cls == 0 ? 0.0 : 10.0;
    Eigen::VectorXd x(2);
    x(0) = cx + 0.5 * (uniform01(rng) - 0.5);
    x(1) = cx + 0.5 * (uniform01(rng) - 0.5);
    return x;
}

/// Alternating-class blob batch. Labels from `invert_from` on are
/// swapped, which models an abrupt concept switch inside the batch.
Batch blob_batch(std::mt19937_64& rng, std::size_t count, int timestamp,
                 std::size_t invert_from = SIZE_MAX) {
    Batch b;
    b.timestamp = timestamp;
    for (std::size_t i = 0; i < count; ++i) {
        const int cls = static_cast<int>(i % 2);
        const int label = i >= invert_from ? 1 - cls : cls;
        b.samples.push_back(Sample::make(blob_point(rng, cls), label, 2));
    }
    return b;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> blob_pairs(std::mt19937_64& rng,
                                                                    std::size_t count) {
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (std::size_t i = 0; i < count; ++i) {
        const int cls = static_cast<int>(i % 2);
        Eigen::VectorXd t = Eigen::VectorXd::Zero(2);
        t(cls) = 1.0;
        pairs.emplace_back(blob_point(rng, cls), t);
    }
    return pairs;
}

PerLayerOutputs outputs_predicting(const std::vector<int>& predicted, int m) {
    PerLayerOutputs out;
    for (int p : predicted) {
        LayerOutput lo;
        lo.scores = Eigen::VectorXd::Zero(m);
        lo.scores(p) = 1.0;
        lo.predicted = p;
        out.push_back(lo);
    }
    return out;
}

double batch_accuracy(const std::vector<int>& predictions, const Batch& batch) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < batch.samples.size(); ++i)
        hits += predictions[i] == batch.samples[i].label;
    return static_cast<double>(hits) / static_cast<double>(batch.samples.size());
}

} // namespace

TEST_SUITE("stack") {

TEST_CASE("layer one sees only the masked original inputs") {
    DeepStack stack(3, 2);
    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;
    Eigen::VectorXd a = stack.augment_features(x, {}, 1);
    REQUIRE(a.size() == 3);
    CHECK(a == x);

    stack.feature_weights()(1) = 0.0;
    a = stack.augment_features(x, {}, 1);
    CHECK(a(0) == 1.0);
    CHECK(a(1) == 0.0);
    CHECK(a(2) == 3.0);
}

TEST_CASE("deeper layers append prior class scores, zero-filling dormant slots") {
    DeepStack stack(3, 2);
    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;

    PerLayerOutputs prior(1);
    LayerOutput lo;
    lo.scores = Eigen::VectorXd(2);
    lo.scores << 0.2, 0.8;
    lo.predicted = 1;
    prior[0] = lo;
    const Eigen::VectorXd a2 = stack.augment_features(x, prior, 2);
    REQUIRE(a2.size() == 5);
    CHECK(a2.head(3) == x);
    CHECK(a2(3) == 0.2);
    CHECK(a2(4) == 0.8);

    PerLayerOutputs three(3);
    three[0] = lo;
    three[2] = lo; // slot 1 dormant
    const Eigen::VectorXd a4 = stack.augment_features(x, three, 4);
    REQUIRE(a4.size() == 9);
    CHECK(a4.segment(3, 2) == lo.scores);
    CHECK(a4(5) == 0.0);
    CHECK(a4(6) == 0.0);
    CHECK(a4.segment(7, 2) == lo.scores);
}

TEST_CASE("a one-layer forward pass is the layer's own inference") {
    std::mt19937_64 rng(21);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 300, 1));
    REQUIRE(stack.layer_count() == 1);

    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXd x = blob_point(rng, i % 2);
        const ForwardResult fr = stack.forward(x);
        REQUIRE(fr.per_layer[0].has_value());
        const Inference direct = stack.layers()[0].model.infer(x);
        CHECK(fr.per_layer[0]->scores == direct.scores);
        CHECK(fr.per_layer[0]->predicted == direct.predicted);
        CHECK(fr.final_class == direct.predicted);
    }
}

TEST_CASE("the vote follows the heavier layer") {
    std::mt19937_64 rng(22);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 300, 1));
    stack.add_layer(blob_pairs(rng, 200));
    REQUIRE(stack.layer_count() == 2);

    // push layer 1 down: it predicts wrong while layer 2 is right
    for (int i = 0; i < 8; ++i)
        stack.update_voting_weights(outputs_predicting({0, 1}, 2), 1);
    CHECK(stack.layers()[0].voting_weight < 1e-3);
    CHECK(stack.layers()[1].voting_weight == 1.0);
    CHECK(stack.winning_layer() == 2);
}

TEST_CASE("a wrong prediction shrinks the weight through the decayed factor") {
    std::mt19937_64 rng(23);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 200, 1));
    REQUIRE(stack.layers()[0].voting_weight == 1.0);
    REQUIRE(stack.layers()[0].decay == 0.5);

    stack.update_voting_weights(outputs_predicting({0}, 2), 1); // miss
    CHECK(stack.layers()[0].decay == doctest::Approx(0.4));
    CHECK(stack.layers()[0].voting_weight == doctest::Approx(0.4));

    stack.update_voting_weights(outputs_predicting({0}, 2), 1); // miss
    CHECK(stack.layers()[0].decay == doctest::Approx(0.3));
    CHECK(stack.layers()[0].voting_weight == doctest::Approx(0.12));

    stack.update_voting_weights(outputs_predicting({1}, 2), 1); // hit
    CHECK(stack.layers()[0].decay == doctest::Approx(0.4));
    CHECK(stack.layers()[0].voting_weight == doctest::Approx(0.168));

    for (int i = 0; i < 20; ++i) stack.update_voting_weights(outputs_predicting({1}, 2), 1);
    CHECK(stack.layers()[0].voting_weight == 1.0); // reward saturates at the cap
    CHECK(stack.layers()[0].decay == 1.0);
}

TEST_CASE("a layer driven to weight zero can still recover") {
    std::mt19937_64 rng(24);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 200, 1));
    for (int i = 0; i < 30; ++i) stack.update_voting_weights(outputs_predicting({0}, 2), 1);
    CHECK(stack.layers()[0].voting_weight == 0.0);
    CHECK(stack.layers()[0].decay == 0.0);

    stack.update_voting_weights(outputs_predicting({1}, 2), 1);
    CHECK(stack.layers()[0].voting_weight > 0.0);
}

TEST_CASE("weights and decays stay inside the unit interval under random outcomes") {
    std::mt19937_64 rng(25);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 200, 1));
    bool in_range = true;
    for (int i = 0; i < 100000; ++i) {
        const int label = static_cast<int>(rng() % 2);
        const int pred = static_cast<int>(rng() % 2);
        stack.update_voting_weights(outputs_predicting({pred}, 2), label);
        const auto& l = stack.layers()[0];
        in_range = in_range && l.voting_weight >= 0.0 && l.voting_weight <= 1.0 &&
                   l.decay >= 0.0 && l.decay <= 1.0;
    }
    CHECK(in_range);
}

TEST_CASE("the winning layer is the heaviest, ties going deeper") {
    std::mt19937_64 rng(26);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 200, 1));
    CHECK(stack.winning_layer() == 1);

    stack.add_layer(blob_pairs(rng, 150));
    // both start at weight 1: the tie resolves to the deeper layer
    CHECK(stack.winning_layer() == 2);

    // layer 1 right, layer 2 wrong: the shallower layer takes the lead
    for (int i = 0; i < 3; ++i) stack.update_voting_weights(outputs_predicting({1, 0}, 2), 1);
    CHECK(stack.winning_layer() == 1);
}

TEST_CASE("an input uncorrelated with the labels is switched off and back on") {
    StackConfig cfg;
    cfg.feature_threshold = 0.2;
    DeepStack stack(3, 2, cfg);
    std::mt19937_64 rng(27);

    // f0 copies the label, f1 is a +-1 coin flip, f2 is the label in
    // +-1 form; only f1 carries no class information
    auto batch_with_noise = [&](int timestamp, bool f1_copies_label) {
        Batch b;
        b.timestamp = timestamp;
        for (int i = 0; i < 500; ++i) {
            const int label = i % 2;
            Eigen::VectorXd x(3);
            x(0) = label;
            x(1) = f1_copies_label ? label : (rng() % 2 ? 1.0 : -1.0);
            x(2) = 2.0 * label - 1.0;
            b.samples.push_back(Sample::make(x, label, 2));
        }
        return b;
    };

    stack.train_batch(batch_with_noise(1, false)); // bootstrap, no stats yet
    CHECK(stack.feature_weights() == Eigen::VectorXd::Ones(3));

    stack.train_batch(batch_with_noise(2, false));
    CHECK(stack.feature_weights()(0) == 1.0);
    CHECK(stack.feature_weights()(1) == 0.0); // compressible with no class: out
    CHECK(stack.feature_weights()(2) == 1.0);

    // once f1 starts tracking the label the pooled statistics recover it
    for (int t = 3; t <= 6; ++t) stack.train_batch(batch_with_noise(t, true));
    CHECK(stack.feature_weights()(1) == 1.0);
}

TEST_CASE("redundant layers merge, keeping the deeper one on a weight tie") {
    std::mt19937_64 rng(28);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 500, 1));
    stack.train_batch(blob_batch(rng, 500, 2));
    stack.add_layer(blob_pairs(rng, 300));
    REQUIRE(stack.active_layer_count() == 2);

    stack.train_batch(blob_batch(rng, 500, 3));
    CHECK(stack.layer_count() == 2); // merged layers keep their slot
    CHECK(stack.active_layer_count() == 1);
    CHECK(stack.layers()[0].dormant);
    CHECK(stack.layers()[0].voting_weight == 0.0);
    CHECK(!stack.layers()[1].dormant);
    CHECK(stack.winning_layer() == 2);

    // the dormant slot is zero-filled, so inference still works
    const Eigen::VectorXd x = blob_point(rng, 1);
    CHECK(stack.forward(x).final_class == 1);
}

TEST_CASE("a zero merge threshold disables merging entirely") {
    StackConfig cfg;
    cfg.merge_threshold = 0.0;
    std::mt19937_64 rng(29);
    DeepStack stack(2, 2, cfg);
    stack.train_batch(blob_batch(rng, 500, 1));
    stack.add_layer(blob_pairs(rng, 300));
    stack.train_batch(blob_batch(rng, 500, 2));
    stack.train_batch(blob_batch(rng, 500, 3));
    CHECK(stack.active_layer_count() == 2);
}

TEST_CASE("merging waits for enough joint observations") {
    std::mt19937_64 rng(30);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 500, 1));
    stack.train_batch(blob_batch(rng, 500, 2));
    stack.add_layer(blob_pairs(rng, 300));

    stack.train_batch(blob_batch(rng, 99, 3)); // 99 joint observations: too few
    CHECK(stack.active_layer_count() == 2);
    stack.train_batch(blob_batch(rng, 50, 4)); // 149: enough
    CHECK(stack.active_layer_count() == 1);
}

TEST_CASE("a new layer consumes the widened input and starts at full weight") {
    std::mt19937_64 rng(31);
    DeepStack stack(2, 2);
    stack.train_batch(blob_batch(rng, 200, 1));
    stack.add_layer(blob_pairs(rng, 100));
    REQUIRE(stack.layer_count() == 2);
    const LayerState& top = stack.layers()[1];
    CHECK(top.model.input_dim() == 4); // 2 inputs + 2 prior class scores
    CHECK(top.depth_index == 2);
    CHECK(top.voting_weight == 1.0);
    CHECK(top.decay == 0.5);
    CHECK(top.model.rule_count() >= 1);
}

TEST_CASE("the first batch bootstraps one layer with uninformed predictions") {
    std::mt19937_64 rng(32);
    DeepStack stack(2, 2);
    const Batch b = blob_batch(rng, 200, 1);
    const TrainBatchResult r = stack.train_batch(b);
    CHECK(r.predictions == std::vector<int>(200, 0));
    CHECK(r.verdict.phase == DriftPhase::Stable);
    CHECK(stack.layer_count() == 1);
    CHECK(stack.timestamp() == 1);
}

TEST_CASE("a stationary stream keeps the stack at depth one and high accuracy") {
    std::mt19937_64 rng(33);
    DeepStack stack(2, 2);
    double last_acc = 0.0;
    for (int t = 1; t <= 9; ++t) {
        const Batch b = blob_batch(rng, 400, t);
        const TrainBatchResult r = stack.train_batch(b);
        if (t > 1) last_acc = batch_accuracy(r.predictions, b);
    }
    CHECK(stack.layer_count() == 1);
    CHECK(stack.drift_count() == 0);
    CHECK(last_acc > 0.95);
}

TEST_CASE("warning buffers the batch and drift grows a layer fed with it") {
    StackConfig cfg;
    cfg.drift.total_timestamps_hint = 10; // significance saturates from t=2
    std::mt19937_64 rng(34);
    DeepStack stack(2, 2, cfg);
    stack.train_batch(blob_batch(rng, 500, 1));
    stack.train_batch(blob_batch(rng, 500, 2));

    // 26 of the last 250 labels flipped, the first tail sample among
    // them: the cut lands exactly at 250 and the mean gap 0.104 sits
    // between the warning and drift bounds
    Batch warn = blob_batch(rng, 500, 3);
    for (int k = 0; k < 26; ++k) {
        auto& s = warn.samples[250 + k * 250 / 26];
        s.label = 1 - s.label;
        s.target = Eigen::VectorXd::Zero(2);
        s.target(s.label) = 1.0;
    }
    const TrainBatchResult rw = stack.train_batch(warn);
    REQUIRE(rw.verdict.phase == DriftPhase::Warning);
    REQUIRE(rw.verdict.cut.has_value());
    CHECK(*rw.verdict.cut == 250);
    CHECK(rw.verdict.stats.mean_before == 0.0);
    CHECK(rw.verdict.stats.mean_after == doctest::Approx(26.0 / 250.0));
    CHECK(rw.verdict.stats.eps_drift ==
          doctest::Approx(hoeffding_bound_two_sample(250, 250, 0.05)));
    CHECK(rw.verdict.stats.eps_warning ==
          doctest::Approx(hoeffding_bound_two_sample(250, 250, 0.10)));
    CHECK(stack.layer_count() == 1);
    CHECK(stack.warning_buffer_size() == 500);

    // the warning was a false alarm: a clean batch clears the buffer
    const TrainBatchResult rc = stack.train_batch(blob_batch(rng, 500, 4));
    CHECK(rc.verdict.phase == DriftPhase::Stable);
    CHECK(stack.warning_buffer_size() == 0);

    // a real switch halfway through the batch: the labels invert
    const TrainBatchResult rd = stack.train_batch(blob_batch(rng, 500, 5, 250));
    REQUIRE(rd.verdict.phase == DriftPhase::Drift);
    CHECK(*rd.verdict.cut == 250);
    CHECK(rd.verdict.stats.mean_after > 0.9);
    CHECK(stack.layer_count() == 2);
    CHECK(stack.drift_count() == 1);
    CHECK(stack.warning_buffer_size() == 0);

    // the layer born at t5 saw 250 samples of each concept, so it is
    // still torn and the next clean batch fires a second alarm whose
    // layer finally trains on inverted data alone
    const TrainBatchResult ra = stack.train_batch(blob_batch(rng, 500, 6, 0));
    CHECK(ra.verdict.phase == DriftPhase::Drift);
    CHECK(stack.layer_count() == 3);

    const Batch settled = blob_batch(rng, 500, 7, 0);
    const TrainBatchResult rs = stack.train_batch(settled);
    CHECK(rs.verdict.phase == DriftPhase::Stable);
    CHECK(stack.layer_count() == 3);
    CHECK(batch_accuracy(rs.predictions, settled) > 0.9);
}

TEST_CASE("a frozen stack reports drift but never changes shape") {
    StackConfig cfg;
    cfg.layers_frozen = true;
    cfg.drift.total_timestamps_hint = 10;
    std::mt19937_64 rng(35);
    DeepStack stack(2, 2, cfg);
    stack.train_batch(blob_batch(rng, 500, 1));
    stack.train_batch(blob_batch(rng, 500, 2));
    const TrainBatchResult r = stack.train_batch(blob_batch(rng, 500, 3, 250));
    CHECK(r.verdict.phase == DriftPhase::Drift);
    CHECK(stack.layer_count() == 1);
    CHECK(stack.drift_count() == 0);
    CHECK(stack.warning_buffer_size() == 0);

    // the winner still trains: the frozen layer adapts to the new labels
    double acc = 0.0;
    for (int t = 4; t <= 8; ++t) {
        const Batch b = blob_batch(rng, 500, t, 0);
        acc = batch_accuracy(stack.train_batch(b).predictions, b);
    }
    CHECK(stack.layer_count() == 1);
    CHECK(acc > 0.9);
}

TEST_CASE("config validation rejects bad stack settings and nested ones") {
    StackConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.step_size = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.feature_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.merge_threshold = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.gclass.vigilance = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.drift.alpha_min_warning = 0.01; // tighter than the drift level
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

} // TEST_SUITE
