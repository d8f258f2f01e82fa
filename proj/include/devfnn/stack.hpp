#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "devfnn/drift.hpp"
#include "devfnn/gclass.hpp"
#include "devfnn/stats.hpp"
#include "devfnn/stream.hpp"

namespace devfnn {

/// One hidden layer of the stack: a gClass model plus its voting state.
/// Dormant (merged-away) layers keep their position so downstream input
/// layouts never change; their output slots are zero-filled.
struct LayerState {
    GClassModel model;
    double voting_weight = 1.0;
    double decay = 0.5;
    bool dormant = false;
    /// 1-based depth; equals the layer's position since layers are
    /// never hard-deleted.
    int depth_index = 1;
};

struct LayerOutput {
    Eigen::VectorXd scores;
    int predicted = 0;
};

/// Per-layer outputs for one sample, aligned with the layer list;
/// dormant layers hold nullopt.
using PerLayerOutputs = std::vector<std::optional<LayerOutput>>;

struct ForwardResult {
    PerLayerOutputs per_layer;
    int final_class = 0;
};

struct StackConfig {
    /// Voting decay step size.
    double step_size = 0.1;
    /// Feature deactivation threshold on the mean per-class similarity
    /// score of an original input.
    double feature_threshold = 0.5;
    /// Layer pair similarity below this merges the weaker layer away.
    double merge_threshold = 0.05;
    /// Freeze the structure: no layer growth, no merging; the winning
    /// layer still trains every batch.
    bool layers_frozen = false;

    enum class MergeCorrelation {
        /// Correlate the layers' top class scores (scalar per sample).
        TopScore,
        /// Average the per-class score correlations.
        ClassAveraged,
    };
    MergeCorrelation merge_correlation = MergeCorrelation::TopScore;

    GClassConfig gclass;
    DriftConfig drift;

    void validate() const;
};

struct TrainBatchResult {
    /// Ensemble predictions made strictly before any training with the
    /// batch (prequential contract).
    std::vector<int> predictions;
    DriftVerdict verdict;
};

/// The deep stacked network. Layers are gClass models chained by
/// feature augmentation: layer d sees the (masked) original input plus
/// the class scores of layers 1..d-1. The ensemble prediction is a
/// voting-weight-weighted vote over layer predictions. Depth grows on a
/// Drift verdict and shrinks (logically) by merging redundant layers.
class DeepStack {
public:
    DeepStack(Eigen::Index feature_count, int class_count, StackConfig cfg = {});

    /// Input vector of layer `depth` given prior layer outputs:
    /// [x .* lambda, scores_1, ..., scores_{depth-1}]; dormant slots
    /// are zeros.
    Eigen::VectorXd augment_features(const Eigen::VectorXd& x, const PerLayerOutputs& prior,
                                     int depth) const;

    /// Bottom-up evaluation of all non-dormant layers plus the weighted
    /// vote. Requires at least one layer.
    ForwardResult forward(const Eigen::VectorXd& x) const;

    /// Reward/penalty step on every non-dormant layer for one sample:
    /// the decay moves by the step size (clamped to [0,1]) and the
    /// voting weight follows it multiplicatively, clamped to [0,1].
    void update_voting_weights(const PerLayerOutputs& outputs, int true_label);

    /// Re-evaluates the 0/1 activation of every original input from the
    /// accumulated feature/target similarity scores. Reversible each
    /// batch.
    void run_feature_selection();

    /// Scans non-dormant layer pairs; a pair whose output similarity
    /// score falls below the merge threshold loses its lower-voting-
    /// weight member (on ties, the shallower one), permanently dormant
    /// with voting weight 0.
    void run_layer_merging();

    /// Appends a freshly trained layer on top, fed with the given raw
    /// (features, target) pairs augmented through the existing layers,
    /// which stay frozen during this bootstrap.
    void add_layer(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs);

    /// 1-based depth of the non-dormant layer with the highest voting
    /// weight; ties resolve to the deeper layer.
    int winning_layer() const;

    /// One prequential step: test pass first (predictions + accuracy
    /// bits), then voting-weight tuning, feature selection, merging,
    /// and the drift-verdict action (grow / buffer / train winner).
    TrainBatchResult train_batch(const Batch& batch);

    const std::vector<LayerState>& layers() const { return layers_; }
    std::size_t layer_count() const { return layers_.size(); }
    std::size_t active_layer_count() const;
    std::size_t total_rule_count() const;
    const Eigen::VectorXd& feature_weights() const { return feature_weights_; }
    Eigen::VectorXd& feature_weights() { return feature_weights_; }
    Eigen::Index feature_count() const { return n_; }
    int class_count() const { return m_; }
    const StackConfig& config() const { return cfg_; }
    int timestamp() const { return timestamp_; }
    std::size_t warning_buffer_size() const { return warning_buffer_.size(); }
    std::size_t drift_count() const { return drift_count_; }

private:
    friend struct CheckpointAccess;

    struct PairCorr {
        BivariateStats top;
        std::vector<BivariateStats> per_class;
    };

    void bootstrap_(const Batch& batch);
    void train_layer_on_(std::size_t index, const Batch& batch);
    void note_outputs_(const Eigen::VectorXd& x, const PerLayerOutputs& outputs, int label);
    static double top_score_(const LayerOutput& out) { return out.scores(out.predicted); }

    Eigen::Index n_;
    int m_;
    StackConfig cfg_;
    std::vector<LayerState> layers_;
    Eigen::VectorXd feature_weights_;
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> warning_buffer_;
    /// (input j, class o) similarity accumulators over original inputs.
    std::vector<std::vector<BivariateStats>> feature_target_;
    /// (layer i, layer j) output accumulators, i < j.
    std::map<std::pair<std::size_t, std::size_t>, PairCorr> pair_stats_;
    int timestamp_ = 0;
    std::size_t drift_count_ = 0;
};

} // namespace devfnn
