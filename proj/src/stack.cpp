#include "devfnn/stack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace devfnn {

namespace {

/// A voting weight caught at exactly 0 could never recover through the
/// multiplicative reward, locking a layer out even when its concept
/// returns; rewards therefore lift from this floor.
constexpr double kVotingFloor = 1e-6;

/// Layer-pair similarity needs this many joint observations before a
/// merge decision is trusted; a freshly added layer is never merged on
/// its first batch.
constexpr std::size_t kMergeMinObs = 100;

} // namespace

void StackConfig::validate() const {
    if (!(step_size > 0.0 && step_size < 1.0))
        throw std::invalid_argument("stack: step_size must lie in (0, 1)");
    if (!(feature_threshold > 0.0))
        throw std::invalid_argument("stack: feature_threshold must be positive");
    if (!(merge_threshold >= 0.0))
        throw std::invalid_argument("stack: merge_threshold must be nonnegative");
    gclass.validate();
    drift.validate();
}

DeepStack::DeepStack(Eigen::Index feature_count, int class_count, StackConfig cfg)
    : n_(feature_count), m_(class_count), cfg_(cfg) {
    if (feature_count <= 0) throw std::invalid_argument("stack: feature_count must be positive");
    if (class_count < 1) throw std::invalid_argument("stack: class_count must be at least 1");
    cfg_.validate();
    feature_weights_ = Eigen::VectorXd::Ones(n_);
    feature_target_.assign(static_cast<std::size_t>(n_),
                           std::vector<BivariateStats>(static_cast<std::size_t>(m_)));
}

Eigen::VectorXd DeepStack::augment_features(const Eigen::VectorXd& x, const PerLayerOutputs& prior,
                                            int depth) const {
    if (x.size() != n_) throw std::invalid_argument("augment_features: input dimension mismatch");
    if (depth < 1 || static_cast<std::size_t>(depth - 1) > prior.size())
        throw std::invalid_argument("augment_features: missing prior layer outputs");
    Eigen::VectorXd out(n_ + static_cast<Eigen::Index>(m_) * (depth - 1));
    out.head(n_) = x.cwiseProduct(feature_weights_);
    for (int d = 0; d < depth - 1; ++d) {
        const Eigen::Index at = n_ + static_cast<Eigen::Index>(m_) * d;
        const auto& slot = prior[static_cast<std::size_t>(d)];
        if (slot.has_value()) {
            if (slot->scores.size() != m_)
                throw std::invalid_argument("augment_features: prior output dimension mismatch");
            out.segment(at, m_) = slot->scores;
        } else {
            out.segment(at, m_).setZero();
        }
    }
    return out;
}

ForwardResult DeepStack::forward(const Eigen::VectorXd& x) const {
    if (layers_.empty()) throw std::logic_error("forward: stack has no layers");
    ForwardResult r;
    r.per_layer.resize(layers_.size());
    for (std::size_t d = 0; d < layers_.size(); ++d) {
        if (layers_[d].dormant) continue;
        const Eigen::VectorXd in =
            augment_features(x, r.per_layer, layers_[d].depth_index);
        const Inference inf = layers_[d].model.infer(in);
        r.per_layer[d] = LayerOutput{inf.scores, inf.predicted};
    }

    Eigen::VectorXd vote = Eigen::VectorXd::Zero(m_);
    for (std::size_t d = 0; d < layers_.size(); ++d)
        if (!layers_[d].dormant && r.per_layer[d].has_value())
            vote(r.per_layer[d]->predicted) += layers_[d].voting_weight;
    int best = 0;
    for (int o = 1; o < m_; ++o)
        if (vote(o) > vote(best)) best = o;
    r.final_class = best;
    return r;
}

void DeepStack::update_voting_weights(const PerLayerOutputs& outputs, int true_label) {
    if (outputs.size() != layers_.size())
        throw std::invalid_argument("update_voting_weights: outputs misaligned with layers");
    for (std::size_t d = 0; d < layers_.size(); ++d) {
        LayerState& layer = layers_[d];
        if (layer.dormant || !outputs[d].has_value()) continue;
        if (outputs[d]->predicted != true_label) {
            layer.decay = std::clamp(layer.decay - cfg_.step_size, 0.0, 1.0);
            layer.voting_weight *= layer.decay;
        } else {
            layer.decay = std::clamp(layer.decay + cfg_.step_size, 0.0, 1.0);
            layer.voting_weight =
                std::min(std::max(layer.voting_weight, kVotingFloor) * (1.0 + layer.decay), 1.0);
        }
    }
}

void DeepStack::run_feature_selection() {
    for (Eigen::Index j = 0; j < n_; ++j) {
        const auto& per_class = feature_target_[static_cast<std::size_t>(j)];
        if (per_class.front().count() < 2) continue;
        double score = 0.0;
        for (const auto& s : per_class) score += mici(s);
        score /= static_cast<double>(m_);
        feature_weights_(j) = (score >= cfg_.feature_threshold) ? 0.0 : 1.0;
    }
}

void DeepStack::run_layer_merging() {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        for (std::size_t j = i + 1; j < layers_.size(); ++j) {
            if (layers_[i].dormant || layers_[j].dormant) continue;
            const auto it = pair_stats_.find({i, j});
            if (it == pair_stats_.end()) continue;
            const PairCorr& pc = it->second;
            if (pc.top.count() < kMergeMinObs) continue;

            double score = 0.0;
            if (cfg_.merge_correlation == StackConfig::MergeCorrelation::TopScore) {
                score = mici(pc.top);
            } else {
                for (const auto& s : pc.per_class) score += mici(s);
                score /= static_cast<double>(m_);
            }
            if (score >= cfg_.merge_threshold) continue;

            // Redundant pair: the lower voting weight loses; on a tie
            // the deeper (more recent) layer survives.
            std::size_t loser = i;
            if (layers_[i].voting_weight > layers_[j].voting_weight) loser = j;
            layers_[loser].dormant = true;
            layers_[loser].voting_weight = 0.0;
        }
    }
}

void DeepStack::add_layer(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
    const int depth = static_cast<int>(layers_.size()) + 1;
    const Eigen::Index dim = n_ + static_cast<Eigen::Index>(m_) * (depth - 1);
    LayerState layer{GClassModel(dim, m_, cfg_.gclass), 1.0, 0.5, false, depth};

    // Existing layers stay frozen: they are only evaluated to build the
    // augmented inputs of the new layer.
    for (const auto& [x, target] : pairs) {
        PerLayerOutputs prior(layers_.size());
        for (std::size_t d = 0; d < layers_.size(); ++d) {
            if (layers_[d].dormant) continue;
            const Eigen::VectorXd in = augment_features(x, prior, layers_[d].depth_index);
            const Inference inf = layers_[d].model.infer(in);
            prior[d] = LayerOutput{inf.scores, inf.predicted};
        }
        layer.model.train_on_sample(augment_features(x, prior, depth), target);
    }
    layers_.push_back(std::move(layer));
    warning_buffer_.clear();
}

int DeepStack::winning_layer() const {
    if (layers_.empty()) throw std::logic_error("winning_layer: stack has no layers");
    int best = -1;
    for (std::size_t d = 0; d < layers_.size(); ++d) {
        if (layers_[d].dormant) continue;
        if (best < 0 || layers_[d].voting_weight >= layers_[static_cast<std::size_t>(best)].voting_weight)
            best = static_cast<int>(d);
    }
    if (best < 0) throw std::logic_error("winning_layer: all layers dormant");
    return layers_[static_cast<std::size_t>(best)].depth_index;
}

void DeepStack::bootstrap_(const Batch& batch) {
    layers_.push_back(LayerState{GClassModel(n_, m_, cfg_.gclass), 1.0, 0.5, false, 1});
    train_layer_on_(0, batch);
}

void DeepStack::train_layer_on_(std::size_t index, const Batch& batch) {
    LayerState& layer = layers_[index];
    for (const auto& s : batch.samples) {
        // Augmentation is recomputed live: deeper layers see the
        // current outputs of the (already updated) shallower ones.
        PerLayerOutputs prior(layers_.size());
        for (std::size_t d = 0; d + 1 < static_cast<std::size_t>(layer.depth_index); ++d) {
            if (layers_[d].dormant) continue;
            const Eigen::VectorXd in = augment_features(s.features, prior, layers_[d].depth_index);
            const Inference inf = layers_[d].model.infer(in);
            prior[d] = LayerOutput{inf.scores, inf.predicted};
        }
        layer.model.train_on_sample(augment_features(s.features, prior, layer.depth_index),
                                    s.target);
    }
}

void DeepStack::note_outputs_(const Eigen::VectorXd& x, const PerLayerOutputs& outputs,
                              int label) {
    for (Eigen::Index j = 0; j < n_; ++j) {
        auto& row = feature_target_[static_cast<std::size_t>(j)];
        for (int o = 0; o < m_; ++o)
            row[static_cast<std::size_t>(o)].add(x(j), o == label ? 1.0 : 0.0);
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (!outputs[i].has_value()) continue;
        for (std::size_t j = i + 1; j < layers_.size(); ++j) {
            if (!outputs[j].has_value()) continue;
            PairCorr& pc = pair_stats_[{i, j}];
            if (pc.per_class.empty()) pc.per_class.resize(static_cast<std::size_t>(m_));
            pc.top.add(top_score_(*outputs[i]), top_score_(*outputs[j]));
            for (int o = 0; o < m_; ++o)
                pc.per_class[static_cast<std::size_t>(o)].add(outputs[i]->scores(o),
                                                              outputs[j]->scores(o));
        }
    }
}

TrainBatchResult DeepStack::train_batch(const Batch& batch) {
    if (batch.samples.empty()) throw std::invalid_argument("train_batch: empty batch");
    timestamp_ += 1;

    TrainBatchResult result;
    result.predictions.reserve(batch.samples.size());

    if (layers_.empty()) {
        // First batch: nothing to predict with yet. The recorded
        // predictions are the uninformed default so the prequential
        // record stays honest.
        result.predictions.assign(batch.samples.size(), 0);
        bootstrap_(batch);
        result.verdict.stats.alpha_drift =
            dynamic_alpha(timestamp_, cfg_.drift.total_timestamps_hint, cfg_.drift.alpha_min_drift,
                          cfg_.drift.alpha_floor);
        result.verdict.stats.alpha_warning =
            dynamic_alpha(timestamp_, cfg_.drift.total_timestamps_hint,
                          cfg_.drift.alpha_min_warning, cfg_.drift.alpha_floor);
        return result;
    }

    // Test pass: predictions and accuracy bits before any update.
    std::vector<PerLayerOutputs> outputs;
    outputs.reserve(batch.samples.size());
    AccuracyVector acc;
    for (const auto& s : batch.samples) {
        ForwardResult fr = forward(s.features);
        result.predictions.push_back(fr.final_class);
        acc.push(fr.final_class != s.label);
        outputs.push_back(std::move(fr.per_layer));
    }

    // Step 1: voting weights, sample by sample.
    for (std::size_t i = 0; i < batch.samples.size(); ++i)
        update_voting_weights(outputs[i], batch.samples[i].label);

    // Step 2: feature activations from the accumulated statistics.
    for (std::size_t i = 0; i < batch.samples.size(); ++i)
        note_outputs_(batch.samples[i].features, outputs[i], batch.samples[i].label);
    run_feature_selection();

    // Step 3: structural simplification.
    if (!cfg_.layers_frozen) run_layer_merging();

    // Step 4: drift verdict and the matching structural action.
    result.verdict = assess(acc, timestamp_, cfg_.drift);

    if (cfg_.layers_frozen) {
        train_layer_on_(static_cast<std::size_t>(winning_layer() - 1), batch);
        return result;
    }

    switch (result.verdict.phase) {
        case DriftPhase::Drift: {
            std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
            pairs.reserve(batch.samples.size() + warning_buffer_.size());
            for (const auto& s : batch.samples) pairs.emplace_back(s.features, s.target);
            for (const auto& p : warning_buffer_) pairs.push_back(p);
            add_layer(pairs);
            drift_count_ += 1;
            break;
        }
        case DriftPhase::Warning:
            for (const auto& s : batch.samples)
                warning_buffer_.emplace_back(s.features, s.target);
            break;
        case DriftPhase::Stable:
            train_layer_on_(static_cast<std::size_t>(winning_layer() - 1), batch);
            warning_buffer_.clear();
            break;
    }
    return result;
}

std::size_t DeepStack::active_layer_count() const {
    std::size_t c = 0;
    for (const auto& l : layers_)
        if (!l.dormant) ++c;
    return c;
}

std::size_t DeepStack::total_rule_count() const {
    std::size_t c = 0;
    for (const auto& l : layers_)
        if (!l.dormant) c += l.model.rule_count();
    return c;
}

} // namespace devfnn
