#pragma once

#include <cstddef>
#include <vector>
#include <Eigen/Dense>

#include "devfnn/stats.hpp"

namespace devfnn {

struct CheckpointAccess;

/// One TSK fuzzy rule: a multivariate Gaussian premise over the layer
/// input plus a linear consequent over the Chebyshev-expanded input.
struct FuzzyRule {
    Eigen::VectorXd center;
    /// Inverse covariance of the premise; symmetric positive-definite.
    Eigen::MatrixXd inv_cov;
    /// (2n'+1) x m consequent weights.
    Eigen::MatrixXd consequent;
    /// (2n'+1) x (2n'+1) recursive-least-squares covariance.
    Eigen::MatrixXd rls_cov;
    std::size_t support = 1;
    /// Exponentially averaged recent normalized firing.
    double firing_ema = 1.0;
    /// Normalized firing accumulated since creation.
    double lifetime_contrib = 0.0;
    /// Potential+ dormancy flag; dormant rules sit out of inference and
    /// training until recalled.
    bool active = true;

    /// Model sample counter at creation; the rule's age is measured
    /// against it.
    std::size_t created_at = 0;
    /// Stable identity, unaffected by pruning of other rules.
    std::size_t id = 0;
    /// firing_ema snapshots at the last two forgetting windows.
    double ema_prev = 1.0;
    double ema_prev2 = 1.0;
};

struct GClassConfig {
    /// Rule-growth firing threshold: a sample fires a new rule only
    /// when no existing rule fires at least this strongly. 0 disables
    /// growth entirely.
    double vigilance = 0.1;
    /// Fraction of the mean lifetime contribution rate below which a
    /// rule is hard-pruned. 0 disables pruning.
    double prune_fraction = 0.1;
    /// Weight-decay coefficient of the consequent update.
    double weight_decay = 1e-5;
    /// New-rule RLS covariance is this times the identity.
    double rls_init_scale = 1e5;
    /// Prediction confidence at or below this marks a conflict case
    /// that deserves full training.
    double conflict_threshold = 0.55;
    /// Quantile band of the running input density; samples outside it
    /// are novel or redundant extremes and get full training.
    double density_band_low = 0.05;
    double density_band_high = 0.95;
    /// RLS covariance divisor for rules in decline; values below 1
    /// inflate the covariance and restore local plasticity. 1 is a
    /// no-op.
    double forgetting_inflation = 0.8;
    /// firing_ema below this sends a rule dormant.
    double dormancy_threshold = 1e-4;
    /// New-rule volume must not exceed this multiple of the median
    /// existing rule volume.
    double max_volume_ratio = 10.0;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

enum class TrainDecision { TrainFull, TrainConsequentOnly, Skip };

const char* to_string(TrainDecision d);

struct Inference {
    Eigen::VectorXd scores;
    int predicted = 0;
};

/// Incremental MIMO TSK fuzzy classifier. Rules grow when no existing
/// premise covers a sample, are pruned by lifetime contribution, go
/// dormant when long unfired, and are recalled when a past concept
/// returns. Consequents follow a fuzzily weighted recursive
/// least-squares update with weight decay; premises follow running
/// mean/covariance updates of the winning rule.
class GClassModel {
public:
    GClassModel(Eigen::Index input_dim, int class_count, GClassConfig cfg = {});

    /// exp of the negative premise quadratic form; 1 at the center.
    double firing_strength(const FuzzyRule& rule, const Eigen::VectorXd& x) const;

    /// Firing-weighted mean of per-rule consequent outputs over active
    /// rules. Ties in the argmax go to the lower class index.
    Inference infer(const Eigen::VectorXd& x) const;

    /// What-to-learn gate. Conflict (confidence at or below the
    /// threshold) or a density outside the running quantile band means
    /// full training; a confident in-band sample trains the consequent
    /// only; a confident in-band near-duplicate of the previous winner
    /// is skipped.
    TrainDecision select_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& scores) const;

    /// True when no rule fires at the vigilance level and the candidate
    /// rule's volume passes the median-volume check.
    bool grow_check(const Eigen::VectorXd& x) const;

    /// Appends a rule centered at x. Width comes from the distance to
    /// the nearest center, halved when that rule's dominant class
    /// differs from the label (class overlap calls for a tighter rule).
    FuzzyRule& init_rule(const Eigen::VectorXd& x, int label);

    /// FWGRLS step on every active rule with non-negligible normalized
    /// firing. A non-finite intermediate resets that rule's RLS
    /// covariance and retries once before throwing NumericError.
    void update_consequent(const Eigen::VectorXd& x, const Eigen::VectorXd& target);

    /// Moves the winning active rule's center and inverse covariance
    /// toward x via the rank-1 running-covariance identity; eigenvalues
    /// are clipped to [1e-6, 1e6].
    void update_premise(const Eigen::VectorXd& x);

    /// Hard-prunes rules whose lifetime contribution rate fell below
    /// prune_fraction times the mean, sends long-unfired rules dormant,
    /// and recalls a dormant rule that out-fires every active one on x.
    /// At least one active rule always survives.
    void prune_and_recall(const Eigen::VectorXd& x);

    /// One forgetting-window evaluation: rules whose firing_ema fell
    /// across the last two windows get their RLS covariance divided by
    /// forgetting_inflation (inflated for values below 1).
    void apply_forgetting();

    /// Full online step: infer, gate, grow or tune, update consequents,
    /// prune/recall, forget. Skipped samples only feed the density
    /// statistics.
    void train_on_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& target);

    const std::vector<FuzzyRule>& rules() const { return rules_; }
    std::vector<FuzzyRule>& rules() { return rules_; }
    std::size_t rule_count() const { return rules_.size(); }
    std::size_t active_rule_count() const;
    Eigen::Index input_dim() const { return input_dim_; }
    int class_count() const { return class_count_; }
    const GClassConfig& config() const { return cfg_; }
    std::size_t samples_seen() const { return samples_seen_; }

    /// Training samples between forgetting evaluations.
    static constexpr std::size_t forgetting_window = 50;

private:
    friend struct CheckpointAccess;

    // Premise quadratic forms and the normalized firings derived from
    // them; log-sum-exp keeps the normalization finite when every raw
    // firing underflows.
    std::vector<double> quad_forms_active_(const Eigen::VectorXd& x,
                                           std::vector<std::size_t>& idx) const;
    Eigen::VectorXd normalized_firings_(const std::vector<double>& q) const;
    void update_activity_(const Eigen::VectorXd& x);
    void note_density_(const Eigen::VectorXd& x);
    std::size_t winner_active_(const Eigen::VectorXd& x) const;

    Eigen::Index input_dim_;
    int class_count_;
    GClassConfig cfg_;
    std::vector<FuzzyRule> rules_;
    RecursiveDensity density_;
    P2Quantile band_low_;
    P2Quantile band_high_;
    std::size_t samples_seen_ = 0;
    std::size_t train_counter_ = 0;
    std::size_t next_rule_id_ = 0;
    long last_winner_id_ = -1;
};

} // namespace devfnn
