#include "devfnn/gclass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "devfnn/chebyshev.hpp"
#include "devfnn/errors.hpp"

namespace devfnn {

namespace {

constexpr double kEmaRate = 0.05;
constexpr double kFiringNegligible = 1e-6;
constexpr double kEigenFloor = 1e-6;
constexpr double kEigenCeil = 1e6;
constexpr double kDuplicateFiring = 0.99;

void clip_spd(Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(kEigenFloor).cwiseMin(kEigenCeil);
    m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    m = ((m + m.transpose()) * 0.5).eval();
}

int argmax_low_tie(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = static_cast<int>(i);
    return best;
}

} // namespace

const char* to_string(TrainDecision d) {
    switch (d) {
        case TrainDecision::TrainFull: return "train_full";
        case TrainDecision::TrainConsequentOnly: return "train_consequent_only";
        case TrainDecision::Skip: return "skip";
    }
    return "unknown";
}

void GClassConfig::validate() const {
    if (!(vigilance >= 0.0 && vigilance < 1.0))
        throw std::invalid_argument("gclass: vigilance must lie in [0, 1)");
    if (!(prune_fraction >= 0.0 && prune_fraction < 1.0))
        throw std::invalid_argument("gclass: prune_fraction must lie in [0, 1)");
    if (!(weight_decay >= 0.0))
        throw std::invalid_argument("gclass: weight_decay must be nonnegative");
    if (!(rls_init_scale > 0.0))
        throw std::invalid_argument("gclass: rls_init_scale must be positive");
    if (!(conflict_threshold >= 0.0 && conflict_threshold < 1.0))
        throw std::invalid_argument("gclass: conflict_threshold must lie in [0, 1)");
    if (!(density_band_low > 0.0 && density_band_low < density_band_high &&
          density_band_high < 1.0))
        throw std::invalid_argument("gclass: density band must satisfy 0 < low < high < 1");
    if (!(forgetting_inflation > 0.0 && forgetting_inflation <= 1.0))
        throw std::invalid_argument("gclass: forgetting_inflation must lie in (0, 1]");
    if (!(dormancy_threshold >= 0.0))
        throw std::invalid_argument("gclass: dormancy_threshold must be nonnegative");
    if (!(max_volume_ratio > 0.0))
        throw std::invalid_argument("gclass: max_volume_ratio must be positive");
}

GClassModel::GClassModel(Eigen::Index input_dim, int class_count, GClassConfig cfg)
    : input_dim_(input_dim),
      class_count_(class_count),
      cfg_(cfg),
      density_(input_dim > 0 ? input_dim : 1),
      band_low_(cfg.density_band_low > 0.0 && cfg.density_band_low < 1.0 ? cfg.density_band_low
                                                                         : 0.05),
      band_high_(cfg.density_band_high > 0.0 && cfg.density_band_high < 1.0
                     ? cfg.density_band_high
                     : 0.95) {
    if (input_dim <= 0) throw std::invalid_argument("gclass: input_dim must be positive");
    if (class_count < 1) throw std::invalid_argument("gclass: class_count must be at least 1");
    cfg_.validate();
}

double GClassModel::firing_strength(const FuzzyRule& rule, const Eigen::VectorXd& x) const {
    if (x.size() != rule.center.size())
        throw std::invalid_argument("firing_strength: dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("firing_strength: non-finite input");
    const Eigen::VectorXd d = x - rule.center;
    const double q = d.dot(rule.inv_cov * d);
    return std::exp(-q);
}

std::vector<double> GClassModel::quad_forms_active_(const Eigen::VectorXd& x,
                                                    std::vector<std::size_t>& idx) const {
    idx.clear();
    std::vector<double> q;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (!rules_[i].active) continue;
        const Eigen::VectorXd d = x - rules_[i].center;
        q.push_back(d.dot(rules_[i].inv_cov * d));
        idx.push_back(i);
    }
    return q;
}

Eigen::VectorXd GClassModel::normalized_firings_(const std::vector<double>& q) const {
    Eigen::VectorXd lam(static_cast<Eigen::Index>(q.size()));
    const double qmin = *std::min_element(q.begin(), q.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        lam(static_cast<Eigen::Index>(i)) = std::exp(qmin - q[i]);
        sum += lam(static_cast<Eigen::Index>(i));
    }
    return lam / sum;
}

Inference GClassModel::infer(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim_) throw std::invalid_argument("infer: dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("infer: non-finite input");
    std::vector<std::size_t> idx;
    const auto q = quad_forms_active_(x, idx);
    if (q.empty()) throw std::logic_error("infer: no active rule; model invariant violated");

    const Eigen::VectorXd lam = normalized_firings_(q);
    const Eigen::VectorXd h = chebyshev_expand(x);
    Inference out;
    out.scores = Eigen::VectorXd::Zero(class_count_);
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.scores += lam(static_cast<Eigen::Index>(i)) *
                      (rules_[idx[i]].consequent.transpose() * h);
    out.predicted = argmax_low_tie(out.scores);
    return out;
}

TrainDecision GClassModel::select_sample(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& scores) const {
    // Confidence is the share of the top score against the runner-up,
    // on scores shifted to a nonnegative range. A flat tie means pure
    // conflict (0.5); a single-class model has no runner-up.
    double confidence = 1.0;
    if (scores.size() >= 2) {
        const double shift = std::max(0.0, -scores.minCoeff());
        double s1 = -std::numeric_limits<double>::infinity();
        double s2 = -std::numeric_limits<double>::infinity();
        for (Eigen::Index o = 0; o < scores.size(); ++o) {
            const double s = scores(o) + shift;
            if (s > s1) {
                s2 = s1;
                s1 = s;
            } else if (s > s2) {
                s2 = s;
            }
        }
        confidence = (s1 + s2 > 0.0) ? s1 / (s1 + s2) : 0.5;
    }

    const double d = density_.density(x);
    const bool band_known = band_low_.ready() && band_high_.ready();
    const bool outside_band = !band_known || d < band_low_.value() || d > band_high_.value();

    if (confidence <= cfg_.conflict_threshold || outside_band) return TrainDecision::TrainFull;

    // Confident, in-band: worth a consequent refinement unless it just
    // repeats the previous winner almost exactly.
    if (!rules_.empty()) {
        std::vector<std::size_t> idx;
        const auto q = quad_forms_active_(x, idx);
        if (!q.empty()) {
            const auto best = std::min_element(q.begin(), q.end()) - q.begin();
            const std::size_t winner = idx[static_cast<std::size_t>(best)];
            if (static_cast<long>(rules_[winner].id) == last_winner_id_ &&
                std::exp(-q[static_cast<std::size_t>(best)]) > kDuplicateFiring)
                return TrainDecision::Skip;
        }
    }
    return TrainDecision::TrainConsequentOnly;
}

bool GClassModel::grow_check(const Eigen::VectorXd& x) const {
    if (rules_.empty()) return true;
    double max_firing = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& r : rules_) {
        max_firing = std::max(max_firing, firing_strength(r, x));
        nearest = std::min(nearest, (x - r.center).norm());
    }
    if (max_firing >= cfg_.vigilance) return false;

    // Volume check in log space: the candidate width is the distance to
    // the nearest center, its volume sigma^n; existing volumes are
    // det(inv_cov)^(-1/2).
    const double sigma = std::max(nearest, 1e-12);
    const double cand_log_vol = static_cast<double>(input_dim_) * std::log(sigma);
    std::vector<double> log_vols;
    log_vols.reserve(rules_.size());
    for (const auto& r : rules_) {
        const Eigen::MatrixXd l = r.inv_cov.llt().matrixL();
        log_vols.push_back(-l.diagonal().array().log().sum());
    }
    std::nth_element(log_vols.begin(), log_vols.begin() + log_vols.size() / 2, log_vols.end());
    const double median_log_vol = log_vols[log_vols.size() / 2];
    return cand_log_vol <= std::log(cfg_.max_volume_ratio) + median_log_vol;
}

FuzzyRule& GClassModel::init_rule(const Eigen::VectorXd& x, int label) {
    if (x.size() != input_dim_) throw std::invalid_argument("init_rule: dimension mismatch");
    if (label < 0 || label >= class_count_)
        throw std::invalid_argument("init_rule: label out of range");

    double sigma = 0.5;
    if (!rules_.empty()) {
        std::size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            const double d = (x - rules_[i].center).norm();
            if (d < best) {
                best = d;
                nearest = i;
            }
        }
        const auto& nb = rules_[nearest];
        const Eigen::VectorXd at_center = nb.consequent.transpose() * chebyshev_expand(nb.center);
        const int dominant = argmax_low_tie(at_center);
        const double beta = (dominant != label) ? 0.5 : 1.0;
        sigma = beta * best;
    }
    sigma = std::max(sigma, 1e-3);

    const Eigen::Index L = 2 * input_dim_ + 1;
    FuzzyRule r;
    r.center = x;
    r.inv_cov = Eigen::MatrixXd::Identity(input_dim_, input_dim_) / (sigma * sigma);
    r.consequent = Eigen::MatrixXd::Zero(L, class_count_);
    r.consequent(0, label) = 1.0;
    r.rls_cov = cfg_.rls_init_scale * Eigen::MatrixXd::Identity(L, L);
    r.support = 1;
    r.firing_ema = 1.0;
    r.lifetime_contrib = 0.0;
    r.active = true;
    r.created_at = samples_seen_;
    r.id = next_rule_id_++;
    r.ema_prev = 1.0;
    r.ema_prev2 = 1.0;
    rules_.push_back(std::move(r));
    return rules_.back();
}

void GClassModel::update_consequent(const Eigen::VectorXd& x, const Eigen::VectorXd& target) {
    if (x.size() != input_dim_ || target.size() != class_count_)
        throw std::invalid_argument("update_consequent: dimension mismatch");
    std::vector<std::size_t> idx;
    const auto q = quad_forms_active_(x, idx);
    if (q.empty()) return;
    const Eigen::VectorXd lam = normalized_firings_(q);
    const Eigen::VectorXd h = chebyshev_expand(x);

    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double li = lam(static_cast<Eigen::Index>(i));
        if (li < kFiringNegligible) continue;
        FuzzyRule& r = rules_[idx[i]];

        auto attempt = [&](FuzzyRule& rule) -> bool {
            const Eigen::VectorXd oh = rule.rls_cov * h;
            const double denom = 1.0 / li + h.dot(oh);
            if (!std::isfinite(denom) || denom <= 0.0) return false;
            const Eigen::VectorXd g = oh / denom;
            Eigen::MatrixXd omega = rule.rls_cov - g * oh.transpose();
            omega = ((omega + omega.transpose()) * 0.5).eval();
            const Eigen::RowVectorXd err = target.transpose() - h.transpose() * rule.consequent;
            Eigen::MatrixXd w = rule.consequent + g * err -
                                cfg_.weight_decay * (omega * rule.consequent);
            if (!omega.allFinite() || !w.allFinite()) return false;
            rule.rls_cov = std::move(omega);
            rule.consequent = std::move(w);
            return true;
        };

        if (!attempt(r)) {
            r.rls_cov = cfg_.rls_init_scale *
                        Eigen::MatrixXd::Identity(r.rls_cov.rows(), r.rls_cov.cols());
            if (!attempt(r))
                throw NumericError("update_consequent: non-finite update persisted after RLS reset");
        }
    }
}

void GClassModel::update_premise(const Eigen::VectorXd& x) {
    if (x.size() != input_dim_) throw std::invalid_argument("update_premise: dimension mismatch");
    if (rules_.empty()) throw std::logic_error("update_premise: no rules");
    const std::size_t w = winner_active_(x);
    FuzzyRule& r = rules_[w];

    r.support += 1;
    const double n = static_cast<double>(r.support);
    r.center += (x - r.center) / n;
    const Eigen::VectorXd d = x - r.center;
    const double c = n - 1.0;

    // Rank-1 inverse update of the running covariance
    // cov <- (c*cov + d d^T) / n, applied directly to inv_cov.
    const Eigen::VectorXd ad = r.inv_cov * d;
    const double s = d.dot(ad);
    r.inv_cov = (n / c) * (r.inv_cov - (ad * ad.transpose()) / (c + s));
    r.inv_cov = ((r.inv_cov + r.inv_cov.transpose()) * 0.5).eval();
    clip_spd(r.inv_cov);
}

void GClassModel::prune_and_recall(const Eigen::VectorXd& x) {
    if (rules_.size() < 2) return;

    // ERS: contribution rate per lifetime sample, against the mean.
    std::vector<double> ratio(rules_.size());
    double mean_ratio = 0.0;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const double age =
            static_cast<double>(samples_seen_ - std::min(rules_[i].created_at, samples_seen_)) +
            1.0;
        ratio[i] = rules_[i].lifetime_contrib / age;
        mean_ratio += ratio[i];
    }
    mean_ratio /= static_cast<double>(rules_.size());
    const double cutoff = cfg_.prune_fraction * mean_ratio;

    std::vector<bool> doomed(rules_.size(), false);
    for (std::size_t i = 0; i < rules_.size(); ++i) doomed[i] = ratio[i] < cutoff;

    // The best-rate active rule is indelible: the model never loses its
    // last active rule.
    std::size_t best_active = rules_.size();
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (!rules_[i].active) continue;
        if (best_active == rules_.size() || ratio[i] > ratio[best_active]) best_active = i;
    }
    bool any_active_survives = false;
    for (std::size_t i = 0; i < rules_.size(); ++i)
        if (rules_[i].active && !doomed[i]) any_active_survives = true;
    if (!any_active_survives && best_active < rules_.size()) doomed[best_active] = false;

    std::vector<FuzzyRule> kept;
    kept.reserve(rules_.size());
    for (std::size_t i = 0; i < rules_.size(); ++i)
        if (!doomed[i]) kept.push_back(std::move(rules_[i]));
    rules_ = std::move(kept);

    // Potential+ dormancy, preserving at least one active rule.
    for (auto& r : rules_) {
        if (!r.active || r.firing_ema >= cfg_.dormancy_threshold) continue;
        if (active_rule_count() <= 1) break;
        r.active = false;
    }

    // Recall: a dormant rule that out-fires every active one on the
    // current sample carries a returning concept.
    double max_active_firing = 0.0;
    for (const auto& r : rules_)
        if (r.active) max_active_firing = std::max(max_active_firing, firing_strength(r, x));
    for (auto& r : rules_)
        if (!r.active && firing_strength(r, x) > max_active_firing) r.active = true;
}

void GClassModel::apply_forgetting() {
    for (auto& r : rules_) {
        // Inflation stops once a rule is as plastic as a fresh one. The
        // row-sum bound keeps every rls_cov eigenvalue at or below
        // rls_init_scale/kappa, inside the weight-decay stability region;
        // without the ceiling a rarely fired rule inflates without bound
        // and the decay term blows up its consequent.
        const bool below_ceiling =
            r.rls_cov.cwiseAbs().rowwise().sum().maxCoeff() < cfg_.rls_init_scale;
        if (r.firing_ema < r.ema_prev && r.ema_prev < r.ema_prev2 && below_ceiling)
            r.rls_cov /= cfg_.forgetting_inflation;
        r.ema_prev2 = r.ema_prev;
        r.ema_prev = r.firing_ema;
    }
}

void GClassModel::update_activity_(const Eigen::VectorXd& x) {
    std::vector<std::size_t> idx;
    const auto q = quad_forms_active_(x, idx);
    if (q.empty()) return;
    const Eigen::VectorXd lam = normalized_firings_(q);
    std::vector<bool> covered(rules_.size(), false);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        FuzzyRule& r = rules_[idx[i]];
        const double li = lam(static_cast<Eigen::Index>(i));
        r.firing_ema = (1.0 - kEmaRate) * r.firing_ema + kEmaRate * li;
        r.lifetime_contrib += li;
        covered[idx[i]] = true;
    }
    for (std::size_t i = 0; i < rules_.size(); ++i)
        if (!covered[i]) rules_[i].firing_ema *= 1.0 - kEmaRate;
}

void GClassModel::note_density_(const Eigen::VectorXd& x) {
    const double d = density_.density(x);
    band_low_.add(d);
    band_high_.add(d);
    density_.add(x);
}

std::size_t GClassModel::winner_active_(const Eigen::VectorXd& x) const {
    std::vector<std::size_t> idx;
    const auto q = quad_forms_active_(x, idx);
    if (q.empty()) throw std::logic_error("winner: no active rule");
    const auto best = std::min_element(q.begin(), q.end()) - q.begin();
    return idx[static_cast<std::size_t>(best)];
}

void GClassModel::train_on_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& target) {
    if (x.size() != input_dim_ || !x.allFinite())
        throw std::invalid_argument("train_on_sample: bad input vector");
    if (target.size() != class_count_ || !target.allFinite())
        throw std::invalid_argument("train_on_sample: bad target vector");
    samples_seen_ += 1;

    if (rules_.empty()) {
        init_rule(x, argmax_low_tie(target));
        update_consequent(x, target);
        update_activity_(x);
        train_counter_ += 1;
        if (train_counter_ % forgetting_window == 0) apply_forgetting();
        note_density_(x);
        last_winner_id_ = static_cast<long>(rules_.front().id);
        return;
    }

    const Inference inf = infer(x);
    const TrainDecision decision = select_sample(x, inf.scores);

    if (decision != TrainDecision::Skip) {
        if (decision == TrainDecision::TrainFull) {
            if (grow_check(x)) {
                // Creating the rule consumes the sample's premise
                // information; tuning would only shrink the fresh width.
                init_rule(x, argmax_low_tie(target));
            } else {
                update_premise(x);
            }
        }
        update_consequent(x, target);
        update_activity_(x);
        if (rules_.size() >= 2) prune_and_recall(x);
        train_counter_ += 1;
        if (train_counter_ % forgetting_window == 0) apply_forgetting();
    }

    note_density_(x);
    last_winner_id_ = static_cast<long>(rules_[winner_active_(x)].id);
}

std::size_t GClassModel::active_rule_count() const {
    std::size_t n = 0;
    for (const auto& r : rules_)
        if (r.active) ++n;
    return n;
}

} // namespace devfnn
