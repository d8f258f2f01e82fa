#include "devfnn/drift.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace devfnn {

const char* to_string(DriftPhase p) {
    switch (p) {
        case DriftPhase::Stable: return "stable";
        case DriftPhase::Warning: return "warning";
        case DriftPhase::Drift: return "drift";
    }
    return "unknown";
}

double AccuracyVector::mean(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > bits.size())
        throw std::invalid_argument("AccuracyVector::mean: bad range");
    std::size_t sum = 0;
    for (std::size_t i = begin; i < end; ++i) sum += bits[i];
    return static_cast<double>(sum) / static_cast<double>(end - begin);
}

void DriftConfig::validate() const {
    if (!(alpha_min_drift > 0.0 && alpha_min_drift < 1.0))
        throw std::invalid_argument("drift: alpha_min_drift must lie in (0, 1)");
    if (!(alpha_min_warning > 0.0 && alpha_min_warning < 1.0))
        throw std::invalid_argument("drift: alpha_min_warning must lie in (0, 1)");
    if (alpha_min_warning < alpha_min_drift)
        throw std::invalid_argument("drift: warning significance must not be stricter than drift");
    if (!(alpha_floor > 0.0 && alpha_floor <= alpha_min_drift))
        throw std::invalid_argument("drift: alpha_floor must lie in (0, alpha_min_drift]");
    if (total_timestamps_hint < 1)
        throw std::invalid_argument("drift: total_timestamps_hint must be positive");
}

double dynamic_alpha(int k, int total_hint, double alpha_min, double alpha_floor) {
    // k = 0 is legal: the ramp starts at zero and the floor takes over
    if (k < 0 || total_hint < 1)
        throw std::invalid_argument("dynamic_alpha: timestamps must not be negative");
    const double ramp = 1.0 - std::exp(-static_cast<double>(k) / static_cast<double>(total_hint));
    return std::max(std::min(ramp, alpha_min), alpha_floor);
}

double hoeffding_bound(std::size_t size, double alpha, double range) {
    if (size == 0) throw std::invalid_argument("hoeffding_bound: empty group");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("hoeffding_bound: alpha must lie in (0, 1)");
    return range * std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<double>(size)));
}

double hoeffding_bound_two_sample(std::size_t size_g, std::size_t size_h, double alpha,
                                  double range) {
    if (size_g == 0 || size_h == 0)
        throw std::invalid_argument("hoeffding_bound_two_sample: empty group");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("hoeffding_bound_two_sample: alpha must lie in (0, 1)");
    const double g = static_cast<double>(size_g);
    const double h = static_cast<double>(size_h);
    return range * std::sqrt((g + h) / (2.0 * g * h) * std::log(1.0 / alpha));
}

std::optional<std::size_t> find_cut(const AccuracyVector& acc, double alpha) {
    const std::size_t n = acc.size();
    if (n < 2) return std::nullopt;
    const double range = AccuracyVector::range_max - AccuracyVector::range_min;

    // The cut is the prefix whose mean-plus-bound is smallest: the last
    // point where the error level was still credibly low. The bound
    // term discounts short prefixes, whose means are noise.
    std::size_t sum = 0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        sum += acc.bits[k - 1];
        const double mean_k = static_cast<double>(sum) / static_cast<double>(k);
        const double score = mean_k + hoeffding_bound(k, alpha, range);
        if (score <= best) {
            best = score;
            best_k = k;
        }
    }
    // A minimum on the full vector means the error never turned upward;
    // there is no suffix to test against.
    if (best_k >= n) return std::nullopt;
    return best_k;
}

DriftVerdict assess(const AccuracyVector& acc, int timestamp, const DriftConfig& cfg) {
    cfg.validate();
    if (timestamp < 1) throw std::invalid_argument("assess: timestamp must be positive");

    DriftVerdict v;
    v.stats.alpha_drift =
        dynamic_alpha(timestamp, cfg.total_timestamps_hint, cfg.alpha_min_drift, cfg.alpha_floor);
    v.stats.alpha_warning =
        dynamic_alpha(timestamp, cfg.total_timestamps_hint, cfg.alpha_min_warning, cfg.alpha_floor);

    const std::size_t n = acc.size();
    if (n < 2) return v;

    const double range = AccuracyVector::range_max - AccuracyVector::range_min;
    v.stats.mean_full = acc.mean(0, n);
    v.stats.eps_full = hoeffding_bound(n, v.stats.alpha_drift, range);

    const auto cut = find_cut(acc, v.stats.alpha_drift);
    if (!cut) return v;

    const std::size_t g = *cut;
    const std::size_t h = n - g;
    v.cut = g;
    v.stats.mean_before = acc.mean(0, g);
    v.stats.mean_after = acc.mean(g, n);
    v.stats.eps_before = hoeffding_bound(g, v.stats.alpha_drift, range);
    v.stats.eps_after = hoeffding_bound(h, v.stats.alpha_drift, range);
    v.stats.eps_drift = hoeffding_bound_two_sample(g, h, v.stats.alpha_drift, range);
    v.stats.eps_warning = hoeffding_bound_two_sample(g, h, v.stats.alpha_warning, range);

    const double gap = std::abs(v.stats.mean_after - v.stats.mean_before);
    if (gap >= v.stats.eps_drift)
        v.phase = DriftPhase::Drift;
    else if (gap >= v.stats.eps_warning)
        v.phase = DriftPhase::Warning;
    return v;
}

} // namespace devfnn
