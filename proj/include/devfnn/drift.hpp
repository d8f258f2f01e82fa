#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace devfnn {

enum class DriftPhase { Stable, Warning, Drift };

const char* to_string(DriftPhase p);

/// Per-sample prediction outcomes for one batch: 1 marks a
/// misclassification, 0 a hit. Values are bounded by [0, 1], which is
/// what the Hoeffding bounds assume.
struct AccuracyVector {
    std::vector<std::uint8_t> bits;
    static constexpr double range_min = 0.0;
    static constexpr double range_max = 1.0;

    void push(bool misclassified) { bits.push_back(misclassified ? 1 : 0); }
    std::size_t size() const { return bits.size(); }
    double mean(std::size_t begin, std::size_t end) const;
};

struct DriftConfig {
    /// Significance ceilings for the drift and warning tests. The
    /// warning ceiling is the looser (larger) of the two.
    double alpha_min_drift = 0.05;
    double alpha_min_warning = 0.10;
    /// Floor that keeps the dynamic significance from vanishing.
    double alpha_floor = 1e-4;
    /// Expected total number of batches; scales how fast the dynamic
    /// significance tightens over the run.
    int total_timestamps_hint = 100;

    void validate() const;
};

/// Detector transparency: the partition means and the bounds they were
/// compared against.
struct DriftStats {
    double mean_full = 0.0;
    double mean_before = 0.0;
    double mean_after = 0.0;
    double eps_full = 0.0;
    double eps_before = 0.0;
    double eps_after = 0.0;
    double eps_drift = 0.0;
    double eps_warning = 0.0;
    double alpha_drift = 0.0;
    double alpha_warning = 0.0;
};

struct DriftVerdict {
    DriftPhase phase = DriftPhase::Stable;
    /// Length of the "before" partition when a cut was found.
    std::optional<std::size_t> cut;
    DriftStats stats;
};

/// Significance level at timestamp k of an expected T: starts near 0
/// (lenient bounds early, when estimates are noisy) and saturates at
/// alpha_min, never dropping below alpha_floor.
double dynamic_alpha(int k, int total_hint, double alpha_min, double alpha_floor);

/// One-sample Hoeffding deviation bound for a mean of `size` values in
/// [0, range]: range * sqrt(ln(1/alpha) / (2 size)).
double hoeffding_bound(std::size_t size, double alpha, double range = 1.0);

/// Two-sample bound on the difference of means of groups sized g and h.
double hoeffding_bound_two_sample(std::size_t size_g, std::size_t size_h, double alpha,
                                  double range = 1.0);

/// Locates the error-rate switching point: the cut is the prefix whose
/// mean plus Hoeffding bound is smallest, i.e. the last point where the
/// error level was still credibly at its low. Returns the cut length
/// (size of the "before" group). When the minimum sits on the full
/// vector the error never turned upward and there is no cut.
std::optional<std::size_t> find_cut(const AccuracyVector& acc, double alpha);

/// Full batch assessment at timestamp k: finds a cut at the drift
/// significance, then compares the before/after means against the
/// two-sample drift and warning bounds. No cut, or an empty "after"
/// partition, is Stable.
DriftVerdict assess(const AccuracyVector& acc, int timestamp, const DriftConfig& cfg);

} // namespace devfnn
