#pragma once

#include <array>
#include <cstddef>
#include <Eigen/Dense>

namespace devfnn {

struct CheckpointAccess;

/// Streaming first and second moments of a pair of variables.
/// Single-pass Welford recurrences; variances are population variances.
class BivariateStats {
public:
    void add(double u, double v);

    std::size_t count() const { return n_; }
    double mean_u() const { return mean_u_; }
    double mean_v() const { return mean_v_; }
    double var_u() const { return n_ > 0 ? m2_u_ / static_cast<double>(n_) : 0.0; }
    double var_v() const { return n_ > 0 ? m2_v_ / static_cast<double>(n_) : 0.0; }
    double covariance() const { return n_ > 0 ? cross_ / static_cast<double>(n_) : 0.0; }

private:
    friend struct CheckpointAccess;
    std::size_t n_ = 0;
    double mean_u_ = 0.0;
    double mean_v_ = 0.0;
    double m2_u_ = 0.0;
    double m2_v_ = 0.0;
    double cross_ = 0.0;
};

/// Pearson correlation of the accumulated pair. Returns 0 when either
/// variance vanishes or fewer than two observations were seen.
double pearson(const BivariateStats& s);

/// Maximum information compression index of the accumulated pair:
/// the smaller eigenvalue of the 2x2 covariance matrix. Zero means one
/// variable is a linear function of the other (nothing is lost by
/// dropping one); larger values mean more independent information.
/// Never negative; the radicand is clipped at zero against round-off.
double mici(const BivariateStats& s);

/// Streaming quantile estimate via the P-square marker algorithm.
/// Exact for the first five observations, O(1) memory afterwards.
class P2Quantile {
public:
    explicit P2Quantile(double quantile);

    void add(double x);
    bool ready() const { return count_ >= 5; }
    std::size_t count() const { return static_cast<std::size_t>(count_); }
    /// Current estimate. Requires ready().
    double value() const;

private:
    friend struct CheckpointAccess;
    double q_;
    long count_ = 0;
    std::array<double, 5> height_{};
    std::array<double, 5> pos_{};
    std::array<double, 5> desired_{};
    std::array<double, 5> step_{};
};

/// Recursive estimate of data-cloud density at a query point: the
/// Cauchy kernel 1 / (1 + mean squared distance to all points seen so
/// far), maintained from the running mean and mean squared norm alone.
class RecursiveDensity {
public:
    explicit RecursiveDensity(Eigen::Index dim);

    void add(const Eigen::VectorXd& x);
    /// Density of x against the points accumulated so far.
    /// Returns 1 when no points have been seen.
    double density(const Eigen::VectorXd& x) const;
    std::size_t count() const { return n_; }
    Eigen::Index dim() const { return mean_.size(); }

private:
    friend struct CheckpointAccess;
    Eigen::VectorXd mean_;
    double mean_sq_norm_ = 0.0;
    std::size_t n_ = 0;
};

} // namespace devfnn
