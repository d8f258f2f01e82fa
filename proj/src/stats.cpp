#include "devfnn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace devfnn {

void BivariateStats::add(double u, double v) {
    n_ += 1;
    const double n = static_cast<double>(n_);
    const double du = u - mean_u_;
    const double dv = v - mean_v_;
    mean_u_ += du / n;
    mean_v_ += dv / n;
    // du is the pre-update delta, (u - mean_u_) the post-update one;
    // their product telescopes to the population co-moment.
    m2_u_ += du * (u - mean_u_);
    m2_v_ += dv * (v - mean_v_);
    cross_ += du * (v - mean_v_);
}

double pearson(const BivariateStats& s) {
    if (s.count() < 2) return 0.0;
    const double denom = std::sqrt(s.var_u() * s.var_v());
    if (denom <= 0.0 || !std::isfinite(denom)) return 0.0;
    const double r = s.covariance() / denom;
    return std::clamp(r, -1.0, 1.0);
}

double mici(const BivariateStats& s) {
    const double v1 = s.var_u();
    const double v2 = s.var_v();
    const double zeta = pearson(s);
    const double sum = v1 + v2;
    const double radicand = sum * sum - 4.0 * v1 * v2 * (1.0 - zeta * zeta);
    const double root = std::sqrt(std::max(radicand, 0.0));
    return std::max(0.5 * (sum - root), 0.0);
}

P2Quantile::P2Quantile(double quantile) : q_(quantile) {
    if (!(quantile > 0.0 && quantile < 1.0))
        throw std::invalid_argument("P2Quantile: quantile must lie in (0, 1)");
    desired_ = {1.0, 1.0 + 2.0 * q_, 1.0 + 4.0 * q_, 3.0 + 2.0 * q_, 5.0};
    step_ = {0.0, q_ / 2.0, q_, (1.0 + q_) / 2.0, 1.0};
}

void P2Quantile::add(double x) {
    if (count_ < 5) {
        height_[static_cast<std::size_t>(count_)] = x;
        ++count_;
        if (count_ == 5) {
            std::sort(height_.begin(), height_.end());
            pos_ = {1.0, 2.0, 3.0, 4.0, 5.0};
        }
        return;
    }
    ++count_;

    std::size_t cell;
    if (x < height_[0]) {
        height_[0] = x;
        cell = 0;
    } else if (x >= height_[4]) {
        height_[4] = x;
        cell = 3;
    } else {
        cell = 0;
        while (cell < 3 && x >= height_[cell + 1]) ++cell;
    }

    for (std::size_t i = cell + 1; i < 5; ++i) pos_[i] += 1.0;
    for (std::size_t i = 0; i < 5; ++i) desired_[i] += step_[i];

    for (std::size_t i = 1; i <= 3; ++i) {
        const double d = desired_[i] - pos_[i];
        const bool up = d >= 1.0 && pos_[i + 1] - pos_[i] > 1.0;
        const bool down = d <= -1.0 && pos_[i - 1] - pos_[i] < -1.0;
        if (!up && !down) continue;
        const double s = up ? 1.0 : -1.0;

        // Piecewise-parabolic prediction, falling back to linear when the
        // parabola would break marker monotonicity.
        const double dp = pos_[i + 1] - pos_[i];
        const double dm = pos_[i - 1] - pos_[i];
        double h = height_[i] +
                   s / (dp - dm) *
                       ((s - dm) * (height_[i + 1] - height_[i]) / dp +
                        (dp - s) * (height_[i] - height_[i - 1]) / (-dm));
        if (h <= height_[i - 1] || h >= height_[i + 1]) {
            const std::size_t j = up ? i + 1 : i - 1;
            h = height_[i] + s * (height_[j] - height_[i]) / (pos_[j] - pos_[i]);
        }
        height_[i] = h;
        pos_[i] += s;
    }
}

double P2Quantile::value() const {
    if (count_ < 5)
        throw std::logic_error("P2Quantile: estimate requested before five observations");
    return height_[2];
}

RecursiveDensity::RecursiveDensity(Eigen::Index dim) : mean_(Eigen::VectorXd::Zero(dim)) {
    if (dim <= 0) throw std::invalid_argument("RecursiveDensity: dim must be positive");
}

void RecursiveDensity::add(const Eigen::VectorXd& x) {
    if (x.size() != mean_.size())
        throw std::invalid_argument("RecursiveDensity: dimension mismatch");
    n_ += 1;
    const double inv_n = 1.0 / static_cast<double>(n_);
    mean_ += (x - mean_) * inv_n;
    mean_sq_norm_ += (x.squaredNorm() - mean_sq_norm_) * inv_n;
}

double RecursiveDensity::density(const Eigen::VectorXd& x) const {
    if (x.size() != mean_.size())
        throw std::invalid_argument("RecursiveDensity: dimension mismatch");
    if (n_ == 0) return 1.0;
    // mean_i ||x - p_i||^2 = ||x||^2 - 2 x.mean + mean_i ||p_i||^2
    const double msd = x.squaredNorm() - 2.0 * x.dot(mean_) + mean_sq_norm_;
    return 1.0 / (1.0 + std::max(msd, 0.0));
}

} // namespace devfnn
