#pragma once

#include <cstdint>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace devfnn {

/// One labelled observation. `target` is the one-hot encoding of
/// `label` and always has one entry per class.
struct Sample {
    Eigen::VectorXd features;
    int label = 0;
    Eigen::VectorXd target;

    static Sample make(Eigen::VectorXd features, int label, int class_count);
};

/// A contiguous chunk of the stream, processed as one unit.
/// `timestamp` is the 1-based position of the batch in the stream.
struct Batch {
    std::vector<Sample> samples;
    int timestamp = 0;

    std::size_t size() const { return samples.size(); }
    Eigen::Index feature_count() const {
        return samples.empty() ? 0 : samples.front().features.size();
    }
    int class_count() const {
        return samples.empty() ? 0 : static_cast<int>(samples.front().target.size());
    }
};

enum class GeneratorKind { Sea, Hyperplane };

/// One point of a drift schedule. For the SEA generator `value` is the
/// class boundary theta and takes effect abruptly at `sample_index`.
/// For the hyperplane generator `value` is a rotation angle in radians
/// and the angle is interpolated linearly between schedule points.
struct DriftPoint {
    std::size_t sample_index = 0;
    double value = 0.0;
};

struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::Sea;
    std::size_t total_samples = 50000;
    std::size_t batch_size = 500;
    std::uint64_t seed = 1;
    /// Probability that a label is flipped after the clean label is drawn.
    double noise_fraction = 0.05;
    /// SEA only: resample so the below-boundary class makes up this
    /// fraction of the stream. 0 disables rebalancing.
    double minority_fraction = 0.0;
    /// Hyperplane only: input dimensionality. SEA inputs are fixed at 3.
    int feature_count = 4;
    /// Empty means the generator default: SEA runs theta through
    /// 4, 7, 4, 7 over equal quarters; the hyperplane rotates from 0 to
    /// 1.5 radians across the whole stream.
    std::vector<DriftPoint> drift_schedule;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

std::vector<Batch> generate_sea(const GeneratorConfig& cfg);
std::vector<Batch> generate_hyperplane(const GeneratorConfig& cfg);
/// Dispatches on cfg.kind.
std::vector<Batch> generate(const GeneratorConfig& cfg);

struct CsvOptions {
    /// Column holding the class label, by header name or 0-based index.
    std::string label_column = "label";
    std::size_t batch_size = 500;
    /// Min-max scale features to [0, 1] using the first batch only.
    bool normalize = false;
};

/// Reads a headered CSV of numeric features plus one integer label
/// column. Labels must be non-negative; the class count is inferred as
/// max label + 1. Throws DataError with the offending line number on
/// malformed input.
std::vector<Batch> load_csv(const std::string& path, const CsvOptions& opts);

/// Writes batches as CSV with columns f0..f{n-1},label.
void write_csv(const std::string& path, const std::vector<Batch>& batches);

} // namespace devfnn
