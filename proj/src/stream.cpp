#include "devfnn/stream.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "devfnn/errors.hpp"

namespace devfnn {

namespace {

// 53-bit mantissa draw in [0, 1); keeps streams bit-identical across
// standard library implementations, unlike uniform_real_distribution.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Step-function lookup: value of the last point at or before index i.
double schedule_step(const std::vector<DriftPoint>& sched, std::size_t i) {
    double v = sched.front().value;
    for (const auto& p : sched) {
        if (p.sample_index > i) break;
        v = p.value;
    }
    return v;
}

// Linear interpolation between schedule points, clamped at the ends.
double schedule_interp(const std::vector<DriftPoint>& sched, std::size_t i) {
    if (i <= sched.front().sample_index) return sched.front().value;
    if (i >= sched.back().sample_index) return sched.back().value;
    for (std::size_t k = 1; k < sched.size(); ++k) {
        if (i <= sched[k].sample_index) {
            const auto& a = sched[k - 1];
            const auto& b = sched[k];
            const double t = static_cast<double>(i - a.sample_index) /
                             static_cast<double>(b.sample_index - a.sample_index);
            return a.value + t * (b.value - a.value);
        }
    }
    return sched.back().value;
}

std::vector<Batch> pack_batches(std::vector<Sample> samples, std::size_t batch_size) {
    std::vector<Batch> out;
    Batch current;
    current.timestamp = 1;
    for (auto& s : samples) {
        current.samples.push_back(std::move(s));
        if (current.samples.size() == batch_size) {
            out.push_back(std::move(current));
            current = Batch{};
            current.timestamp = static_cast<int>(out.size()) + 1;
        }
    }
    if (!current.samples.empty()) out.push_back(std::move(current));
    return out;
}

// Probability mass of {f1 + f2 < theta} for f1, f2 uniform on [0, 10].
double sea_below_rate(double theta) {
    if (theta <= 0.0) return 0.0;
    if (theta >= 20.0) return 1.0;
    if (theta <= 10.0) return theta * theta / 200.0;
    const double r = 20.0 - theta;
    return 1.0 - r * r / 200.0;
}

} // namespace

Sample Sample::make(Eigen::VectorXd features, int label, int class_count) {
    if (label < 0 || label >= class_count)
        throw std::invalid_argument("Sample::make: label outside [0, class_count)");
    Sample s;
    s.features = std::move(features);
    s.label = label;
    s.target = Eigen::VectorXd::Zero(class_count);
    s.target(label) = 1.0;
    return s;
}

void GeneratorConfig::validate() const {
    if (total_samples == 0)
        throw std::invalid_argument("generator: total_samples must be positive");
    if (batch_size == 0)
        throw std::invalid_argument("generator: batch_size must be positive");
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0))
        throw std::invalid_argument("generator: noise_fraction must lie in [0, 1)");
    if (!(minority_fraction >= 0.0 && minority_fraction <= 0.5))
        throw std::invalid_argument("generator: minority_fraction must lie in [0, 0.5]");
    if (kind == GeneratorKind::Hyperplane && feature_count < 2)
        throw std::invalid_argument("generator: hyperplane needs at least 2 features");
    std::size_t prev = 0;
    bool first = true;
    for (const auto& p : drift_schedule) {
        if (!first && p.sample_index <= prev)
            throw std::invalid_argument("generator: drift schedule indices must be strictly increasing");
        if (p.sample_index >= total_samples)
            throw std::invalid_argument("generator: drift schedule index beyond the stream");
        if (!std::isfinite(p.value))
            throw std::invalid_argument("generator: drift schedule value must be finite");
        if (kind == GeneratorKind::Sea && !(p.value > 0.0 && p.value < 20.0))
            throw std::invalid_argument("generator: SEA theta must lie in (0, 20)");
        prev = p.sample_index;
        first = false;
    }
}

std::vector<Batch> generate_sea(const GeneratorConfig& cfg) {
    cfg.validate();
    std::vector<DriftPoint> sched = cfg.drift_schedule;
    if (sched.empty()) {
        const std::size_t q = std::max<std::size_t>(cfg.total_samples / 4, 1);
        sched = {{0, 4.0}, {q, 7.0}, {2 * q, 4.0}, {3 * q, 7.0}};
        // Degenerate quarter boundaries on tiny streams collapse to the
        // first concept.
        std::vector<DriftPoint> kept;
        for (const auto& p : sched)
            if (p.sample_index < cfg.total_samples &&
                (kept.empty() || p.sample_index > kept.back().sample_index))
                kept.push_back(p);
        sched = std::move(kept);
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<Sample> samples;
    samples.reserve(cfg.total_samples);
    for (std::size_t i = 0; i < cfg.total_samples; ++i) {
        const double theta = schedule_step(sched, i);
        int clean = 0;
        Eigen::VectorXd f(3);
        for (;;) {
            f(0) = 10.0 * uniform01(rng);
            f(1) = 10.0 * uniform01(rng);
            f(2) = 10.0 * uniform01(rng);
            clean = (f(0) + f(1) < theta) ? 0 : 1;
            if (cfg.minority_fraction <= 0.0) break;
            // Rejection step pushing the below-boundary class (label 0)
            // toward the requested fraction q from its natural rate r.
            const double r = sea_below_rate(theta);
            const double q = cfg.minority_fraction;
            double accept = 1.0;
            if (r < q && clean == 1)
                accept = r * (1.0 - q) / (q * (1.0 - r));
            else if (r > q && clean == 0)
                accept = (1.0 - r) * q / (r * (1.0 - q));
            if (uniform01(rng) < accept) break;
        }
        int label = clean;
        if (cfg.noise_fraction > 0.0 && uniform01(rng) < cfg.noise_fraction)
            label = 1 - label;
        samples.push_back(Sample::make(std::move(f), label, 2));
    }
    return pack_batches(std::move(samples), cfg.batch_size);
}

std::vector<Batch> generate_hyperplane(const GeneratorConfig& cfg) {
    cfg.validate();
    std::vector<DriftPoint> sched = cfg.drift_schedule;
    if (sched.empty()) {
        sched = {{0, 0.0}};
        if (cfg.total_samples > 1) sched.push_back({cfg.total_samples - 1, 1.5});
    }

    const int n = cfg.feature_count;
    const Eigen::VectorXd base = Eigen::VectorXd::Constant(n, 1.0 / n);

    std::mt19937_64 rng(cfg.seed);
    std::vector<Sample> samples;
    samples.reserve(cfg.total_samples);
    for (std::size_t i = 0; i < cfg.total_samples; ++i) {
        const double a = schedule_interp(sched, i);
        Eigen::VectorXd w = base;
        w(0) = std::cos(a) * base(0) - std::sin(a) * base(1);
        w(1) = std::sin(a) * base(0) + std::cos(a) * base(1);
        const double b = 0.5 * w.sum();

        Eigen::VectorXd x(n);
        for (int j = 0; j < n; ++j) x(j) = uniform01(rng);
        int label = (w.dot(x) > b) ? 1 : 0;
        if (cfg.noise_fraction > 0.0 && uniform01(rng) < cfg.noise_fraction)
            label = 1 - label;
        samples.push_back(Sample::make(std::move(x), label, 2));
    }
    return pack_batches(std::move(samples), cfg.batch_size);
}

std::vector<Batch> generate(const GeneratorConfig& cfg) {
    switch (cfg.kind) {
        case GeneratorKind::Sea: return generate_sea(cfg);
        case GeneratorKind::Hyperplane: return generate_hyperplane(cfg);
    }
    throw std::invalid_argument("generate: unknown generator kind");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stod(t, &used);
        return used == t.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_int(const std::string& s, long& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stol(t, &used);
        return used == t.size();
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace

std::vector<Batch> load_csv(const std::string& path, const CsvOptions& opts) {
    if (opts.batch_size == 0)
        throw std::invalid_argument("load_csv: batch_size must be positive");
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("load_csv: " + path + " is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2)
        throw DataError("load_csv: " + path + " needs at least one feature column and a label column");

    // The label column is named, or a 0-based index if the option is
    // all digits and no header matches it verbatim.
    std::size_t label_col = header.size();
    for (std::size_t j = 0; j < header.size(); ++j)
        if (trim(header[j]) == opts.label_column) label_col = j;
    if (label_col == header.size()) {
        long idx = 0;
        if (parse_int(opts.label_column, idx) && idx >= 0 &&
            static_cast<std::size_t>(idx) < header.size())
            label_col = static_cast<std::size_t>(idx);
    }
    if (label_col == header.size())
        throw DataError("load_csv: label column '" + opts.label_column + "' not found in " + path);

    const std::size_t n_features = header.size() - 1;
    std::vector<Eigen::VectorXd> features;
    std::vector<long> labels;
    long max_label = -1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("load_csv: " + path + " line " + std::to_string(line_no) +
                            ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Eigen::VectorXd x(n_features);
        Eigen::Index k = 0;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == label_col) continue;
            double v = 0.0;
            if (!parse_double(fields[j], v))
                throw DataError("load_csv: " + path + " line " + std::to_string(line_no) +
                                ": bad numeric value '" + trim(fields[j]) + "'");
            x(k++) = v;
        }
        long lab = 0;
        if (!parse_int(fields[label_col], lab))
            throw DataError("load_csv: " + path + " line " + std::to_string(line_no) +
                            ": bad label '" + trim(fields[label_col]) + "'");
        if (lab < 0)
            throw DataError("load_csv: " + path + " line " + std::to_string(line_no) +
                            ": negative label");
        max_label = std::max(max_label, lab);
        features.push_back(std::move(x));
        labels.push_back(lab);
    }
    if (features.empty()) throw DataError("load_csv: " + path + " has no data rows");

    const int class_count = static_cast<int>(max_label + 1);

    if (opts.normalize) {
        // Scaling statistics come from the first batch only, so later
        // batches never leak information backwards.
        const std::size_t head = std::min(opts.batch_size, features.size());
        Eigen::VectorXd lo = features.front();
        Eigen::VectorXd hi = features.front();
        for (std::size_t i = 1; i < head; ++i) {
            lo = lo.cwiseMin(features[i]);
            hi = hi.cwiseMax(features[i]);
        }
        Eigen::VectorXd span = hi - lo;
        for (Eigen::Index j = 0; j < span.size(); ++j)
            if (span(j) <= 0.0) span(j) = 1.0;
        for (auto& x : features) x = (x - lo).array() / span.array();
    }

    std::vector<Sample> samples;
    samples.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        samples.push_back(Sample::make(std::move(features[i]), static_cast<int>(labels[i]),
                                       class_count));
    return pack_batches(std::move(samples), opts.batch_size);
}

void write_csv(const std::string& path, const std::vector<Batch>& batches) {
    std::ofstream out(path);
    if (!out) throw DataError("write_csv: cannot open " + path + " for writing");
    if (batches.empty() || batches.front().samples.empty())
        throw std::invalid_argument("write_csv: nothing to write");
    const Eigen::Index n = batches.front().feature_count();
    for (Eigen::Index j = 0; j < n; ++j) out << 'f' << j << ',';
    out << "label\n";
    out.precision(17);
    for (const auto& b : batches)
        for (const auto& s : b.samples) {
            for (Eigen::Index j = 0; j < n; ++j) out << s.features(j) << ',';
            out << s.label << '\n';
        }
    if (!out) throw DataError("write_csv: write to " + path + " failed");
}

} // namespace devfnn
