#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "devfnn/drift.hpp"
#include "devfnn/stack.hpp"
#include "devfnn/stream.hpp"

namespace devfnn {

struct BatchMetrics {
    int batch_index = 0;
    double classification_rate = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    /// Rules across non-dormant layers, after training on the batch.
    std::size_t fuzzy_rule_count = 0;
    /// Non-dormant layers, after training on the batch.
    std::size_t hidden_layer_count = 0;
    DriftPhase drift_phase = DriftPhase::Stable;
    double wall_time_seconds = 0.0;
};

struct MetricMoments {
    double mean = 0.0;
    /// Population standard deviation (a single batch gives 0).
    double std = 0.0;
};

struct RunSummary {
    std::size_t batches = 0;
    std::uint64_t seed = 0;
    MetricMoments classification_rate;
    MetricMoments precision_macro;
    MetricMoments recall_macro;
    MetricMoments fuzzy_rule_count;
    MetricMoments hidden_layer_count;
    double wall_time_seconds_total = 0.0;
};

/// Macro-averaged precision and recall from an m x m count matrix with
/// rows = true class, columns = predicted class. Classes with an empty
/// denominator contribute 0 to the average.
std::pair<double, double> precision_recall(const Eigen::MatrixXi& confusion);

/// Test-then-train over the whole stream: per batch, predictions are
/// recorded and scored before the batch trains any parameter.
std::pair<std::vector<BatchMetrics>, RunSummary> prequential_run(DeepStack& stack,
                                                                 const std::vector<Batch>& stream);

/// Recomputes the summary from per-batch records, exactly as
/// prequential_run does; lets external tooling pool concatenated runs.
RunSummary summarize(const std::vector<BatchMetrics>& metrics);

/// One JSON object per line: a record per batch, then one summary
/// record. `config_echo` is embedded verbatim in the summary record
/// under "config"; pass "{}" when there is none.
void write_metrics_ndjson(std::ostream& out, const std::vector<BatchMetrics>& metrics,
                          const RunSummary& summary, const std::string& config_echo);

/// Reads the batch records of an NDJSON metrics stream (summary records
/// are skipped). Throws DataError naming the line on malformed input.
std::vector<BatchMetrics> read_metrics_ndjson(std::istream& in, const std::string& source_name);

} // namespace devfnn
