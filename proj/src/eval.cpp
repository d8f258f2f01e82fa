#include "devfnn/eval.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "devfnn/errors.hpp"

namespace devfnn {

using nlohmann::json;

std::pair<double, double> precision_recall(const Eigen::MatrixXi& confusion) {
    if (confusion.rows() != confusion.cols() || confusion.rows() == 0)
        throw std::invalid_argument("precision_recall: confusion matrix must be square");
    if ((confusion.array() < 0).any())
        throw std::invalid_argument("precision_recall: negative count");
    const Eigen::Index m = confusion.rows();
    double precision = 0.0;
    double recall = 0.0;
    for (Eigen::Index o = 0; o < m; ++o) {
        const double tp = confusion(o, o);
        const double col = confusion.col(o).sum();
        const double row = confusion.row(o).sum();
        precision += col > 0 ? tp / col : 0.0;
        recall += row > 0 ? tp / row : 0.0;
    }
    return {precision / static_cast<double>(m), recall / static_cast<double>(m)};
}

namespace {

MetricMoments moments(const std::vector<double>& xs) {
    MetricMoments mm;
    if (xs.empty()) return mm;
    double sum = 0.0;
    for (double x : xs) sum += x;
    mm.mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - mm.mean) * (x - mm.mean);
    mm.std = std::sqrt(sq / static_cast<double>(xs.size()));
    return mm;
}

} // namespace

RunSummary summarize(const std::vector<BatchMetrics>& metrics) {
    RunSummary s;
    s.batches = metrics.size();
    std::vector<double> cr, pr, rc, fr, hl;
    cr.reserve(metrics.size());
    for (const auto& m : metrics) {
        cr.push_back(m.classification_rate);
        pr.push_back(m.precision_macro);
        rc.push_back(m.recall_macro);
        fr.push_back(static_cast<double>(m.fuzzy_rule_count));
        hl.push_back(static_cast<double>(m.hidden_layer_count));
        s.wall_time_seconds_total += m.wall_time_seconds;
    }
    s.classification_rate = moments(cr);
    s.precision_macro = moments(pr);
    s.recall_macro = moments(rc);
    s.fuzzy_rule_count = moments(fr);
    s.hidden_layer_count = moments(hl);
    return s;
}

std::pair<std::vector<BatchMetrics>, RunSummary> prequential_run(
    DeepStack& stack, const std::vector<Batch>& stream) {
    if (stream.empty()) throw std::invalid_argument("prequential_run: empty stream");
    const int m = stream.front().class_count();

    std::vector<BatchMetrics> out;
    out.reserve(stream.size());
    for (const auto& batch : stream) {
        const auto t0 = std::chrono::steady_clock::now();
        const TrainBatchResult r = stack.train_batch(batch);
        const auto t1 = std::chrono::steady_clock::now();

        Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(m, m);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < batch.samples.size(); ++i) {
            const int truth = batch.samples[i].label;
            const int pred = r.predictions[i];
            confusion(truth, pred) += 1;
            if (truth == pred) ++correct;
        }

        BatchMetrics bm;
        bm.batch_index = batch.timestamp;
        bm.classification_rate =
            static_cast<double>(correct) / static_cast<double>(batch.samples.size());
        std::tie(bm.precision_macro, bm.recall_macro) = precision_recall(confusion);
        bm.fuzzy_rule_count = stack.total_rule_count();
        bm.hidden_layer_count = stack.active_layer_count();
        bm.drift_phase = r.verdict.phase;
        bm.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
        out.push_back(bm);
    }
    return {out, summarize(out)};
}

namespace {

json moments_json(const MetricMoments& mm) { return json{{"mean", mm.mean}, {"std", mm.std}}; }

DriftPhase phase_from_string(const std::string& s, const std::string& where) {
    if (s == "stable") return DriftPhase::Stable;
    if (s == "warning") return DriftPhase::Warning;
    if (s == "drift") return DriftPhase::Drift;
    throw DataError(where + ": unknown drift_phase '" + s + "'");
}

} // namespace

void write_metrics_ndjson(std::ostream& out, const std::vector<BatchMetrics>& metrics,
                          const RunSummary& summary, const std::string& config_echo) {
    for (const auto& m : metrics) {
        json rec{{"type", "batch"},
                 {"batch_index", m.batch_index},
                 {"classification_rate", m.classification_rate},
                 {"precision_macro", m.precision_macro},
                 {"recall_macro", m.recall_macro},
                 {"fuzzy_rule_count", m.fuzzy_rule_count},
                 {"hidden_layer_count", m.hidden_layer_count},
                 {"drift_phase", to_string(m.drift_phase)},
                 {"wall_time_seconds", m.wall_time_seconds}};
        out << rec.dump() << '\n';
    }
    json cfg = json::object();
    if (!config_echo.empty()) {
        cfg = json::parse(config_echo, nullptr, false);
        if (cfg.is_discarded()) cfg = config_echo;  // echo opaque text as a string
    }
    json rec{{"type", "summary"},
             {"batches", summary.batches},
             {"seed", summary.seed},
             {"classification_rate", moments_json(summary.classification_rate)},
             {"precision_macro", moments_json(summary.precision_macro)},
             {"recall_macro", moments_json(summary.recall_macro)},
             {"fuzzy_rule_count", moments_json(summary.fuzzy_rule_count)},
             {"hidden_layer_count", moments_json(summary.hidden_layer_count)},
             {"wall_time_seconds_total", summary.wall_time_seconds_total},
             {"config", cfg}};
    out << rec.dump() << '\n';
}

std::vector<BatchMetrics> read_metrics_ndjson(std::istream& in, const std::string& source_name) {
    std::vector<BatchMetrics> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source_name + " line " + std::to_string(line_no);
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw DataError(where + ": not valid JSON");
        if (!rec.is_object() || !rec.contains("type"))
            throw DataError(where + ": record has no type field");
        if (rec["type"] == "summary") continue;
        if (rec["type"] != "batch") throw DataError(where + ": unknown record type");
        try {
            BatchMetrics m;
            m.batch_index = rec.at("batch_index").get<int>();
            m.classification_rate = rec.at("classification_rate").get<double>();
            m.precision_macro = rec.at("precision_macro").get<double>();
            m.recall_macro = rec.at("recall_macro").get<double>();
            m.fuzzy_rule_count = rec.at("fuzzy_rule_count").get<std::size_t>();
            m.hidden_layer_count = rec.at("hidden_layer_count").get<std::size_t>();
            m.drift_phase = phase_from_string(rec.at("drift_phase").get<std::string>(), where);
            m.wall_time_seconds = rec.at("wall_time_seconds").get<double>();
            out.push_back(m);
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return out;
}

} // namespace devfnn
