#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "devfnn/checkpoint.hpp"
#include "devfnn/chebyshev.hpp"
#include "devfnn/drift.hpp"
#include "devfnn/eval.hpp"
#include "devfnn/stack.hpp"
#include "devfnn/stream.hpp"

namespace py = pybind11;
using namespace devfnn;

namespace {

Batch batch_from_arrays(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                        int class_count, int timestamp) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw std::invalid_argument("features and labels disagree on the sample count");
    Batch b;
    b.timestamp = timestamp;
    b.samples.reserve(labels.size());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        b.samples.push_back(Sample::make(features.row(i).transpose(), labels[static_cast<std::size_t>(i)],
                                         class_count));
    return b;
}

std::pair<Eigen::MatrixXd, std::vector<int>> stream_to_arrays(const std::vector<Batch>& stream) {
    std::size_t total = 0;
    for (const auto& b : stream) total += b.samples.size();
    const Eigen::Index n = stream.empty() ? 0 : stream.front().feature_count();
    Eigen::MatrixXd features(static_cast<Eigen::Index>(total), n);
    std::vector<int> labels;
    labels.reserve(total);
    Eigen::Index row = 0;
    for (const auto& b : stream)
        for (const auto& s : b.samples) {
            features.row(row++) = s.features.transpose();
            labels.push_back(s.label);
        }
    return {features, labels};
}

GeneratorConfig make_generator_config(const std::string& kind, std::size_t total_samples,
                                      std::size_t batch_size, std::uint64_t seed,
                                      double noise_fraction, double minority_fraction,
                                      int feature_count,
                                      const std::vector<std::pair<std::size_t, double>>& schedule) {
    GeneratorConfig cfg;
    if (kind == "sea")
        cfg.kind = GeneratorKind::Sea;
    else if (kind == "hyperplane")
        cfg.kind = GeneratorKind::Hyperplane;
    else
        throw std::invalid_argument("kind must be 'sea' or 'hyperplane'");
    cfg.total_samples = total_samples;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    cfg.noise_fraction = noise_fraction;
    cfg.minority_fraction = minority_fraction;
    cfg.feature_count = feature_count;
    for (const auto& [i, v] : schedule) cfg.drift_schedule.push_back({i, v});
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deep evolving fuzzy network over drifting data streams";

    py::enum_<DriftPhase>(m, "DriftPhase")
        .value("STABLE", DriftPhase::Stable)
        .value("WARNING", DriftPhase::Warning)
        .value("DRIFT", DriftPhase::Drift);

    py::class_<GClassConfig>(m, "GClassConfig")
        .def(py::init<>())
        .def_readwrite("vigilance", &GClassConfig::vigilance)
        .def_readwrite("prune_fraction", &GClassConfig::prune_fraction)
        .def_readwrite("weight_decay", &GClassConfig::weight_decay)
        .def_readwrite("rls_init_scale", &GClassConfig::rls_init_scale)
        .def_readwrite("conflict_threshold", &GClassConfig::conflict_threshold)
        .def_readwrite("density_band_low", &GClassConfig::density_band_low)
        .def_readwrite("density_band_high", &GClassConfig::density_band_high)
        .def_readwrite("forgetting_inflation", &GClassConfig::forgetting_inflation)
        .def_readwrite("dormancy_threshold", &GClassConfig::dormancy_threshold)
        .def_readwrite("max_volume_ratio", &GClassConfig::max_volume_ratio);

    py::class_<DriftConfig>(m, "DriftConfig")
        .def(py::init<>())
        .def_readwrite("alpha_min_drift", &DriftConfig::alpha_min_drift)
        .def_readwrite("alpha_min_warning", &DriftConfig::alpha_min_warning)
        .def_readwrite("alpha_floor", &DriftConfig::alpha_floor)
        .def_readwrite("total_timestamps_hint", &DriftConfig::total_timestamps_hint);

    py::class_<StackConfig> stack_cfg(m, "StackConfig");
    py::enum_<StackConfig::MergeCorrelation>(stack_cfg, "MergeCorrelation")
        .value("TOP_SCORE", StackConfig::MergeCorrelation::TopScore)
        .value("CLASS_AVERAGED", StackConfig::MergeCorrelation::ClassAveraged);
    stack_cfg.def(py::init<>())
        .def_readwrite("step_size", &StackConfig::step_size)
        .def_readwrite("feature_threshold", &StackConfig::feature_threshold)
        .def_readwrite("merge_threshold", &StackConfig::merge_threshold)
        .def_readwrite("layers_frozen", &StackConfig::layers_frozen)
        .def_readwrite("merge_correlation", &StackConfig::merge_correlation)
        .def_readwrite("gclass", &StackConfig::gclass)
        .def_readwrite("drift", &StackConfig::drift);

    m.def("chebyshev_expand", &chebyshev_expand, py::arg("x"),
          "Second-order Chebyshev functional-link expansion: [1, x1, 2*x1^2-1, ...]");

    m.def(
        "generate",
        [](const std::string& kind, std::size_t total_samples, std::size_t batch_size,
           std::uint64_t seed, double noise_fraction, double minority_fraction, int feature_count,
           const std::vector<std::pair<std::size_t, double>>& schedule) {
            return stream_to_arrays(generate(make_generator_config(
                kind, total_samples, batch_size, seed, noise_fraction, minority_fraction,
                feature_count, schedule)));
        },
        py::arg("kind"), py::arg("total_samples") = 50000, py::arg("batch_size") = 500,
        py::arg("seed") = 1, py::arg("noise_fraction") = 0.05,
        py::arg("minority_fraction") = 0.0, py::arg("feature_count") = 4,
        py::arg("drift_schedule") = std::vector<std::pair<std::size_t, double>>{},
        "Generate a drifting stream; returns (features, labels).");

    m.def(
        "assess",
        [](const std::vector<int>& bits, int timestamp, const DriftConfig& cfg) {
            AccuracyVector acc;
            for (int b : bits) acc.push(b != 0);
            const DriftVerdict v = assess(acc, timestamp, cfg);
            py::dict d;
            d["phase"] = v.phase;
            d["cut"] = v.cut ? py::cast(*v.cut) : py::none();
            d["mean_before"] = v.stats.mean_before;
            d["mean_after"] = v.stats.mean_after;
            d["eps_drift"] = v.stats.eps_drift;
            d["eps_warning"] = v.stats.eps_warning;
            return d;
        },
        py::arg("error_bits"), py::arg("timestamp"), py::arg("config") = DriftConfig{},
        "Hoeffding-bound drift assessment of a batch error vector.");

    py::class_<DeepStack>(m, "DeepStack")
        .def(py::init([](Eigen::Index n, int m_, const StackConfig& cfg) {
                 return DeepStack(n, m_, cfg);
             }),
             py::arg("feature_count"), py::arg("class_count"),
             py::arg("config") = StackConfig{})
        .def(
            "train_batch",
            [](DeepStack& self, const Eigen::MatrixXd& features, const std::vector<int>& labels,
               int timestamp) {
                const TrainBatchResult r = self.train_batch(
                    batch_from_arrays(features, labels, self.class_count(),
                                      timestamp > 0 ? timestamp : self.timestamp() + 1));
                py::dict d;
                d["predictions"] = r.predictions;
                d["phase"] = r.verdict.phase;
                d["cut"] = r.verdict.cut ? py::cast(*r.verdict.cut) : py::none();
                return d;
            },
            py::arg("features"), py::arg("labels"), py::arg("timestamp") = 0,
            "Prequential step: test on the batch, then train; returns the "
            "pre-training predictions and the drift verdict.")
        .def(
            "predict",
            [](const DeepStack& self, const Eigen::VectorXd& x) {
                return self.forward(x).final_class;
            },
            py::arg("x"), "Ensemble prediction for one sample.")
        .def_property_readonly("layer_count", &DeepStack::layer_count)
        .def_property_readonly("active_layer_count", &DeepStack::active_layer_count)
        .def_property_readonly("total_rule_count", &DeepStack::total_rule_count)
        .def_property_readonly("feature_weights",
                               [](const DeepStack& s) { return s.feature_weights(); })
        .def_property_readonly("timestamp", &DeepStack::timestamp)
        .def("winning_layer", &DeepStack::winning_layer)
        .def("save", [](const DeepStack& s) { return save_checkpoint(s); },
             "Serialize the full stack state to a JSON checkpoint string.")
        .def_static("load", [](const std::string& text) { return load_checkpoint(text); },
                    py::arg("checkpoint"), "Restore a stack from a checkpoint string.");

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
