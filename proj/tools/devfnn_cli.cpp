#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "devfnn/checkpoint.hpp"
#include "devfnn/errors.hpp"
#include "devfnn/eval.hpp"
#include "devfnn/run_config.hpp"

namespace {

using namespace devfnn;

struct CommonFlags {
    std::string config_path;
    std::string generator;
    std::string dataset;
    std::string label_column;
    std::optional<long long> batch_size;
    std::optional<long long> seed;
    std::string out;
    std::string checkpoint;
    bool layers_frozen = false;
    bool print_config = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "Key=value configuration file");
    cmd->add_option("--generator", f.generator, "Stream generator: sea or hyperplane")
        ->check(CLI::IsMember({"sea", "hyperplane"}));
    cmd->add_option("--dataset", f.dataset, "CSV dataset path (overrides the generator)");
    cmd->add_option("--label-column", f.label_column, "CSV label column name or index");
    cmd->add_option("--batch-size", f.batch_size, "Samples per batch");
    cmd->add_option("--seed", f.seed, "Generator seed");
    cmd->add_option("--out", f.out, "Output path");
    cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint path to write after the run");
    cmd->add_flag("--layers-frozen", f.layers_frozen,
                  "Static variant: no layer growth, no merging");
    cmd->add_flag("--print-config", f.print_config,
                  "Print the fully resolved configuration and exit");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg;
    if (!f.config_path.empty()) cfg = load_run_config(f.config_path);
    if (!f.generator.empty()) {
        cfg.dataset.clear();
        cfg.generator.kind =
            (f.generator == "sea") ? GeneratorKind::Sea : GeneratorKind::Hyperplane;
    }
    if (!f.dataset.empty()) cfg.dataset = f.dataset;
    if (!f.label_column.empty()) cfg.label_column = f.label_column;
    if (f.batch_size) {
        if (*f.batch_size <= 0) throw std::invalid_argument("config: batch_size must be positive");
        cfg.generator.batch_size = static_cast<std::size_t>(*f.batch_size);
    }
    if (f.seed) cfg.generator.seed = static_cast<std::uint64_t>(*f.seed);
    if (!f.out.empty()) cfg.out = f.out;
    if (!f.checkpoint.empty()) cfg.checkpoint = f.checkpoint;
    if (f.layers_frozen) cfg.stack.layers_frozen = true;
    cfg.validate();
    return cfg;
}

std::vector<Batch> build_stream(const RunConfig& cfg) {
    if (cfg.uses_csv()) {
        CsvOptions opts;
        opts.label_column = cfg.label_column;
        opts.batch_size = cfg.generator.batch_size;
        opts.normalize = cfg.normalize;
        return load_csv(cfg.dataset, opts);
    }
    return generate(cfg.generator);
}

int cmd_generate(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    if (flags.print_config) {
        std::cout << serialize_run_config(cfg);
        return 0;
    }
    if (cfg.uses_csv())
        throw std::invalid_argument("generate: a generator must be configured, not a dataset");
    if (cfg.out.empty())
        throw std::invalid_argument("generate: an output path is required (--out or out=)");
    write_csv(cfg.out, generate(cfg.generator));
    std::cout << "wrote " << cfg.generator.total_samples << " samples to " << cfg.out << "\n";
    return 0;
}

void print_summary(std::ostream& os, const RunSummary& s) {
    auto row = [&os](const char* name, const MetricMoments& mm) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "  %-22s %10.4f  +/- %.4f", name, mm.mean, mm.std);
        os << buf << "\n";
    };
    os << "summary over " << s.batches << " batches (seed " << s.seed << ")\n";
    row("classification_rate", s.classification_rate);
    row("precision_macro", s.precision_macro);
    row("recall_macro", s.recall_macro);
    row("fuzzy_rule_count", s.fuzzy_rule_count);
    row("hidden_layer_count", s.hidden_layer_count);
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %-22s %10.2f", "wall_time_seconds", s.wall_time_seconds_total);
    os << buf << "\n";
}

int cmd_run(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    if (flags.print_config) {
        std::cout << serialize_run_config(cfg);
        return 0;
    }
    const std::vector<Batch> stream = build_stream(cfg);

    StackConfig stack_cfg = cfg.stack;
    stack_cfg.drift.total_timestamps_hint = cfg.total_timestamps_hint > 0
                                                ? cfg.total_timestamps_hint
                                                : static_cast<int>(stream.size());
    DeepStack stack(stream.front().feature_count(), stream.front().class_count(), stack_cfg);

    auto [metrics, summary] = prequential_run(stack, stream);
    summary.seed = cfg.uses_csv() ? 0 : cfg.generator.seed;

    const std::string echo = run_config_echo(cfg);
    if (!cfg.out.empty()) {
        std::ofstream out(cfg.out);
        if (!out) throw DataError("run: cannot open " + cfg.out + " for writing");
        write_metrics_ndjson(out, metrics, summary, echo);
        if (!out) throw DataError("run: write to " + cfg.out + " failed");
        print_summary(std::cout, summary);
    } else {
        write_metrics_ndjson(std::cout, metrics, summary, echo);
        print_summary(std::cerr, summary);
    }
    if (!cfg.checkpoint.empty()) save_checkpoint_file(stack, cfg.checkpoint);
    return 0;
}

int cmd_report(const std::vector<std::string>& files) {
    std::vector<BatchMetrics> pooled;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw DataError("report: cannot open " + path);
        auto part = read_metrics_ndjson(in, path);
        pooled.insert(pooled.end(), part.begin(), part.end());
    }
    if (pooled.empty()) throw DataError("report: no batch records found");
    print_summary(std::cout, summarize(pooled));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DEVFNN: deep evolving fuzzy network for drifting data streams"};
    app.require_subcommand(1);

    CommonFlags gen_flags;
    CLI::App* gen = app.add_subcommand("generate", "Write a synthetic stream to CSV");
    add_common_flags(gen, gen_flags);

    CommonFlags run_flags;
    CLI::App* run = app.add_subcommand("run", "Run a prequential experiment");
    add_common_flags(run, run_flags);

    std::vector<std::string> report_files;
    CLI::App* report = app.add_subcommand("report", "Aggregate NDJSON metrics files");
    report->add_option("files", report_files, "Metrics files to pool")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_flags);
        if (run->parsed()) return cmd_run(run_flags);
        if (report->parsed()) return cmd_report(report_files);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
