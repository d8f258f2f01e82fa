#pragma once

#include <string>

#include "devfnn/stack.hpp"
#include "devfnn/stream.hpp"

namespace devfnn {

/// Everything one experiment needs, parsed from a flat key=value file.
/// The stream source is either a generator (default) or a CSV dataset;
/// setting `dataset` selects CSV.
struct RunConfig {
    GeneratorConfig generator;
    std::string dataset;
    std::string label_column = "label";
    bool normalize = false;

    StackConfig stack;
    /// Expected batch count for the drift significance ramp; 0 derives
    /// it from the stream length at run time.
    int total_timestamps_hint = 0;

    std::string out;
    std::string checkpoint;

    bool uses_csv() const { return !dataset.empty(); }
    /// Re-validates every range constraint of the owning modules.
    void validate() const;
};

/// Parses key=value lines ('#' comments and blank lines allowed).
/// Unknown keys and malformed values throw std::invalid_argument naming
/// the offender.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Canonical text form: sorted keys, round-trip exact doubles.
/// parse(serialize(c)) == c for any valid c.
std::string serialize_run_config(const RunConfig& cfg);

/// JSON echo of the resolved configuration (for metrics records and
/// --print-config).
std::string run_config_echo(const RunConfig& cfg);

} // namespace devfnn
