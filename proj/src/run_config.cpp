#include "devfnn/run_config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "devfnn/errors.hpp"

namespace devfnn {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    // strtod instead of stod: underflow to a subnormal is a legal value
    // for us, and stod turns it into an exception
    const char* begin = v.c_str();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(begin, &end);
    const bool overflow = errno == ERANGE && std::abs(x) == HUGE_VAL;
    if (end != begin + v.size() || v.empty() || overflow || !std::isfinite(x))
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size())
            throw std::invalid_argument("config: bad integer value for " + key + ": '" + v + "'");
        return x;
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw std::invalid_argument("config: bad boolean value for " + key + ": '" + v + "'");
}

std::vector<DriftPoint> parse_schedule(const std::string& key, const std::string& v) {
    std::vector<DriftPoint> sched;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("config: " + key + " entries must be index:value, got '" +
                                        item + "'");
        DriftPoint p;
        p.sample_index =
            static_cast<std::size_t>(to_int(key, trim(item.substr(0, colon))));
        p.value = to_double(key, trim(item.substr(colon + 1)));
        sched.push_back(p);
    }
    return sched;
}

std::string schedule_text(const std::vector<DriftPoint>& sched) {
    std::string out;
    for (const auto& p : sched) {
        if (!out.empty()) out += ',';
        out += std::to_string(p.sample_index) + ':' + fmt_double(p.value);
    }
    return out;
}

} // namespace

void RunConfig::validate() const {
    generator.validate();
    stack.validate();
    if (total_timestamps_hint < 0)
        throw std::invalid_argument("config: total_timestamps_hint must be nonnegative");
    if (uses_csv() && label_column.empty())
        throw std::invalid_argument("config: label_column must not be empty");
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    bool saw_generator = false;
    bool saw_dataset = false;

    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value: '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "generator") {
            saw_generator = true;
            if (value == "sea")
                cfg.generator.kind = GeneratorKind::Sea;
            else if (value == "hyperplane")
                cfg.generator.kind = GeneratorKind::Hyperplane;
            else
                throw std::invalid_argument("config: unknown generator '" + value + "'");
        } else if (key == "dataset") {
            saw_dataset = true;
            cfg.dataset = value;
        } else if (key == "label_column") {
            cfg.label_column = value;
        } else if (key == "normalize") {
            cfg.normalize = to_bool(key, value);
        } else if (key == "total_samples") {
            cfg.generator.total_samples = static_cast<std::size_t>(to_int(key, value));
        } else if (key == "batch_size") {
            cfg.generator.batch_size = static_cast<std::size_t>(to_int(key, value));
        } else if (key == "seed") {
            cfg.generator.seed = static_cast<std::uint64_t>(to_int(key, value));
        } else if (key == "noise_fraction") {
            cfg.generator.noise_fraction = to_double(key, value);
        } else if (key == "minority_fraction") {
            cfg.generator.minority_fraction = to_double(key, value);
        } else if (key == "feature_count") {
            cfg.generator.feature_count = static_cast<int>(to_int(key, value));
        } else if (key == "drift_schedule") {
            cfg.generator.drift_schedule = parse_schedule(key, value);
        } else if (key == "step_size") {
            cfg.stack.step_size = to_double(key, value);
        } else if (key == "feature_threshold") {
            cfg.stack.feature_threshold = to_double(key, value);
        } else if (key == "merge_threshold") {
            cfg.stack.merge_threshold = to_double(key, value);
        } else if (key == "merge_correlation") {
            if (value == "top_score")
                cfg.stack.merge_correlation = StackConfig::MergeCorrelation::TopScore;
            else if (value == "class_averaged")
                cfg.stack.merge_correlation = StackConfig::MergeCorrelation::ClassAveraged;
            else
                throw std::invalid_argument("config: unknown merge_correlation '" + value + "'");
        } else if (key == "layers_frozen") {
            cfg.stack.layers_frozen = to_bool(key, value);
        } else if (key == "vigilance") {
            cfg.stack.gclass.vigilance = to_double(key, value);
        } else if (key == "prune_fraction") {
            cfg.stack.gclass.prune_fraction = to_double(key, value);
        } else if (key == "weight_decay") {
            cfg.stack.gclass.weight_decay = to_double(key, value);
        } else if (key == "rls_init_scale") {
            cfg.stack.gclass.rls_init_scale = to_double(key, value);
        } else if (key == "conflict_threshold") {
            cfg.stack.gclass.conflict_threshold = to_double(key, value);
        } else if (key == "density_band_low") {
            cfg.stack.gclass.density_band_low = to_double(key, value);
        } else if (key == "density_band_high") {
            cfg.stack.gclass.density_band_high = to_double(key, value);
        } else if (key == "forgetting_inflation") {
            cfg.stack.gclass.forgetting_inflation = to_double(key, value);
        } else if (key == "dormancy_threshold") {
            cfg.stack.gclass.dormancy_threshold = to_double(key, value);
        } else if (key == "max_volume_ratio") {
            cfg.stack.gclass.max_volume_ratio = to_double(key, value);
        } else if (key == "alpha_min_drift") {
            cfg.stack.drift.alpha_min_drift = to_double(key, value);
        } else if (key == "alpha_min_warning") {
            cfg.stack.drift.alpha_min_warning = to_double(key, value);
        } else if (key == "alpha_floor") {
            cfg.stack.drift.alpha_floor = to_double(key, value);
        } else if (key == "total_timestamps_hint") {
            cfg.total_timestamps_hint = static_cast<int>(to_int(key, value));
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "checkpoint") {
            cfg.checkpoint = value;
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    if (saw_generator && saw_dataset)
        throw std::invalid_argument("config: set either generator or dataset, not both");
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "alpha_floor=" << fmt_double(cfg.stack.drift.alpha_floor) << '\n';
    out << "alpha_min_drift=" << fmt_double(cfg.stack.drift.alpha_min_drift) << '\n';
    out << "alpha_min_warning=" << fmt_double(cfg.stack.drift.alpha_min_warning) << '\n';
    out << "batch_size=" << cfg.generator.batch_size << '\n';
    if (!cfg.checkpoint.empty()) out << "checkpoint=" << cfg.checkpoint << '\n';
    out << "conflict_threshold=" << fmt_double(cfg.stack.gclass.conflict_threshold) << '\n';
    if (cfg.uses_csv()) out << "dataset=" << cfg.dataset << '\n';
    out << "density_band_high=" << fmt_double(cfg.stack.gclass.density_band_high) << '\n';
    out << "density_band_low=" << fmt_double(cfg.stack.gclass.density_band_low) << '\n';
    out << "dormancy_threshold=" << fmt_double(cfg.stack.gclass.dormancy_threshold) << '\n';
    if (!cfg.generator.drift_schedule.empty())
        out << "drift_schedule=" << schedule_text(cfg.generator.drift_schedule) << '\n';
    out << "feature_count=" << cfg.generator.feature_count << '\n';
    out << "feature_threshold=" << fmt_double(cfg.stack.feature_threshold) << '\n';
    out << "forgetting_inflation=" << fmt_double(cfg.stack.gclass.forgetting_inflation) << '\n';
    if (!cfg.uses_csv())
        out << "generator="
            << (cfg.generator.kind == GeneratorKind::Sea ? "sea" : "hyperplane") << '\n';
    if (cfg.uses_csv()) out << "label_column=" << cfg.label_column << '\n';
    out << "layers_frozen=" << (cfg.stack.layers_frozen ? 1 : 0) << '\n';
    out << "max_volume_ratio=" << fmt_double(cfg.stack.gclass.max_volume_ratio) << '\n';
    out << "merge_correlation="
        << (cfg.stack.merge_correlation == StackConfig::MergeCorrelation::TopScore
                ? "top_score"
                : "class_averaged")
        << '\n';
    out << "merge_threshold=" << fmt_double(cfg.stack.merge_threshold) << '\n';
    out << "minority_fraction=" << fmt_double(cfg.generator.minority_fraction) << '\n';
    out << "noise_fraction=" << fmt_double(cfg.generator.noise_fraction) << '\n';
    out << "normalize=" << (cfg.normalize ? 1 : 0) << '\n';
    if (!cfg.out.empty()) out << "out=" << cfg.out << '\n';
    out << "prune_fraction=" << fmt_double(cfg.stack.gclass.prune_fraction) << '\n';
    out << "rls_init_scale=" << fmt_double(cfg.stack.gclass.rls_init_scale) << '\n';
    out << "seed=" << cfg.generator.seed << '\n';
    out << "step_size=" << fmt_double(cfg.stack.step_size) << '\n';
    out << "total_samples=" << cfg.generator.total_samples << '\n';
    out << "total_timestamps_hint=" << cfg.total_timestamps_hint << '\n';
    out << "vigilance=" << fmt_double(cfg.stack.gclass.vigilance) << '\n';
    out << "weight_decay=" << fmt_double(cfg.stack.gclass.weight_decay) << '\n';
    return out.str();
}

std::string run_config_echo(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    std::stringstream ss(serialize_run_config(cfg));
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        j[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return j.dump();
}

} // namespace devfnn
