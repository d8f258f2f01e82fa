#include "devfnn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "devfnn/errors.hpp"

namespace devfnn {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "devfnn-checkpoint";
constexpr int kVersion = 1;

json vec_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from(const json& a, const std::string& where) {
    if (!a.is_array()) throw DataError("checkpoint: " + where + " is not an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd mat_from(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw DataError("checkpoint: " + where + " is not a matrix object");
    const Eigen::Index rows = j["rows"].get<Eigen::Index>();
    const Eigen::Index cols = j["cols"].get<Eigen::Index>();
    const json& data = j["data"];
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows)
        throw DataError("checkpoint: " + where + " row count mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = data[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw DataError("checkpoint: " + where + " column count mismatch");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json gclass_config_json(const GClassConfig& c) {
    return json{{"vigilance", c.vigilance},
                {"prune_fraction", c.prune_fraction},
                {"weight_decay", c.weight_decay},
                {"rls_init_scale", c.rls_init_scale},
                {"conflict_threshold", c.conflict_threshold},
                {"density_band_low", c.density_band_low},
                {"density_band_high", c.density_band_high},
                {"forgetting_inflation", c.forgetting_inflation},
                {"dormancy_threshold", c.dormancy_threshold},
                {"max_volume_ratio", c.max_volume_ratio}};
}

GClassConfig gclass_config_from(const json& j) {
    GClassConfig c;
    c.vigilance = j.at("vigilance").get<double>();
    c.prune_fraction = j.at("prune_fraction").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.rls_init_scale = j.at("rls_init_scale").get<double>();
    c.conflict_threshold = j.at("conflict_threshold").get<double>();
    c.density_band_low = j.at("density_band_low").get<double>();
    c.density_band_high = j.at("density_band_high").get<double>();
    c.forgetting_inflation = j.at("forgetting_inflation").get<double>();
    c.dormancy_threshold = j.at("dormancy_threshold").get<double>();
    c.max_volume_ratio = j.at("max_volume_ratio").get<double>();
    return c;
}

json drift_config_json(const DriftConfig& c) {
    return json{{"alpha_min_drift", c.alpha_min_drift},
                {"alpha_min_warning", c.alpha_min_warning},
                {"alpha_floor", c.alpha_floor},
                {"total_timestamps_hint", c.total_timestamps_hint}};
}

DriftConfig drift_config_from(const json& j) {
    DriftConfig c;
    c.alpha_min_drift = j.at("alpha_min_drift").get<double>();
    c.alpha_min_warning = j.at("alpha_min_warning").get<double>();
    c.alpha_floor = j.at("alpha_floor").get<double>();
    c.total_timestamps_hint = j.at("total_timestamps_hint").get<int>();
    return c;
}

json stack_config_json(const StackConfig& c) {
    return json{{"step_size", c.step_size},
                {"feature_threshold", c.feature_threshold},
                {"merge_threshold", c.merge_threshold},
                {"layers_frozen", c.layers_frozen},
                {"merge_correlation",
                 c.merge_correlation == StackConfig::MergeCorrelation::TopScore ? "top_score"
                                                                                : "class_averaged"},
                {"gclass", gclass_config_json(c.gclass)},
                {"drift", drift_config_json(c.drift)}};
}

StackConfig stack_config_from(const json& j) {
    StackConfig c;
    c.step_size = j.at("step_size").get<double>();
    c.feature_threshold = j.at("feature_threshold").get<double>();
    c.merge_threshold = j.at("merge_threshold").get<double>();
    c.layers_frozen = j.at("layers_frozen").get<bool>();
    const std::string mc = j.at("merge_correlation").get<std::string>();
    if (mc == "top_score")
        c.merge_correlation = StackConfig::MergeCorrelation::TopScore;
    else if (mc == "class_averaged")
        c.merge_correlation = StackConfig::MergeCorrelation::ClassAveraged;
    else
        throw DataError("checkpoint: unknown merge_correlation '" + mc + "'");
    c.gclass = gclass_config_from(j.at("gclass"));
    c.drift = drift_config_from(j.at("drift"));
    return c;
}

} // namespace

struct CheckpointAccess {
    static json bivar_json(const BivariateStats& s) {
        return json{{"n", s.n_},     {"mean_u", s.mean_u_}, {"mean_v", s.mean_v_},
                    {"m2_u", s.m2_u_}, {"m2_v", s.m2_v_},     {"cross", s.cross_}};
    }
    static BivariateStats bivar_from(const json& j) {
        BivariateStats s;
        s.n_ = j.at("n").get<std::size_t>();
        s.mean_u_ = j.at("mean_u").get<double>();
        s.mean_v_ = j.at("mean_v").get<double>();
        s.m2_u_ = j.at("m2_u").get<double>();
        s.m2_v_ = j.at("m2_v").get<double>();
        s.cross_ = j.at("cross").get<double>();
        return s;
    }

    static json quantile_json(const P2Quantile& q) {
        return json{{"q", q.q_},           {"count", q.count_},     {"height", q.height_},
                    {"pos", q.pos_},       {"desired", q.desired_}, {"step", q.step_}};
    }
    static P2Quantile quantile_from(const json& j) {
        P2Quantile q(j.at("q").get<double>());
        q.count_ = j.at("count").get<long>();
        q.height_ = j.at("height").get<std::array<double, 5>>();
        q.pos_ = j.at("pos").get<std::array<double, 5>>();
        q.desired_ = j.at("desired").get<std::array<double, 5>>();
        q.step_ = j.at("step").get<std::array<double, 5>>();
        return q;
    }

    static json density_json(const RecursiveDensity& d) {
        return json{{"mean", vec_json(d.mean_)}, {"mean_sq_norm", d.mean_sq_norm_}, {"n", d.n_}};
    }
    static RecursiveDensity density_from(const json& j) {
        RecursiveDensity d(std::max<Eigen::Index>(
            static_cast<Eigen::Index>(j.at("mean").size()), 1));
        d.mean_ = vec_from(j.at("mean"), "density.mean");
        d.mean_sq_norm_ = j.at("mean_sq_norm").get<double>();
        d.n_ = j.at("n").get<std::size_t>();
        return d;
    }

    static json rule_json(const FuzzyRule& r) {
        return json{{"center", vec_json(r.center)},
                    {"inv_cov", mat_json(r.inv_cov)},
                    {"consequent", mat_json(r.consequent)},
                    {"rls_cov", mat_json(r.rls_cov)},
                    {"support", r.support},
                    {"firing_ema", r.firing_ema},
                    {"lifetime_contrib", r.lifetime_contrib},
                    {"active", r.active},
                    {"created_at", r.created_at},
                    {"id", r.id},
                    {"ema_prev", r.ema_prev},
                    {"ema_prev2", r.ema_prev2}};
    }
    static FuzzyRule rule_from(const json& j) {
        FuzzyRule r;
        r.center = vec_from(j.at("center"), "rule.center");
        r.inv_cov = mat_from(j.at("inv_cov"), "rule.inv_cov");
        r.consequent = mat_from(j.at("consequent"), "rule.consequent");
        r.rls_cov = mat_from(j.at("rls_cov"), "rule.rls_cov");
        r.support = j.at("support").get<std::size_t>();
        r.firing_ema = j.at("firing_ema").get<double>();
        r.lifetime_contrib = j.at("lifetime_contrib").get<double>();
        r.active = j.at("active").get<bool>();
        r.created_at = j.at("created_at").get<std::size_t>();
        r.id = j.at("id").get<std::size_t>();
        r.ema_prev = j.at("ema_prev").get<double>();
        r.ema_prev2 = j.at("ema_prev2").get<double>();
        return r;
    }

    static json model_json(const GClassModel& m) {
        json rules = json::array();
        for (const auto& r : m.rules_) rules.push_back(rule_json(r));
        return json{{"input_dim", m.input_dim_},
                    {"class_count", m.class_count_},
                    {"config", gclass_config_json(m.cfg_)},
                    {"rules", std::move(rules)},
                    {"density", density_json(m.density_)},
                    {"band_low", quantile_json(m.band_low_)},
                    {"band_high", quantile_json(m.band_high_)},
                    {"samples_seen", m.samples_seen_},
                    {"train_counter", m.train_counter_},
                    {"next_rule_id", m.next_rule_id_},
                    {"last_winner_id", m.last_winner_id_}};
    }
    static GClassModel model_from(const json& j) {
        GClassModel m(j.at("input_dim").get<Eigen::Index>(), j.at("class_count").get<int>(),
                      gclass_config_from(j.at("config")));
        for (const auto& rj : j.at("rules")) m.rules_.push_back(rule_from(rj));
        m.density_ = density_from(j.at("density"));
        m.band_low_ = quantile_from(j.at("band_low"));
        m.band_high_ = quantile_from(j.at("band_high"));
        m.samples_seen_ = j.at("samples_seen").get<std::size_t>();
        m.train_counter_ = j.at("train_counter").get<std::size_t>();
        m.next_rule_id_ = j.at("next_rule_id").get<std::size_t>();
        m.last_winner_id_ = j.at("last_winner_id").get<long>();
        return m;
    }

    static json stack_json(const DeepStack& s) {
        json layers = json::array();
        for (const auto& l : s.layers_)
            layers.push_back(json{{"model", model_json(l.model)},
                                  {"voting_weight", l.voting_weight},
                                  {"decay", l.decay},
                                  {"dormant", l.dormant},
                                  {"depth_index", l.depth_index}});
        json buffer = json::array();
        for (const auto& [x, t] : s.warning_buffer_)
            buffer.push_back(json{{"x", vec_json(x)}, {"target", vec_json(t)}});
        json ft = json::array();
        for (const auto& row : s.feature_target_) {
            json r = json::array();
            for (const auto& b : row) r.push_back(bivar_json(b));
            ft.push_back(std::move(r));
        }
        json pairs = json::array();
        for (const auto& [key, pc] : s.pair_stats_) {
            json per_class = json::array();
            for (const auto& b : pc.per_class) per_class.push_back(bivar_json(b));
            pairs.push_back(json{{"i", key.first},
                                 {"j", key.second},
                                 {"top", bivar_json(pc.top)},
                                 {"per_class", std::move(per_class)}});
        }
        return json{{"format", kFormat},
                    {"version", kVersion},
                    {"feature_count", s.n_},
                    {"class_count", s.m_},
                    {"config", stack_config_json(s.cfg_)},
                    {"feature_weights", vec_json(s.feature_weights_)},
                    {"layers", std::move(layers)},
                    {"warning_buffer", std::move(buffer)},
                    {"feature_target", std::move(ft)},
                    {"pair_stats", std::move(pairs)},
                    {"timestamp", s.timestamp_},
                    {"drift_count", s.drift_count_}};
    }

    static DeepStack stack_from(const json& j) {
        if (!j.is_object() || j.value("format", "") != kFormat)
            throw DataError("checkpoint: unrecognized format");
        if (j.value("version", -1) != kVersion)
            throw DataError("checkpoint: unsupported version " +
                            std::to_string(j.value("version", -1)));
        DeepStack s(j.at("feature_count").get<Eigen::Index>(), j.at("class_count").get<int>(),
                    stack_config_from(j.at("config")));
        s.feature_weights_ = vec_from(j.at("feature_weights"), "feature_weights");
        for (const auto& lj : j.at("layers")) {
            LayerState l{model_from(lj.at("model")), lj.at("voting_weight").get<double>(),
                         lj.at("decay").get<double>(), lj.at("dormant").get<bool>(),
                         lj.at("depth_index").get<int>()};
            s.layers_.push_back(std::move(l));
        }
        for (const auto& bj : j.at("warning_buffer"))
            s.warning_buffer_.emplace_back(vec_from(bj.at("x"), "buffer.x"),
                                           vec_from(bj.at("target"), "buffer.target"));
        s.feature_target_.clear();
        for (const auto& rj : j.at("feature_target")) {
            std::vector<BivariateStats> row;
            for (const auto& bj : rj) row.push_back(bivar_from(bj));
            s.feature_target_.push_back(std::move(row));
        }
        for (const auto& pj : j.at("pair_stats")) {
            DeepStack::PairCorr pc;
            pc.top = bivar_from(pj.at("top"));
            for (const auto& bj : pj.at("per_class")) pc.per_class.push_back(bivar_from(bj));
            s.pair_stats_[{pj.at("i").get<std::size_t>(), pj.at("j").get<std::size_t>()}] =
                std::move(pc);
        }
        s.timestamp_ = j.at("timestamp").get<int>();
        s.drift_count_ = j.at("drift_count").get<std::size_t>();
        return s;
    }
};

std::string save_checkpoint(const DeepStack& stack) {
    return CheckpointAccess::stack_json(stack).dump();
}

void save_checkpoint_file(const DeepStack& stack, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
    out << save_checkpoint(stack) << '\n';
    if (!out) throw DataError("checkpoint: write to " + path + " failed");
}

DeepStack load_checkpoint(const std::string& text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError("checkpoint: not valid JSON");
    try {
        return CheckpointAccess::stack_from(j);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

DeepStack load_checkpoint_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_checkpoint(ss.str());
}

} // namespace devfnn
