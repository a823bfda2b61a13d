#include "botsift/eval.hpp"
#include "botsift/error.hpp"
#include "botsift/ranking.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

namespace botsift {

using nlohmann::json;

namespace {

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string optional_number(const std::optional<double> &v) { return v ? number(*v) : std::string{}; }

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json &j, const char *key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

} // namespace

std::string report_id(const EvalReport &report) {
    return report.subset_name.empty() ? report.model_id : report.model_id + "-" + report.subset_name;
}

std::string report_to_json(const EvalReport &report) {
    json per_class = json::array();
    for (std::size_t c = 0; c < report.metrics.per_class.size(); ++c) {
        const auto &m = report.metrics.per_class[c];
        json entry = {{"class", m.name},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"support", m.support}};
        entry["performance"] =
            c < report.class_performance.size() ? json(report.class_performance[c]) : json(nullptr);
        per_class.push_back(std::move(entry));
    }
    json matrix = json::array();
    for (std::size_t t = 0; t < report.confusion.size(); ++t) {
        json row = json::array();
        for (std::size_t p = 0; p < report.confusion.size(); ++p) {
            row.push_back(report.confusion.at(t, p));
        }
        matrix.push_back(std::move(row));
    }
    json j = {
        {"tool", "botsift"},
        {"tool_version", BOTSIFT_VERSION},
        {"seed", report.seed},
        {"model", report.model_id},
        {"subset", report.subset_name},
        {"features", report.features},
        {"k_folds", report.k_folds},
        {"weighted_f1", report.metrics.weighted_f1},
        {"macro_f1", report.metrics.macro_f1},
        {"accuracy", report.metrics.accuracy},
        {"per_class", std::move(per_class)},
        {"confusion", {{"classes", report.confusion.classes}, {"counts", std::move(matrix)}}},
        {"seconds_per_sample", optional_json(report.seconds_per_sample)},
        {"performance", optional_json(report.performance)},
        {"macro_performance", optional_json(report.macro_performance)},
    };
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        EvalReport r;
        r.model_id = j.at("model").get<std::string>();
        r.subset_name = j.at("subset").get<std::string>();
        r.features = j.at("features").get<std::vector<std::string>>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.k_folds = j.at("k_folds").get<std::size_t>();
        r.metrics.weighted_f1 = j.at("weighted_f1").get<double>();
        r.metrics.macro_f1 = j.at("macro_f1").get<double>();
        r.metrics.accuracy = j.at("accuracy").get<double>();
        for (const auto &e : j.at("per_class")) {
            r.metrics.per_class.push_back({e.at("class").get<std::string>(), e.at("precision").get<double>(),
                                           e.at("recall").get<double>(), e.at("f1").get<double>(),
                                           e.at("support").get<std::uint64_t>()});
            if (!e.at("performance").is_null()) {
                r.class_performance.push_back(e.at("performance").get<double>());
            }
        }
        const auto &cm = j.at("confusion");
        r.confusion.classes = cm.at("classes").get<std::vector<std::string>>();
        for (const auto &row : cm.at("counts")) {
            for (const auto &v : row) {
                r.confusion.counts.push_back(v.get<std::uint64_t>());
            }
        }
        if (r.confusion.counts.size() != r.confusion.size() * r.confusion.size()) {
            throw ParseError{"confusion matrix is not square", 1};
        }
        r.seconds_per_sample = optional_from(j, "seconds_per_sample");
        r.performance = optional_from(j, "performance");
        r.macro_performance = optional_from(j, "macro_performance");
        return r;
    } catch (const json::exception &e) {
        throw ParseError{std::string{"malformed report JSON: "} + e.what(), 1};
    }
}

std::string report_to_csv(const EvalReport &report) {
    std::string out = "class,f1,recall,precision,performance\n";
    for (std::size_t c = 0; c < report.metrics.per_class.size(); ++c) {
        const auto &m = report.metrics.per_class[c];
        out += m.name + "," + number(m.f1) + "," + number(m.recall) + "," + number(m.precision) + ",";
        if (c < report.class_performance.size()) {
            out += number(report.class_performance[c]);
        }
        out += "\n";
    }
    out += "weighted," + number(report.metrics.weighted_f1) + ",,," + optional_number(report.performance) + "\n";
    out += "macro," + number(report.metrics.macro_f1) + ",,," + optional_number(report.macro_performance) + "\n";
    return out;
}

std::string merged_table_csv(std::span<const EvalReport> reports) {
    // class rows in order of first appearance across reports
    std::vector<std::string> classes;
    for (const auto &r : reports) {
        for (const auto &c : r.metrics.per_class) {
            if (std::find(classes.begin(), classes.end(), c.name) == classes.end()) {
                classes.push_back(c.name);
            }
        }
    }
    const char *groups[] = {"f1", "recall", "precision", "performance"};
    std::string out = "class";
    for (const char *g : groups) {
        for (const auto &r : reports) {
            out += std::string{","} + g + ":" + report_id(r);
        }
    }
    out += "\n";
    for (const auto &name : classes) {
        out += name;
        for (std::size_t g = 0; g < 4; ++g) {
            for (const auto &r : reports) {
                out += ",";
                const auto &pc = r.metrics.per_class;
                const auto it = std::find_if(pc.begin(), pc.end(), [&](const ClassMetrics &m) { return m.name == name; });
                if (it == pc.end()) {
                    continue;
                }
                const auto idx = static_cast<std::size_t>(it - pc.begin());
                switch (g) {
                case 0:
                    out += number(it->f1);
                    break;
                case 1:
                    out += number(it->recall);
                    break;
                case 2:
                    out += number(it->precision);
                    break;
                default:
                    if (idx < r.class_performance.size()) {
                        out += number(r.class_performance[idx]);
                    }
                }
            }
        }
        out += "\n";
    }
    return out;
}

std::string summary_csv(std::span<const EvalReport> reports) {
    std::string out = "id,model,subset,n_features,weighted_f1,macro_f1,seconds_per_sample,performance,macro_performance\n";
    for (const auto &r : reports) {
        out += report_id(r) + "," + r.model_id + "," + r.subset_name + "," + std::to_string(r.features.size()) + "," +
               number(r.metrics.weighted_f1) + "," + number(r.metrics.macro_f1) + "," +
               optional_number(r.seconds_per_sample) + "," + optional_number(r.performance) + "," +
               optional_number(r.macro_performance) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// ranking outputs

std::string scores_to_csv(const FeatureRanking &ranking) {
    std::string out = "feature,score\n";
    for (std::size_t i = 0; i < ranking.features.size(); ++i) {
        out += ranking.features[i] + "," + number(ranking.scores[i]) + "\n";
    }
    return out;
}

std::string scores_to_json(const FeatureRanking &ranking, std::uint64_t seed) {
    json scores = json::array();
    for (std::size_t i = 0; i < ranking.features.size(); ++i) {
        scores.push_back({{"feature", ranking.features[i]}, {"score", ranking.scores[i]}});
    }
    const json j = {{"tool", "botsift"},
                    {"tool_version", BOTSIFT_VERSION},
                    {"seed", seed},
                    {"method", to_string(ranking.method)},
                    {"ranking", std::move(scores)}};
    return j.dump(2) + "\n";
}

std::string curve_to_csv(const FeatureCurve &curve) {
    std::string out = "n,feature_added,f1\n";
    for (const auto &p : curve.points) {
        out += std::to_string(p.n) + "," + p.feature_added + "," + number(p.f1) + "\n";
    }
    return out;
}

std::string curve_to_json(const FeatureCurve &curve, std::uint64_t seed) {
    json points = json::array();
    for (const auto &p : curve.points) {
        points.push_back({{"n", p.n}, {"feature_added", p.feature_added}, {"f1", p.f1}});
    }
    const json j = {{"tool", "botsift"},
                    {"tool_version", BOTSIFT_VERSION},
                    {"seed", seed},
                    {"method", to_string(curve.method)},
                    {"model", curve.model_id},
                    {"points", std::move(points)}};
    return j.dump(2) + "\n";
}

} // namespace botsift
