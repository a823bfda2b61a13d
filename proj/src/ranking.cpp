#include "botsift/ranking.hpp"

#include "botsift/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace botsift {

namespace {

std::uint64_t total_of(std::span<const std::uint64_t> counts) {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

} // namespace

double gini_impurity(std::span<const std::uint64_t> counts) {
    const std::uint64_t total = total_of(counts);
    if (total == 0) {
        throw ContractViolation{"gini_impurity: no samples"};
    }
    double g = 0;
    for (const auto c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        g += p * (1.0 - p);
    }
    return g;
}

double weighted_impurity(std::span<const ClassCounts> subsets) {
    std::uint64_t n = 0;
    for (const auto &s : subsets) {
        n += total_of(s);
    }
    if (n == 0) {
        throw ContractViolation{"weighted_impurity: every subset is empty"};
    }
    double g = 0;
    for (const auto &s : subsets) {
        const std::uint64_t size = total_of(s);
        if (size > 0) {
            g += static_cast<double>(size) / static_cast<double>(n) * gini_impurity(s);
        }
    }
    return g;
}

double entropy(std::span<const std::uint64_t> counts) {
    const std::uint64_t total = total_of(counts);
    if (total == 0) {
        throw ContractViolation{"entropy: no samples"};
    }
    double h = 0;
    for (const auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / static_cast<double>(total);
            h -= p * std::log2(p);
        }
    }
    return h;
}

std::vector<std::size_t> equal_frequency_bins(std::span<const double> values, std::size_t bins) {
    if (bins < 2) {
        throw ParameterError{"equal_frequency_bins: need at least 2 bins"};
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> cuts;
    for (std::size_t b = 1; b < bins; ++b) {
        const std::size_t pos = b * n / bins;
        if (pos < n) {
            cuts.push_back(sorted[pos]);
        }
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::size_t> out;
    out.reserve(values.size());
    for (const double v : values) {
        out.push_back(static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin()));
    }
    return out;
}

double information_gain(const Dataset &dataset, std::size_t feature, std::size_t bins) {
    if (bins < 2) {
        throw ParameterError{"information_gain: need at least 2 bins"};
    }
    if (dataset.empty()) {
        throw ContractViolation{"information_gain: empty dataset"};
    }
    if (feature >= dataset.width()) {
        throw ContractViolation{"information_gain: feature index out of range"};
    }
    const std::size_t n_classes = dataset.classes().size();
    std::vector<double> column(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        column[i] = dataset.value(i, feature);
    }
    const auto bin_of = equal_frequency_bins(column, bins);
    const std::size_t n_bins = *std::max_element(bin_of.begin(), bin_of.end()) + 1;

    std::vector<ClassCounts> table(n_bins, ClassCounts(n_classes, 0));
    ClassCounts overall(n_classes, 0);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        ++table[bin_of[i]][dataset.class_of(i)];
        ++overall[dataset.class_of(i)];
    }
    const double n = static_cast<double>(dataset.size());
    double conditional = 0;
    for (const auto &row : table) {
        const std::uint64_t size = total_of(row);
        if (size > 0) {
            conditional += static_cast<double>(size) / n * entropy(row);
        }
    }
    return std::max(0.0, entropy(overall) - conditional);
}

std::string to_string(ImportanceMethod method) {
    return method == ImportanceMethod::gini ? "gi" : "ig";
}

ImportanceMethod parse_importance_method(std::string_view text) {
    if (text == "gi") {
        return ImportanceMethod::gini;
    }
    if (text == "ig") {
        return ImportanceMethod::information_gain;
    }
    throw ParameterError{"unknown ranking method '" + std::string{text} + "' (expected gi or ig)"};
}

ImportanceScores gini_importance(const Dataset &dataset, const ForestParams &forest, std::uint64_t seed) {
    if (dataset.classes().size() < 2) {
        throw ContractViolation{"gini_importance: need at least two classes"};
    }
    const RandomForest rf = train_forest(dataset, forest, seed);
    std::vector<double> sum(dataset.width(), 0.0);
    for (const auto &tree : rf.trees()) {
        const auto d = tree.impurity_decrease();
        for (std::size_t f = 0; f < sum.size(); ++f) {
            sum[f] += d[f];
        }
    }
    double total = 0;
    for (auto &s : sum) {
        s /= static_cast<double>(rf.size());
        total += s;
    }
    if (!(total > 0)) {
        throw ContractViolation{"gini_importance: no feature reduces impurity"};
    }
    for (auto &s : sum) {
        s /= total;
    }
    return {ImportanceMethod::gini, dataset.schema(), std::move(sum)};
}

ImportanceScores information_gain_scores(const Dataset &dataset, std::size_t bins) {
    ImportanceScores out{ImportanceMethod::information_gain, dataset.schema(), {}};
    for (std::size_t f = 0; f < dataset.width(); ++f) {
        out.scores.push_back(information_gain(dataset, f, bins));
    }
    return out;
}

FeatureRanking rank_scores(const ImportanceScores &scores) {
    std::vector<std::size_t> order(scores.scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
    FeatureRanking r{scores.method, {}, {}};
    for (const auto i : order) {
        r.features.push_back(scores.features[i]);
        r.scores.push_back(scores.scores[i]);
    }
    return r;
}

FeatureRanking rank_features(const Dataset &dataset, ImportanceMethod method, const RankingParams &params,
                             std::uint64_t seed) {
    if (dataset.empty()) {
        throw ContractViolation{"rank_features: empty dataset"};
    }
    if (method == ImportanceMethod::gini) {
        return rank_scores(gini_importance(dataset, params.forest, seed));
    }
    return rank_scores(information_gain_scores(dataset, params.bins));
}

FeatureCurve feature_curve(const Dataset &dataset, const FeatureRanking &ranking, const ModelSpec &spec,
                           std::size_t k_folds, std::uint64_t seed) {
    const auto &schema = dataset.schema();
    {
        auto a = ranking.features;
        auto b = schema;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) {
            throw ContractViolation{"feature_curve: ranking is not a permutation of the dataset schema"};
        }
    }
    const FoldAssignment folds = stratified_folds(dataset, k_folds, seed);
    FeatureCurve curve{ranking.method, spec.id(), {}};
    std::vector<bool> chosen(schema.size(), false);
    for (std::size_t n = 1; n <= ranking.features.size(); ++n) {
        const auto &added = ranking.features[n - 1];
        chosen[static_cast<std::size_t>(std::find(schema.begin(), schema.end(), added) - schema.begin())] = true;
        std::vector<std::string> columns;
        for (std::size_t f = 0; f < schema.size(); ++f) {
            if (chosen[f]) {
                columns.push_back(schema[f]);
            }
        }
        const EvalReport report = cross_validate(project(dataset, columns), spec, folds, seed);
        curve.points.push_back({n, added, report.metrics.weighted_f1});
    }
    return curve;
}

} // namespace botsift
