#ifndef BOTSIFT_RANKING_HPP
#define BOTSIFT_RANKING_HPP

// Impurity and entropy measures, feature importance (mean decrease in Gini
// impurity, information gain), rankings and ranked-prefix F1 curves.

#include "botsift/dataset.hpp"
#include "botsift/eval.hpp"
#include "botsift/models.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace botsift {

/// Per-class sample counts.
using ClassCounts = std::vector<std::uint64_t>;

/// sum_i p(i) (1 - p(i)). Throws ContractViolation for an empty count set.
double gini_impurity(std::span<const std::uint64_t> counts);

/// Size-weighted mean of the subsets' Gini impurities; empty subsets carry
/// no weight. Throws ContractViolation if every subset is empty.
double weighted_impurity(std::span<const ClassCounts> subsets);

/// -sum p(x) log2 p(x), with 0 log 0 = 0. Throws ContractViolation when empty.
double entropy(std::span<const std::uint64_t> counts);

/// Bin index per value under equal-frequency discretisation: cut points are
/// the sorted values at positions floor(b * n / bins) for b = 1 .. bins-1,
/// duplicates merged; a value's bin is the number of cut points <= it.
std::vector<std::size_t> equal_frequency_bins(std::span<const double> values, std::size_t bins);

/// H(class) - H(class | binned feature), clamped at 0, in bits.
/// Throws ParameterError for bins < 2, ContractViolation on an empty dataset.
double information_gain(const Dataset &dataset, std::size_t feature, std::size_t bins = 10);

enum class ImportanceMethod { gini, information_gain };

std::string to_string(ImportanceMethod method);  // "gi" / "ig"
ImportanceMethod parse_importance_method(std::string_view text);

struct ImportanceScores {
    ImportanceMethod method = ImportanceMethod::gini;
    std::vector<std::string> features;  // dataset schema order
    std::vector<double> scores;
};

/// Mean decrease in impurity over a seeded forest, averaged across trees and
/// normalised to sum to 1. Throws ContractViolation for fewer than two
/// classes or when no feature splits the data.
ImportanceScores gini_importance(const Dataset &dataset, const ForestParams &forest, std::uint64_t seed);

ImportanceScores information_gain_scores(const Dataset &dataset, std::size_t bins = 10);

struct RankingParams {
    ForestParams forest;  // Gini path
    std::size_t bins = 10;  // information-gain path
};

struct FeatureRanking {
    ImportanceMethod method = ImportanceMethod::gini;
    std::vector<std::string> features;  // most important first
    std::vector<double> scores;         // aligned with features
};

/// Descending score; equal scores keep schema order.
FeatureRanking rank_scores(const ImportanceScores &scores);
FeatureRanking rank_features(const Dataset &dataset, ImportanceMethod method, const RankingParams &params,
                             std::uint64_t seed);

struct CurvePoint {
    std::size_t n = 0;
    std::string feature_added;
    double f1 = 0;  // weighted F1 by CV
};

struct FeatureCurve {
    ImportanceMethod method = ImportanceMethod::gini;
    std::string model_id;
    std::vector<CurvePoint> points;
};

/// Weighted CV F1 using the top-n ranked features for n = 1 .. width. One
/// fold assignment is shared by every point. The chosen columns keep the
/// dataset's schema order, so the last point is exactly a full-schema CV.
FeatureCurve feature_curve(const Dataset &dataset, const FeatureRanking &ranking, const ModelSpec &spec,
                           std::size_t k_folds, std::uint64_t seed);

std::string scores_to_csv(const FeatureRanking &ranking);  // feature,score
std::string scores_to_json(const FeatureRanking &ranking, std::uint64_t seed);
std::string curve_to_csv(const FeatureCurve &curve);  // n,feature_added,f1
std::string curve_to_json(const FeatureCurve &curve, std::uint64_t seed);

} // namespace botsift

#endif
