#include "botsift/models.hpp"

#include "botsift/error.hpp"
#include "botsift/random.hpp"

#include <algorithm>
#include <cmath>

namespace botsift {

namespace detail {
DecisionTree grow_tree(const Dataset &dataset, std::span<const std::uint32_t> weights, const TreeParams &params,
                       std::size_t features_per_split, Rng *rng);
} // namespace detail

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t n_classes)
    : trees_{std::move(trees)}, n_classes_{n_classes} {}

std::vector<std::size_t> RandomForest::votes(std::span<const double> sample) const {
    std::vector<std::size_t> tally(n_classes_, 0);
    for (const auto &tree : trees_) {
        ++tally[tree.predict(sample)];
    }
    return tally;
}

std::size_t RandomForest::predict(std::span<const double> sample) const {
    // small fixed buffer: this sits on the latency-measured path
    constexpr std::size_t inline_classes = 64;
    if (n_classes_ <= inline_classes) {
        std::uint32_t tally[inline_classes] = {};
        for (const auto &tree : trees_) {
            ++tally[tree.predict(sample)];
        }
        return static_cast<std::size_t>(std::max_element(tally, tally + n_classes_) - tally);
    }
    const auto tally = votes(sample);
    return static_cast<std::size_t>(std::max_element(tally.begin(), tally.end()) - tally.begin());
}

RandomForest train_forest(const Dataset &dataset, const ForestParams &params, std::uint64_t seed) {
    if (params.trees < 1) {
        throw ParameterError{"train_forest: need at least one tree"};
    }
    if (dataset.empty()) {
        throw ContractViolation{"train_forest: empty dataset"};
    }
    const std::size_t n = dataset.size();
    const std::size_t per_split = params.subsample_features
                                      ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dataset.width()))))
                                      : dataset.width();
    std::vector<DecisionTree> trees;
    trees.reserve(params.trees);
    std::vector<std::uint32_t> weights(n);
    for (std::size_t t = 0; t < params.trees; ++t) {
        Rng rng{derive_seed(seed, t)};
        if (params.bootstrap) {
            std::fill(weights.begin(), weights.end(), 0);
            for (std::size_t draw = 0; draw < n; ++draw) {
                ++weights[rng.below(n)];
            }
        } else {
            std::fill(weights.begin(), weights.end(), 1);
        }
        trees.push_back(detail::grow_tree(dataset, weights, params.tree, per_split, &rng));
    }
    return RandomForest{std::move(trees), dataset.classes().size()};
}

} // namespace botsift
