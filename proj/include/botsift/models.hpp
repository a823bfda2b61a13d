#ifndef BOTSIFT_MODELS_HPP
#define BOTSIFT_MODELS_HPP

// From-scratch classifiers: CART decision tree, bagged random forest and
// exact k-nearest-neighbours. Models predict class indices into the class
// list of the dataset they were trained on.

#include "botsift/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace botsift {

struct TreeParams {
    std::size_t max_depth = 0;  // 0 = unlimited
    std::size_t min_samples_split = 2;
};

/// Axis-aligned binary tree; a sample goes left iff value <= threshold.
class DecisionTree {
public:
    struct Node {
        double threshold = 0;
        std::int32_t feature = -1;  // -1 marks a leaf
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t label = 0;  // majority class (leaves)

        bool is_leaf() const { return feature < 0; }
        bool operator==(const Node &) const = default;
    };

    DecisionTree() = default;
    DecisionTree(std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes,
                 std::vector<std::uint64_t> counts);

    std::size_t predict(std::span<const double> sample) const {
        const Node *node = &nodes_[0];
        while (!node->is_leaf()) {
            node = &nodes_[sample[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                 : node->right];
        }
        return node->label;
    }

    std::size_t n_features() const { return n_features_; }
    std::size_t n_classes() const { return n_classes_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t depth() const;
    const Node &node(std::size_t i) const { return nodes_[i]; }

    /// Weighted training class counts that reached node i.
    std::span<const std::uint64_t> counts(std::size_t i) const {
        return {counts_.data() + i * n_classes_, n_classes_};
    }

    /// Per-feature sum over splitting nodes of
    /// (node_size / root_size) * (node impurity - weighted child impurity).
    std::vector<double> impurity_decrease() const;

    bool operator==(const DecisionTree &) const = default;

private:
    std::size_t n_features_ = 0;
    std::size_t n_classes_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::uint64_t> counts_;  // node-major, n_classes_ per node
};

/// Greedy CART with the Gini criterion over every midpoint between distinct
/// sorted values. Split quality is compared exactly in integer arithmetic;
/// equal-quality candidates resolve to the lower feature index, then the
/// lower threshold. Throws ContractViolation on an empty dataset.
DecisionTree train_tree(const Dataset &dataset, const TreeParams &params = {});

struct ForestParams {
    std::size_t trees = 10;
    TreeParams tree;
    bool bootstrap = true;           // N draws with replacement per tree
    bool subsample_features = true;  // ceil(sqrt(d)) candidates per split
};

class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<DecisionTree> trees, std::size_t n_classes);

    /// Majority vote; ties go to the lowest class index.
    std::size_t predict(std::span<const double> sample) const;

    /// Votes per class index.
    std::vector<std::size_t> votes(std::span<const double> sample) const;

    std::size_t size() const { return trees_.size(); }
    const std::vector<DecisionTree> &trees() const { return trees_; }
    std::size_t n_classes() const { return n_classes_; }

    bool operator==(const RandomForest &) const = default;

private:
    std::vector<DecisionTree> trees_;
    std::size_t n_classes_ = 0;
};

/// Tree t draws its bootstrap and split candidates from a sub-seed derived
/// from (seed, t). If none of a node's candidate features can split it, the
/// next ceil(sqrt(d)) features of that node's random order are tried.
RandomForest train_forest(const Dataset &dataset, const ForestParams &params, std::uint64_t seed);

/// Exact k-NN by linear scan over raw (unscaled) values.
class KnnModel {
public:
    KnnModel() = default;
    KnnModel(std::size_t k, std::size_t width, std::vector<double> matrix, std::vector<std::uint32_t> labels,
             std::size_t n_classes);

    /// Majority label among the k nearest (Euclidean); equal distances go to
    /// the lower training index, vote ties to the class of the nearest tied
    /// neighbour.
    std::size_t predict(std::span<const double> sample) const;

    /// Training indices of the k nearest, nearest first.
    std::vector<std::size_t> neighbors(std::span<const double> sample) const;

    std::size_t k() const { return k_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return labels_.size(); }
    std::size_t n_classes() const { return n_classes_; }
    const std::vector<double> &matrix() const { return matrix_; }
    const std::vector<std::uint32_t> &labels() const { return labels_; }

    bool operator==(const KnnModel &) const = default;

private:
    std::size_t k_ = 1;
    std::size_t width_ = 0;
    std::vector<double> matrix_;
    std::vector<std::uint32_t> labels_;
    std::size_t n_classes_ = 0;
};

/// Throws ParameterError unless 1 <= k <= dataset size.
KnnModel build_knn(const Dataset &dataset, std::size_t k);

enum class ModelKind { tree, forest, knn };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
    ModelKind kind = ModelKind::tree;
    ForestParams forest;  // forest.tree also configures the single tree
    std::size_t k = 1;

    static ModelSpec decision_tree(TreeParams params = {});
    static ModelSpec random_forest(std::size_t m = 10);
    static ModelSpec knn(std::size_t k = 1);

    /// Short identifier: "dt", "rf-m10", "knn-k1".
    std::string id() const;
};

/// A trained classifier with the schema and class names it was trained on.
class Model {
public:
    using Body = std::variant<DecisionTree, RandomForest, KnnModel>;

    Model(ModelSpec spec, std::vector<std::string> schema, std::vector<std::string> classes, std::uint64_t seed,
          Body body);

    std::size_t predict(std::span<const double> sample) const {
        return std::visit([&](const auto &m) { return m.predict(sample); }, body_);
    }
    const std::string &predict_label(std::span<const double> sample) const { return classes_[predict(sample)]; }

    /// Like predict, but checks the sample width first (ContractViolation).
    std::size_t predict_checked(std::span<const double> sample) const;

    ModelKind kind() const { return spec_.kind; }
    const ModelSpec &spec() const { return spec_; }
    const std::vector<std::string> &schema() const { return schema_; }
    const std::vector<std::string> &classes() const { return classes_; }
    std::uint64_t seed() const { return seed_; }
    const Body &body() const { return body_; }

private:
    ModelSpec spec_;
    std::vector<std::string> schema_;
    std::vector<std::string> classes_;
    std::uint64_t seed_ = 0;
    Body body_;
};

Model train_model(const ModelSpec &spec, const Dataset &dataset, std::uint64_t seed);

// Versioned JSON model files. Trees nest as {"f","t","l","r"} for splits and
// {"leaf","counts"} for leaves; k-NN files embed the training matrix.
inline constexpr int model_format_version = 1;

std::string model_to_json(const Model &model);
Model model_from_json(std::string_view text);  // throws ModelLoadError
void save_model(const Model &model, const std::filesystem::path &path);
Model load_model(const std::filesystem::path &path);

} // namespace botsift

#endif
