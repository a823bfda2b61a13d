#ifndef BOTSIFT_DATASET_HPP
#define BOTSIFT_DATASET_HPP

// Labeled sample container, CSV persistence, class capping, column
// projection and stratified splitting.

#include "botsift/capture.hpp"
#include "botsift/features.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace botsift {

struct LabeledSample {
    std::vector<double> features;
    std::string label;

    bool operator==(const LabeledSample &) const = default;
};

/// Row-major feature matrix plus one label per row. Class indices refer to
/// classes(), which lists the distinct labels in order of first appearance.
class Dataset {
public:
    Dataset();  // canonical eleven-feature schema, no rows
    explicit Dataset(std::vector<std::string> schema);

    const std::vector<std::string> &schema() const { return schema_; }
    const std::vector<std::string> &classes() const { return classes_; }
    std::size_t size() const { return class_of_.size(); }
    std::size_t width() const { return schema_.size(); }
    bool empty() const { return class_of_.empty(); }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * width(), width()}; }
    std::size_t class_of(std::size_t i) const { return class_of_[i]; }
    const std::string &label(std::size_t i) const { return classes_[class_of_[i]]; }
    double value(std::size_t i, std::size_t feature) const { return values_[i * width() + feature]; }
    LabeledSample sample(std::size_t i) const;

    /// Rows per class, indexed like classes().
    std::vector<std::size_t> class_counts() const;

    /// Appends a row. Throws ContractViolation on a width mismatch or an empty label.
    void add(std::span<const double> features, std::string_view label);
    void add(const FeatureVector &features, std::string_view label);

    /// Rows at `indices`, in that order, with the class list rebuilt.
    Dataset select(std::span<const std::size_t> indices) const;

    bool operator==(const Dataset &) const = default;

private:
    std::vector<std::string> schema_;
    std::vector<double> values_;
    std::vector<std::uint32_t> class_of_;
    std::vector<std::string> classes_;
};

struct UsableFlowFilter {
    std::size_t min_packets = 2;
};

/// Feature rows for labeled flows, dropping flows shorter than the filter allows.
Dataset build_dataset(std::span<const LabeledFlow> flows, const UsableFlowFilter &filter = {});

// CSV: `label,<feature>,...` header, one row per sample, '.' decimals and 17
// significant digits so values round-trip bit-exactly. Lines starting with
// '#' are comments. Throws ParseError with the 1-based line number.
std::string to_csv(const Dataset &dataset, std::string_view comment = {});
Dataset parse_csv(std::string_view text);
void write_csv(const Dataset &dataset, const std::filesystem::path &path, std::string_view comment = {});
Dataset read_csv(const std::filesystem::path &path);

/// Keeps min(count, cap) rows of every class, drawn uniformly without
/// replacement; surviving rows keep their original relative order.
Dataset quasi_balance(const Dataset &dataset, std::size_t cap, std::uint64_t seed);

/// Columns `subset`, in that order. Throws ParameterError naming an unknown or
/// repeated feature, or for an empty subset.
Dataset project(const Dataset &dataset, std::span<const std::string> subset);

struct FoldAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of;  // per sample, in [0, k)

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Shuffles each class with the seed and deals its members round-robin over
/// the k folds, continuing the deal where the previous class stopped. Per
/// class, fold sizes differ by at most one. Throws ParameterError for k < 2.
FoldAssignment stratified_folds(const Dataset &dataset, std::size_t k, std::uint64_t seed);

struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per class, round(fraction * count) rows (at least one when the class has
/// two or more) go to the test side. Indices come back sorted.
HoldoutSplit stratified_holdout(const Dataset &dataset, double fraction, std::uint64_t seed);

} // namespace botsift

#endif
