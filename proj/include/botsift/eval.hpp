#ifndef BOTSIFT_EVAL_HPP
#define BOTSIFT_EVAL_HPP

// Classification metrics, cross-validation, per-sample latency benchmarking
// and the F1-per-millisecond performance ratio.

#include "botsift/dataset.hpp"
#include "botsift/models.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace botsift {

/// counts[true][predicted], row-major over classes.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::uint64_t> counts;

    std::size_t size() const { return classes.size(); }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * size() + predicted]; }
    std::uint64_t &at(std::size_t truth, std::size_t predicted) { return counts[truth * size() + predicted]; }
    std::uint64_t total() const;
    std::uint64_t support(std::size_t truth) const;

    bool operator==(const ConfusionMatrix &) const = default;
};

/// Classes are the union of observed labels in order of first appearance
/// (truth first, then predictions). Throws ContractViolation on empty or
/// unequal-length input.
ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> predicted);

/// As above, over a fixed class list that must cover every label.
ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> predicted,
                                 std::vector<std::string> classes);

struct ClassMetrics {
    std::string name;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::uint64_t support = 0;

    bool operator==(const ClassMetrics &) const = default;
};

struct Metrics {
    std::vector<ClassMetrics> per_class;
    double weighted_f1 = 0;  // weights = true-class support
    double macro_f1 = 0;     // unweighted mean over the matrix's classes
    double accuracy = 0;

    bool operator==(const Metrics &) const = default;
};

/// Precision, recall and F1 per class; 0/0 evaluates to 0.
Metrics prf1(const ConfusionMatrix &matrix);

/// F1 per millisecond of per-sample classification time.
/// Throws ContractViolation for a non-positive time or F1 outside [0, 1].
double performance_ratio(double f1, double seconds_per_sample);

struct LatencyOptions {
    std::size_t warmup_passes = 3;
    std::size_t measured_passes = 10;
};

struct LatencyResult {
    double seconds_per_sample = 0;
    double total_seconds = 0;  // measured passes only
    std::uint64_t classifications = 0;
    std::uint64_t checksum = 0;  // sum of predicted class indices, measured passes
};

/// Classifies every sample one at a time on the calling thread, discarding
/// the warm-up passes. Training and feature extraction are never timed.
/// Throws ParameterError for an empty test set or zero measured passes, and
/// ContractViolation if the test schema differs from the model's.
LatencyResult benchmark_latency(const Model &model, const Dataset &test, const LatencyOptions &options = {});

struct EvalReport {
    std::string model_id;
    std::string subset_name;
    std::vector<std::string> features;
    std::uint64_t seed = 0;
    std::size_t k_folds = 0;
    Metrics metrics;
    ConfusionMatrix confusion;

    // Filled in once a latency benchmark has run.
    std::optional<double> seconds_per_sample;
    std::vector<double> class_performance;  // per class, F1 / time
    std::optional<double> performance;       // weighted F1 / time
    std::optional<double> macro_performance;  // macro F1 / time

    /// Stores the latency and derives the performance ratios.
    void attach_latency(double seconds);

    bool operator==(const EvalReport &) const = default;
};

/// Stratified k-fold CV; metrics come from the pooled out-of-fold
/// predictions. Fold f trains with a sub-seed derived from (seed, f).
EvalReport cross_validate(const Dataset &dataset, const ModelSpec &spec, std::size_t k_folds, std::uint64_t seed);

/// Same, with an explicit fold assignment (for paired comparisons).
EvalReport cross_validate(const Dataset &dataset, const ModelSpec &spec, const FoldAssignment &folds,
                          std::uint64_t seed);

struct NamedSubset {
    std::string name;
    std::vector<std::string> features;
};

/// five, six, seven and all.
const std::vector<NamedSubset> &builtin_subsets();
const NamedSubset *find_builtin_subset(std::string_view name);

struct SubsetEvalOptions {
    std::size_t k_folds = 10;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.1;
    LatencyOptions latency;
};

/// For every (subset, model): weighted F1 by CV, then latency of a model
/// trained on the stratified (1 - holdout) side and timed on the rest.
std::vector<EvalReport> evaluate_subsets(const Dataset &dataset, std::span<const NamedSubset> subsets,
                                         std::span<const ModelSpec> specs, const SubsetEvalOptions &options = {});

// Serialization. JSON carries everything; the CSV mirrors one column group
// of a per-class results table: class,f1,recall,precision,performance.
std::string report_to_json(const EvalReport &report);
EvalReport report_from_json(std::string_view text);
std::string report_to_csv(const EvalReport &report);

/// Per-class table over several reports, grouped by metric:
/// class, f1:<id>..., recall:<id>..., precision:<id>..., performance:<id>...
std::string merged_table_csv(std::span<const EvalReport> reports);

/// One row per report: id,model,subset,n_features,weighted_f1,macro_f1,
/// seconds_per_sample,performance,macro_performance.
std::string summary_csv(std::span<const EvalReport> reports);

/// "<model>-<subset>", e.g. "dt-five".
std::string report_id(const EvalReport &report);

} // namespace botsift

#endif
