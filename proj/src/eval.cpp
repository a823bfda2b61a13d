#include "botsift/eval.hpp"

#include "botsift/error.hpp"
#include "botsift/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace botsift {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto c : counts) {
        t += c;
    }
    return t;
}

std::uint64_t ConfusionMatrix::support(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < size(); ++p) {
        s += at(truth, p);
    }
    return s;
}

ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> predicted,
                                 std::vector<std::string> classes) {
    if (truth.size() != predicted.size()) {
        throw ContractViolation{"confusion_matrix: " + std::to_string(truth.size()) + " truths vs " +
                                std::to_string(predicted.size()) + " predictions"};
    }
    if (truth.empty()) {
        throw ContractViolation{"confusion_matrix: no samples"};
    }
    ConfusionMatrix m{std::move(classes), {}};
    m.counts.assign(m.size() * m.size(), 0);
    auto index = [&](const std::string &label) {
        const auto it = std::find(m.classes.begin(), m.classes.end(), label);
        if (it == m.classes.end()) {
            throw ContractViolation{"confusion_matrix: label '" + label + "' not in class list"};
        }
        return static_cast<std::size_t>(it - m.classes.begin());
    };
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++m.at(index(truth[i]), index(predicted[i]));
    }
    return m;
}

ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> predicted) {
    std::vector<std::string> classes;
    auto note = [&](const std::string &label) {
        if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
            classes.push_back(label);
        }
    };
    for (const auto &t : truth) {
        note(t);
    }
    for (const auto &p : predicted) {
        note(p);
    }
    return confusion_matrix(truth, predicted, std::move(classes));
}

namespace {

volatile std::uint64_t benchmark_sink = 0;

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

Metrics prf1(const ConfusionMatrix &matrix) {
    Metrics out;
    const std::size_t n = matrix.size();
    const std::uint64_t total = matrix.total();
    std::uint64_t correct = 0;
    double weighted = 0;
    double macro = 0;
    for (std::size_t c = 0; c < n; ++c) {
        const std::uint64_t tp = matrix.at(c, c);
        std::uint64_t predicted = 0;
        for (std::size_t t = 0; t < n; ++t) {
            predicted += matrix.at(t, c);
        }
        const std::uint64_t support = matrix.support(c);
        ClassMetrics cm;
        cm.name = matrix.classes[c];
        cm.precision = ratio(tp, predicted);
        cm.recall = ratio(tp, support);
        cm.f1 = (cm.precision + cm.recall) > 0 ? 2 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
        cm.support = support;
        correct += tp;
        weighted += cm.f1 * static_cast<double>(support);
        macro += cm.f1;
        out.per_class.push_back(std::move(cm));
    }
    out.weighted_f1 = total == 0 ? 0.0 : weighted / static_cast<double>(total);
    out.macro_f1 = n == 0 ? 0.0 : macro / static_cast<double>(n);
    out.accuracy = ratio(correct, total);
    return out;
}

double performance_ratio(double f1, double seconds_per_sample) {
    if (!(seconds_per_sample > 0) || !std::isfinite(seconds_per_sample)) {
        throw ContractViolation{"performance_ratio: time per sample must be positive"};
    }
    if (!(f1 >= 0 && f1 <= 1)) {
        throw ContractViolation{"performance_ratio: F1 must lie in [0, 1]"};
    }
    return f1 / (seconds_per_sample * 1000.0);
}

LatencyResult benchmark_latency(const Model &model, const Dataset &test, const LatencyOptions &options) {
    if (test.empty()) {
        throw ParameterError{"benchmark_latency: empty test set"};
    }
    if (options.measured_passes == 0) {
        throw ParameterError{"benchmark_latency: need at least one measured pass"};
    }
    if (test.schema() != model.schema()) {
        throw ContractViolation{"benchmark_latency: test columns differ from the model's schema"};
    }
    using clock = std::chrono::steady_clock;
    const std::size_t n = test.size();
    std::uint64_t warm = 0;
    for (std::size_t pass = 0; pass < options.warmup_passes; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            warm += model.predict(test.row(i));
        }
    }
    LatencyResult result;
    clock::duration elapsed{};
    for (std::size_t pass = 0; pass < options.measured_passes; ++pass) {
        std::uint64_t sum = 0;
        const auto start = clock::now();
        for (std::size_t i = 0; i < n; ++i) {
            sum += model.predict(test.row(i));
        }
        elapsed += clock::now() - start;
        result.checksum += sum;
    }
    // keep the warm-up work observable as well
    benchmark_sink = warm + result.checksum;

    result.classifications = static_cast<std::uint64_t>(n) * options.measured_passes;
    result.total_seconds = std::chrono::duration<double>(elapsed).count();
    result.seconds_per_sample = result.total_seconds / static_cast<double>(result.classifications);
    return result;
}

void EvalReport::attach_latency(double seconds) {
    seconds_per_sample = seconds;
    class_performance.clear();
    for (const auto &c : metrics.per_class) {
        class_performance.push_back(performance_ratio(c.f1, seconds));
    }
    performance = performance_ratio(metrics.weighted_f1, seconds);
    macro_performance = performance_ratio(metrics.macro_f1, seconds);
}

EvalReport cross_validate(const Dataset &dataset, const ModelSpec &spec, const FoldAssignment &folds,
                          std::uint64_t seed) {
    if (dataset.empty()) {
        throw ContractViolation{"cross_validate: empty dataset"};
    }
    if (folds.fold_of.size() != dataset.size()) {
        throw ContractViolation{"cross_validate: fold assignment does not match the dataset"};
    }
    std::vector<std::string> truth(dataset.size());
    std::vector<std::string> predicted(dataset.size());
    for (std::size_t f = 0; f < folds.k; ++f) {
        const auto test_idx = folds.test_indices(f);
        if (test_idx.empty()) {
            continue;
        }
        const auto train_idx = folds.train_indices(f);
        if (train_idx.empty()) {
            throw ParameterError{"cross_validate: fold " + std::to_string(f) + " leaves no training data"};
        }
        const Model model = train_model(spec, dataset.select(train_idx), derive_seed(seed, 1000 + f));
        for (const auto i : test_idx) {
            truth[i] = dataset.label(i);
            predicted[i] = model.predict_label(dataset.row(i));
        }
    }
    EvalReport report;
    report.model_id = spec.id();
    report.features = dataset.schema();
    report.seed = seed;
    report.k_folds = folds.k;
    report.confusion = confusion_matrix(truth, predicted, dataset.classes());
    report.metrics = prf1(report.confusion);
    return report;
}

EvalReport cross_validate(const Dataset &dataset, const ModelSpec &spec, std::size_t k_folds, std::uint64_t seed) {
    return cross_validate(dataset, spec, stratified_folds(dataset, k_folds, seed), seed);
}

const std::vector<NamedSubset> &builtin_subsets() {
    static const std::vector<NamedSubset> subsets = [] {
        std::vector<NamedSubset> s = {
            {"five", {"dPort", "nPackets", "nBytes", "vLen", "mLen"}},
            {"six", {"dPort", "nPackets", "nBytes", "vLen", "mLen", "mTime"}},
            {"seven", {"dPort", "nPackets", "nBytes", "vLen", "mLen", "mTime", "vTime"}},
        };
        const auto schema = feature_schema();
        s.push_back({"all", {schema.begin(), schema.end()}});
        return s;
    }();
    return subsets;
}

const NamedSubset *find_builtin_subset(std::string_view name) {
    for (const auto &s : builtin_subsets()) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

std::vector<EvalReport> evaluate_subsets(const Dataset &dataset, std::span<const NamedSubset> subsets,
                                         std::span<const ModelSpec> specs, const SubsetEvalOptions &options) {
    std::vector<EvalReport> reports;
    for (const auto &subset : subsets) {
        const Dataset projected = project(dataset, subset.features);
        const FoldAssignment folds = stratified_folds(projected, options.k_folds, options.seed);
        const HoldoutSplit split = stratified_holdout(projected, options.holdout_fraction, options.seed);
        const Dataset train = projected.select(split.train);
        const Dataset test = projected.select(split.test);
        for (const auto &spec : specs) {
            EvalReport report = cross_validate(projected, spec, folds, options.seed);
            report.subset_name = subset.name;
            const Model model = train_model(spec, train, options.seed);
            report.attach_latency(benchmark_latency(model, test, options.latency).seconds_per_sample);
            reports.push_back(std::move(report));
        }
    }
    return reports;
}

} // namespace botsift
