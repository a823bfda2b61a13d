#include "botsift/models.hpp"

#include "botsift/error.hpp"

#include <algorithm>
#include <limits>

namespace botsift {

KnnModel::KnnModel(std::size_t k, std::size_t width, std::vector<double> matrix, std::vector<std::uint32_t> labels,
                   std::size_t n_classes)
    : k_{k}, width_{width}, matrix_{std::move(matrix)}, labels_{std::move(labels)}, n_classes_{n_classes} {
    if (k_ < 1 || k_ > labels_.size()) {
        throw ParameterError{"k-NN: k must lie in [1, " + std::to_string(labels_.size()) + "], got " +
                             std::to_string(k_)};
    }
    if (matrix_.size() != labels_.size() * width_) {
        throw ContractViolation{"k-NN: matrix size does not match labels and width"};
    }
}

namespace {

double squared_distance(const double *a, const double *b, std::size_t width) {
    double d = 0;
    for (std::size_t j = 0; j < width; ++j) {
        const double diff = a[j] - b[j];
        d += diff * diff;
    }
    return d;
}

} // namespace

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> sample) const {
    // (distance, index) kept sorted; strict comparison on a scan in index
    // order leaves the lower index ahead on equal distances
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(k_ + 1);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const double d = squared_distance(sample.data(), matrix_.data() + i * width_, width_);
        if (best.size() == k_ && !(d < best.back().first)) {
            continue;
        }
        auto pos = std::upper_bound(best.begin(), best.end(), d,
                                    [](double v, const std::pair<double, std::size_t> &e) { return v < e.first; });
        best.insert(pos, {d, i});
        if (best.size() > k_) {
            best.pop_back();
        }
    }
    std::vector<std::size_t> out;
    out.reserve(best.size());
    for (const auto &[d, i] : best) {
        out.push_back(i);
    }
    return out;
}

std::size_t KnnModel::predict(std::span<const double> sample) const {
    if (k_ == 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            const double d = squared_distance(sample.data(), matrix_.data() + i * width_, width_);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        return labels_[best_i];
    }
    const auto near = neighbors(sample);
    std::vector<std::size_t> tally(n_classes_, 0);
    for (const auto i : near) {
        ++tally[labels_[i]];
    }
    const std::size_t top = *std::max_element(tally.begin(), tally.end());
    for (const auto i : near) {
        if (tally[labels_[i]] == top) {
            return labels_[i];
        }
    }
    return labels_[near.front()];
}

KnnModel build_knn(const Dataset &dataset, std::size_t k) {
    std::vector<double> matrix;
    matrix.reserve(dataset.size() * dataset.width());
    std::vector<std::uint32_t> labels;
    labels.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto r = dataset.row(i);
        matrix.insert(matrix.end(), r.begin(), r.end());
        labels.push_back(static_cast<std::uint32_t>(dataset.class_of(i)));
    }
    return KnnModel{k, dataset.width(), std::move(matrix), std::move(labels), dataset.classes().size()};
}

} // namespace botsift
