#include "botsift/models.hpp"

#include "botsift/error.hpp"
#include "botsift/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace botsift {

namespace detail {

// Shared by train_tree and train_forest.
DecisionTree grow_tree(const Dataset &dataset, std::span<const std::uint32_t> weights, const TreeParams &params,
                       std::size_t features_per_split, Rng *rng);

} // namespace detail

DecisionTree::DecisionTree(std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes,
                           std::vector<std::uint64_t> counts)
    : n_features_{n_features}, n_classes_{n_classes}, nodes_{std::move(nodes)}, counts_{std::move(counts)} {
    if (nodes_.empty() || counts_.size() != nodes_.size() * n_classes_) {
        throw ContractViolation{"DecisionTree: inconsistent node/count storage"};
    }
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> level(nodes_.size(), 0);
    std::size_t deepest = 0;
    // children are always stored after their parent
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes_[i].is_leaf()) {
            level[nodes_[i].left] = level[i] + 1;
            level[nodes_[i].right] = level[i] + 1;
        }
    }
    return deepest;
}

std::vector<double> DecisionTree::impurity_decrease() const {
    std::vector<double> out(n_features_, 0.0);
    auto node_total = [&](std::size_t i) {
        const auto c = counts(i);
        return static_cast<double>(std::accumulate(c.begin(), c.end(), std::uint64_t{0}));
    };
    auto gini = [&](std::size_t i) {
        const double total = node_total(i);
        double sum_sq = 0;
        for (const auto c : counts(i)) {
            const double p = static_cast<double>(c) / total;
            sum_sq += p * p;
        }
        return 1.0 - sum_sq;
    };
    const double root = node_total(0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node &n = nodes_[i];
        if (n.is_leaf()) {
            continue;
        }
        const double size = node_total(i);
        const double nl = node_total(n.left);
        const double nr = node_total(n.right);
        const double children = (nl / size) * gini(n.left) + (nr / size) * gini(n.right);
        out[static_cast<std::size_t>(n.feature)] += (size / root) * (gini(i) - children);
    }
    return out;
}

namespace detail {

namespace {

__extension__ using wide = unsigned __int128;

// Above this total weight the exact split comparison could overflow 128 bits.
constexpr std::uint64_t max_total_weight = std::uint64_t{1} << 25;

// Split quality as the exact fraction num/den = S_L/n_L + S_R/n_R, where S is
// the sum of squared class counts. Larger is better; a node's weighted Gini
// impurity is 1 - quality/n.
struct Quality {
    wide num = 0;
    wide den = 1;

    bool better_than(const Quality &o) const { return num * o.den > o.num * den; }
};

struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    Quality quality;
};

class Grower {
public:
    Grower(const Dataset &data, std::span<const std::uint32_t> weights, const TreeParams &params,
           std::size_t features_per_split, Rng *rng)
        : data_{data}, weights_{weights}, params_{params}, per_split_{features_per_split}, rng_{rng},
          n_classes_{data.classes().size()}, width_{data.width()} {}

    DecisionTree run() {
        std::vector<std::size_t> rows;
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (weights_[i] > 0) {
                rows.push_back(i);
                total += weights_[i];
            }
        }
        if (rows.empty()) {
            throw ContractViolation{"train_tree: empty training set"};
        }
        if (total > max_total_weight) {
            throw ContractViolation{"train_tree: training set too large (" + std::to_string(total) + " rows)"};
        }
        sorted_.resize(rows.size());
        grow(rows, 0);
        return DecisionTree{width_, n_classes_, std::move(nodes_), std::move(counts_)};
    }

private:
    std::uint32_t grow(std::vector<std::size_t> &rows, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        counts_.resize(counts_.size() + n_classes_, 0);

        std::uint64_t total = 0;
        std::size_t classes_present = 0;
        {
            auto node_counts = std::span{counts_}.subspan(id * n_classes_, n_classes_);
            for (const auto r : rows) {
                node_counts[data_.class_of(r)] += weights_[r];
                total += weights_[r];
            }
            std::size_t best = 0;
            for (std::size_t c = 0; c < n_classes_; ++c) {
                classes_present += node_counts[c] > 0 ? 1 : 0;
                if (node_counts[c] > node_counts[best]) {
                    best = c;
                }
            }
            nodes_[id].label = static_cast<std::uint32_t>(best);
        }

        const bool depth_capped = params_.max_depth != 0 && depth >= params_.max_depth;
        if (classes_present <= 1 || total < params_.min_samples_split || depth_capped) {
            return id;
        }

        const Split split = find_split(rows, total);
        if (!split.found) {
            return id;
        }

        std::vector<std::size_t> left, right;
        for (const auto r : rows) {
            (data_.value(r, split.feature) <= split.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        nodes_[id].feature = static_cast<std::int32_t>(split.feature);
        nodes_[id].threshold = split.threshold;
        const auto l = grow(left, depth + 1);
        nodes_[id].left = l;
        const auto r = grow(right, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    Split find_split(const std::vector<std::size_t> &rows, std::uint64_t total) {
        if (per_split_ >= width_ || rng_ == nullptr) {
            std::vector<std::size_t> all(width_);
            std::iota(all.begin(), all.end(), std::size_t{0});
            return best_among(all, rows, total);
        }
        std::vector<std::size_t> order(width_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng_->shuffle(std::span{order});
        for (std::size_t start = 0; start < width_; start += per_split_) {
            const std::size_t stop = std::min(width_, start + per_split_);
            std::vector<std::size_t> candidates(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                order.begin() + static_cast<std::ptrdiff_t>(stop));
            std::sort(candidates.begin(), candidates.end());
            const Split s = best_among(candidates, rows, total);
            if (s.found) {
                return s;
            }
        }
        return {};
    }

    // candidates must be ascending so ties resolve to the lower feature.
    Split best_among(std::span<const std::size_t> candidates, const std::vector<std::size_t> &rows,
                     std::uint64_t total) {
        Split best;
        std::vector<std::uint64_t> left(n_classes_), right(n_classes_);
        for (const auto f : candidates) {
            sorted_.assign(rows.begin(), rows.end());
            std::sort(sorted_.begin(), sorted_.end(), [&](std::size_t a, std::size_t b) {
                return data_.value(a, f) < data_.value(b, f);
            });
            if (data_.value(sorted_.front(), f) == data_.value(sorted_.back(), f)) {
                continue;
            }
            std::fill(left.begin(), left.end(), 0);
            std::fill(right.begin(), right.end(), 0);
            for (const auto r : sorted_) {
                right[data_.class_of(r)] += weights_[r];
            }
            // Running sums of squared counts, updated per moved row.
            wide sq_left = 0, sq_right = 0;
            for (const auto c : right) {
                sq_right += wide{c} * c;
            }
            std::uint64_t n_left = 0;
            for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
                const auto r = sorted_[i];
                const auto c = data_.class_of(r);
                const std::uint64_t w = weights_[r];
                sq_left += wide{2} * left[c] * w + wide{w} * w;
                sq_right -= wide{2} * right[c] * w - wide{w} * w;
                left[c] += w;
                right[c] -= w;
                n_left += w;

                const double lo = data_.value(r, f);
                const double hi = data_.value(sorted_[i + 1], f);
                if (lo == hi) {
                    continue;
                }
                const std::uint64_t n_right = total - n_left;
                const Quality q{sq_left * n_right + sq_right * n_left, wide{n_left} * n_right};
                if (!best.found || q.better_than(best.quality)) {
                    double threshold = lo + (hi - lo) / 2;
                    if (!(threshold < hi)) {
                        threshold = lo;  // adjacent doubles: keep hi on the right
                    }
                    best = {true, f, threshold, q};
                }
            }
        }
        return best;
    }

    const Dataset &data_;
    std::span<const std::uint32_t> weights_;
    TreeParams params_;
    std::size_t per_split_;
    Rng *rng_;
    std::size_t n_classes_;
    std::size_t width_;
    std::vector<DecisionTree::Node> nodes_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::size_t> sorted_;
};

} // namespace

DecisionTree grow_tree(const Dataset &dataset, std::span<const std::uint32_t> weights, const TreeParams &params,
                       std::size_t features_per_split, Rng *rng) {
    return Grower{dataset, weights, params, features_per_split, rng}.run();
}

} // namespace detail

DecisionTree train_tree(const Dataset &dataset, const TreeParams &params) {
    if (dataset.empty()) {
        throw ContractViolation{"train_tree: empty dataset"};
    }
    const std::vector<std::uint32_t> weights(dataset.size(), 1);
    return detail::grow_tree(dataset, weights, params, dataset.width(), nullptr);
}

} // namespace botsift
