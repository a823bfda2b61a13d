#include "botsift/error.hpp"
#include "botsift/models.hpp"
#include "botsift/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace botsift;

namespace {

Dataset grid(const std::vector<std::vector<double>> &rows, const std::vector<std::string> &labels,
             std::vector<std::string> schema = {"x", "y"}) {
    Dataset d{std::move(schema)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.add(rows[i], labels[i]);
    }
    return d;
}

Dataset random_dataset(Rng &rng, std::size_t n, std::size_t width, std::size_t classes, std::size_t levels) {
    std::vector<std::string> schema;
    for (std::size_t f = 0; f < width; ++f) {
        schema.push_back("f" + std::to_string(f));
    }
    Dataset d{schema};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r(width);
        for (auto &v : r) {
            v = static_cast<double>(rng.below(levels));
        }
        d.add(r, "c" + std::to_string(rng.below(classes)));
    }
    return d;
}

// Drops rows whose feature vector already appeared with a different label.
Dataset without_contradictions(const Dataset &d) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool clash = false;
        for (std::size_t j = 0; j < d.size() && !clash; ++j) {
            const auto a = d.row(i), b = d.row(j);
            clash = std::equal(a.begin(), a.end(), b.begin()) && d.class_of(i) != d.class_of(j);
        }
        if (!clash) {
            keep.push_back(i);
        }
    }
    return d.select(keep);
}

double gini(const std::vector<double> &counts) {
    double n = 0, s = 0;
    for (auto c : counts) {
        n += c;
    }
    for (auto c : counts) {
        s += (c / n) * (c / n);
    }
    return 1 - s;
}

struct BestSplit {
    std::size_t feature;
    double threshold;
    double gain;
};

// Exhaustive enumeration of root splits.
BestSplit best_root_split(const Dataset &d) {
    const std::size_t k = d.classes().size();
    std::vector<double> all(k, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        all[d.class_of(i)] += 1;
    }
    const double parent = gini(all);
    BestSplit best{0, 0, -1};
    for (std::size_t f = 0; f < d.width(); ++f) {
        std::set<double> values;
        for (std::size_t i = 0; i < d.size(); ++i) {
            values.insert(d.value(i, f));
        }
        std::vector<double> v{values.begin(), values.end()};
        for (std::size_t j = 1; j < v.size(); ++j) {
            const double t = v[j - 1] + (v[j] - v[j - 1]) / 2;
            std::vector<double> l(k, 0), r(k, 0);
            for (std::size_t i = 0; i < d.size(); ++i) {
                (d.value(i, f) <= t ? l : r)[d.class_of(i)] += 1;
            }
            double nl = 0, nr = 0;
            for (std::size_t c = 0; c < k; ++c) {
                nl += l[c];
                nr += r[c];
            }
            const double n = nl + nr;
            const double gain = parent - nl / n * gini(l) - nr / n * gini(r);
            if (gain > best.gain + 1e-12) {
                best = {f, t, gain};
            }
        }
    }
    return best;
}

// Euclidean distances, sorted by (distance, index); majority of the first k,
// ties to the nearest tied member.
std::size_t knn_oracle(const Dataset &d, std::span<const double> q, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double s = 0;
        for (std::size_t f = 0; f < d.width(); ++f) {
            s += (d.value(i, f) - q[f]) * (d.value(i, f) - q[f]);
        }
        dist.emplace_back(std::sqrt(s), i);  // exact inputs keep sqrt order-faithful
    }
    std::sort(dist.begin(), dist.end());
    std::vector<std::size_t> votes(d.classes().size(), 0);
    for (std::size_t j = 0; j < k; ++j) {
        ++votes[d.class_of(dist[j].second)];
    }
    const std::size_t top = *std::max_element(votes.begin(), votes.end());
    for (std::size_t j = 0; j < k; ++j) {
        if (votes[d.class_of(dist[j].second)] == top) {
            return d.class_of(dist[j].second);
        }
    }
    return 0;
}

std::vector<double> random_query(Rng &rng, std::size_t width, std::size_t levels) {
    std::vector<double> q(width);
    for (auto &v : q) {
        v = static_cast<double>(rng.below(levels * 2)) / 2.0;  // exact in binary
    }
    return q;
}

std::filesystem::path temp_model(const std::string &name) {
    return std::filesystem::temp_directory_path() / ("botsift_test_models_" + name + ".json");
}

} // namespace

TEST_CASE("decision tree: spec examples") {
    SUBCASE("single class is one leaf") {
        const auto d = grid({{1, 1}, {2, 5}, {3, 0}}, {"A", "A", "A"});
        const auto tree = train_tree(d);
        CHECK(tree.node_count() == 1);
        CHECK(tree.predict(std::vector<double>{9, 9}) == 0);
    }
    SUBCASE("1-D split at 2.5") {
        const auto d = grid({{1}, {2}, {3}, {4}}, {"A", "A", "B", "B"}, {"x"});
        const auto tree = train_tree(d);
        REQUIRE(tree.node_count() == 3);
        CHECK(tree.node(0).feature == 0);
        CHECK(tree.node(0).threshold == 2.5);
        CHECK(tree.node(tree.node(0).left).is_leaf());
        CHECK(tree.node(tree.node(0).right).is_leaf());
        CHECK(tree.predict(std::vector<double>{2.5}) == 0);  // equal routes left
        CHECK(tree.predict(std::vector<double>{2.5000001}) == 1);
    }
    SUBCASE("XOR needs depth two") {
        const auto d = grid({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {"A", "A", "B", "B"});
        const auto tree = train_tree(d);
        CHECK(tree.depth() == 2);
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(tree.predict(d.row(i)) == d.class_of(i));
        }
    }
    SUBCASE("empty dataset") { CHECK_THROWS_AS(train_tree(Dataset{}), ContractViolation); }
    SUBCASE("leaf ties go to the first class") {
        const auto d = grid({{1, 1}, {1, 1}}, {"B", "A"});
        const auto tree = train_tree(d);
        CHECK(tree.node_count() == 1);
        CHECK(tree.predict(std::vector<double>{1, 1}) == 0);
    }
    SUBCASE("depth and size limits") {
        const auto d = grid({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {"A", "A", "B", "B"});
        CHECK(train_tree(d, {1, 2}).depth() <= 1);
        CHECK(train_tree(d, {0, 5}).node_count() == 1);
    }
}

TEST_CASE("decision tree: root split matches exhaustive enumeration") {
    Rng rng{8};
    for (int t = 0; t < 200; ++t) {
        const Dataset d = random_dataset(rng, 5 + rng.below(30), 1 + rng.below(4), 2 + rng.below(3), 2 + rng.below(6));
        const auto tree = train_tree(d);
        const auto want = best_root_split(d);
        if (tree.node(0).is_leaf()) {
            CHECK(want.gain <= 1e-12);
            continue;
        }
        if (want.gain <= 1e-12) {
            continue;  // only zero-gain splits available; any of them is acceptable
        }
        CHECK(static_cast<std::size_t>(tree.node(0).feature) == want.feature);
        CHECK(tree.node(0).threshold == want.threshold);
    }
}

TEST_CASE("decision tree: properties") {
    Rng rng{12};
    for (int t = 0; t < 60; ++t) {
        const Dataset d = without_contradictions(random_dataset(rng, 10 + rng.below(80), 3, 3, 6));
        if (d.empty()) {
            continue;
        }
        const auto tree = train_tree(d);

        // consistency of a fully grown tree
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(tree.predict(d.row(i)) == d.class_of(i));
        }

        // impurity never rises at a split; child counts add up
        for (std::size_t i = 0; i < tree.node_count(); ++i) {
            const auto &node = tree.node(i);
            if (node.is_leaf()) {
                continue;
            }
            const auto p = tree.counts(i), l = tree.counts(node.left), r = tree.counts(node.right);
            std::vector<double> pc(p.begin(), p.end()), lc(l.begin(), l.end()), rc(r.begin(), r.end());
            double nl = 0, nr = 0;
            for (std::size_t c = 0; c < p.size(); ++c) {
                CHECK(p[c] == l[c] + r[c]);
                nl += lc[c];
                nr += rc[c];
            }
            CHECK(nl > 0);
            CHECK(nr > 0);
            const double decrease = gini(pc) - nl / (nl + nr) * gini(lc) - nr / (nl + nr) * gini(rc);
            CHECK(decrease >= -1e-12);
        }

        // strictly increasing transform of training data and queries alike
        Dataset cubed{d.schema()};
        for (std::size_t i = 0; i < d.size(); ++i) {
            std::vector<double> r(d.row(i).begin(), d.row(i).end());
            for (auto &v : r) {
                v = v * v * v + 7;
            }
            cubed.add(r, d.label(i));
        }
        const auto tree2 = train_tree(cubed);
        REQUIRE(tree2.node_count() == tree.node_count());
        for (std::size_t i = 0; i < tree.node_count(); ++i) {
            const auto &a = tree.node(i), &b = tree2.node(i);
            CHECK(a.feature == b.feature);
            CHECK(a.left == b.left);
            CHECK(a.right == b.right);
            CHECK(a.label == b.label);
            CHECK(std::equal(tree.counts(i).begin(), tree.counts(i).end(), tree2.counts(i).begin()));
        }
        // every training row takes the same path through both trees
        for (std::size_t r = 0; r < d.size(); ++r) {
            std::size_t at = 0;
            while (!tree.node(at).is_leaf()) {
                const auto &a = tree.node(at);
                const double v = d.value(r, static_cast<std::size_t>(a.feature));
                const bool left = v <= a.threshold;
                CHECK(left == (v * v * v + 7 <= tree2.node(at).threshold));
                at = left ? a.left : a.right;
            }
        }
        for (std::size_t r = 0; r < d.size(); ++r) {
            CHECK(tree2.predict(cubed.row(r)) == tree.predict(d.row(r)));
        }

        CHECK(train_tree(d) == tree);
    }
}

TEST_CASE("random forest") {
    Rng rng{19};
    const Dataset d = random_dataset(rng, 120, 5, 3, 5);

    SUBCASE("degenerate forest equals a single tree") {
        ForestParams p;
        p.trees = 1;
        p.bootstrap = false;
        p.subsample_features = false;
        const auto rf = train_forest(d, p, 5);
        const auto tree = train_tree(d);
        CHECK(rf.trees()[0] == tree);
        for (int q = 0; q < 200; ++q) {
            const auto query = random_query(rng, 5, 5);
            CHECK(rf.predict(query) == tree.predict(query));
        }
    }
    SUBCASE("size and determinism") {
        const auto a = train_forest(d, {}, 77);
        CHECK(a.size() == 10);
        const auto b = train_forest(d, {}, 77);
        CHECK(a == b);
        const Model ma = train_model(ModelSpec::random_forest(10), d, 77);
        const Model mb = train_model(ModelSpec::random_forest(10), d, 77);
        CHECK(model_to_json(ma) == model_to_json(mb));
        CHECK_FALSE(train_forest(d, {}, 78) == a);
    }
    SUBCASE("votes match a per-tree tally") {
        const auto rf = train_forest(d, {}, 3);
        for (int q = 0; q < 300; ++q) {
            const auto query = random_query(rng, 5, 5);
            std::vector<std::size_t> tally(rf.n_classes(), 0);
            for (const auto &t : rf.trees()) {
                ++tally[t.predict(query)];
            }
            CHECK(rf.votes(query) == tally);
            const auto best = static_cast<std::size_t>(std::max_element(tally.begin(), tally.end()) - tally.begin());
            CHECK(rf.predict(query) == best);
        }
    }
    SUBCASE("vote ties go to the earlier class") {
        const DecisionTree leaf_b{2, 2, {DecisionTree::Node{0, -1, 0, 0, 1}}, {0, 1}};
        const DecisionTree leaf_a{2, 2, {DecisionTree::Node{0, -1, 0, 0, 0}}, {1, 0}};
        const RandomForest rf{{leaf_b, leaf_a}, 2};
        CHECK(rf.predict(std::vector<double>{1, 1}) == 0);
    }
    SUBCASE("every tree split on a candidate feature and reduced impurity weakly") {
        const auto rf = train_forest(d, {}, 11);
        for (const auto &t : rf.trees()) {
            for (std::size_t i = 0; i < t.node_count(); ++i) {
                if (!t.node(i).is_leaf()) {
                    CHECK(t.node(i).feature < 5);
                }
            }
            for (const double v : t.impurity_decrease()) {
                CHECK(v >= -1e-12);
            }
        }
    }
}

TEST_CASE("k-NN") {
    SUBCASE("exact match with k=1") {
        const auto d = grid({{0, 0}, {3, 4}, {10, 10}}, {"A", "B", "C"});
        const auto m = build_knn(d, 1);
        CHECK(m.predict(std::vector<double>{3, 4}) == 1);
    }
    SUBCASE("hand-computed distance table, k=3") {
        // distances from (2,2): P0 (0,0) 2.83, P1 (1,3) 1.41, P2 (4,2) 2.00,
        // P3 (2,5) 3.00, P4 (3,3) 1.41
        const auto d = grid({{0, 0}, {1, 3}, {4, 2}, {2, 5}, {3, 3}}, {"A", "B", "A", "B", "A"});
        const auto m = build_knn(d, 3);
        const std::vector<double> q{2, 2};
        CHECK(m.neighbors(q) == std::vector<std::size_t>{1, 4, 2});
        CHECK(d.classes()[m.predict(q)] == "A");
        CHECK(m.predict(q) == knn_oracle(d, q, 3));
    }
    SUBCASE("vote ties go to the nearest tied member") {
        const auto d = grid({{0, 0}, {2, 0}, {5, 0}, {6, 0}}, {"A", "B", "A", "B"});
        const auto m = build_knn(d, 4);
        CHECK(d.classes()[m.predict(std::vector<double>{1.9, 0})] == "B");
        CHECK(d.classes()[m.predict(std::vector<double>{0.1, 0})] == "A");
    }
    SUBCASE("equal distances go to the lower index") {
        const auto d = grid({{1, 0}, {-1, 0}}, {"A", "B"});
        CHECK(build_knn(d, 1).predict(std::vector<double>{0, 0}) == 0);
        const auto e = grid({{-1, 0}, {1, 0}}, {"B", "A"});
        CHECK(build_knn(e, 1).predict(std::vector<double>{0, 0}) == 0);
    }
    SUBCASE("k out of range") {
        const auto d = grid({{0, 0}, {1, 1}}, {"A", "B"});
        CHECK_THROWS_AS(build_knn(d, 0), ParameterError);
        CHECK_THROWS_AS(build_knn(d, 3), ParameterError);
    }
    SUBCASE("linear-scan oracle on random data") {
        Rng rng{29};
        for (int t = 0; t < 20; ++t) {
            const Dataset d = random_dataset(rng, 5 + rng.below(60), 3, 3, 4);
            const std::size_t k = 1 + rng.below(std::min<std::size_t>(d.size(), 9));
            const auto m = build_knn(d, k);
            for (int q = 0; q < 50; ++q) {
                const auto query = random_query(rng, 3, 4);
                CHECK(m.predict(query) == knn_oracle(d, query, k));
            }
        }
    }
    SUBCASE("k = N predicts the global majority") {
        Rng rng{37};
        for (int t = 0; t < 10; ++t) {
            Dataset d = random_dataset(rng, 21, 2, 2, 10);
            const auto counts = d.class_counts();
            if (counts.size() < 2 || counts[0] == counts[1]) {
                continue;
            }
            const std::size_t majority = counts[0] > counts[1] ? 0 : 1;
            const auto m = build_knn(d, d.size());
            for (int q = 0; q < 20; ++q) {
                CHECK(m.predict(random_query(rng, 2, 10)) == majority);
            }
        }
    }
}

TEST_CASE("Model wrapper and persistence") {
    Rng rng{43};
    const Dataset d = random_dataset(rng, 150, 4, 3, 6);

    SUBCASE("ids and kinds") {
        CHECK(ModelSpec::decision_tree().id() == "dt");
        CHECK(ModelSpec::random_forest(10).id() == "rf-m10");
        CHECK(ModelSpec::knn(1).id() == "knn-k1");
        CHECK(parse_model_kind("rf") == ModelKind::forest);
        CHECK_THROWS_AS(parse_model_kind("svm"), ParameterError);
    }
    SUBCASE("predict_checked rejects wrong widths") {
        const Model m = train_model(ModelSpec::decision_tree(), d, 0);
        CHECK_THROWS_AS(m.predict_checked(std::vector<double>{1, 2}), ContractViolation);
        CHECK(m.predict_checked(d.row(0)) == m.predict(d.row(0)));
    }
    SUBCASE("round trips keep predictions") {
        for (const auto &spec : {ModelSpec::decision_tree(), ModelSpec::random_forest(7), ModelSpec::knn(3)}) {
            const Model m = train_model(spec, d, 9);
            const auto path = temp_model(spec.id());
            save_model(m, path);
            const Model back = load_model(path);
            CHECK(back.schema() == m.schema());
            CHECK(back.classes() == m.classes());
            CHECK(back.spec().id() == spec.id());
            CHECK(model_to_json(back) == model_to_json(m));
            if (spec.kind == ModelKind::forest) {
                CHECK(std::get<RandomForest>(back.body()).size() == 7);
            }
            for (int q = 0; q < 1000; ++q) {
                const auto query = random_query(rng, 4, 6);
                CHECK(back.predict(query) == m.predict(query));
            }
        }
    }
    SUBCASE("corrupt files") {
        const Model m = train_model(ModelSpec::decision_tree(), d, 0);
        const std::string text = model_to_json(m);
        CHECK_THROWS_AS(model_from_json(text.substr(0, text.size() / 2)), ModelLoadError);
        CHECK_THROWS_AS(model_from_json("{}"), ModelLoadError);
        std::string bumped = text;
        const auto pos = bumped.find("\"version\":");
        REQUIRE(pos != std::string::npos);
        bumped.insert(bumped.find('1', pos), "9");
        try {
            model_from_json(bumped);
            FAIL("expected ModelLoadError");
        } catch (const ModelLoadError &e) {
            CHECK(std::string{e.what()}.find("version") != std::string::npos);
        }
        CHECK_THROWS_AS(load_model(temp_model("missing-file-xyz")), Error);
    }
    SUBCASE("determinism of all three kinds") {
        for (const auto &spec : {ModelSpec::decision_tree(), ModelSpec::random_forest(5), ModelSpec::knn(5)}) {
            CHECK(model_to_json(train_model(spec, d, 4)) == model_to_json(train_model(spec, d, 4)));
        }
    }
}
