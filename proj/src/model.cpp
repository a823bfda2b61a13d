#include "botsift/models.hpp"

#include "botsift/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace botsift {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::tree:
        return "dt";
    case ModelKind::forest:
        return "rf";
    case ModelKind::knn:
        return "knn";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "dt") {
        return ModelKind::tree;
    }
    if (text == "rf") {
        return ModelKind::forest;
    }
    if (text == "knn") {
        return ModelKind::knn;
    }
    throw ParameterError{"unknown model '" + std::string{text} + "' (expected dt, rf or knn)"};
}

ModelSpec ModelSpec::decision_tree(TreeParams params) {
    ModelSpec s;
    s.kind = ModelKind::tree;
    s.forest.tree = params;
    return s;
}

ModelSpec ModelSpec::random_forest(std::size_t m) {
    ModelSpec s;
    s.kind = ModelKind::forest;
    s.forest.trees = m;
    return s;
}

ModelSpec ModelSpec::knn(std::size_t k) {
    ModelSpec s;
    s.kind = ModelKind::knn;
    s.k = k;
    return s;
}

std::string ModelSpec::id() const {
    switch (kind) {
    case ModelKind::tree:
        return "dt";
    case ModelKind::forest:
        return "rf-m" + std::to_string(forest.trees);
    case ModelKind::knn:
        return "knn-k" + std::to_string(k);
    }
    return "?";
}

Model::Model(ModelSpec spec, std::vector<std::string> schema, std::vector<std::string> classes, std::uint64_t seed,
             Body body)
    : spec_{std::move(spec)}, schema_{std::move(schema)}, classes_{std::move(classes)}, seed_{seed},
      body_{std::move(body)} {}

std::size_t Model::predict_checked(std::span<const double> sample) const {
    if (sample.size() != schema_.size()) {
        throw ContractViolation{"predict: sample has " + std::to_string(sample.size()) + " values, model expects " +
                                std::to_string(schema_.size())};
    }
    return predict(sample);
}

Model train_model(const ModelSpec &spec, const Dataset &dataset, std::uint64_t seed) {
    switch (spec.kind) {
    case ModelKind::tree:
        return Model{spec, dataset.schema(), dataset.classes(), seed, train_tree(dataset, spec.forest.tree)};
    case ModelKind::forest:
        return Model{spec, dataset.schema(), dataset.classes(), seed, train_forest(dataset, spec.forest, seed)};
    case ModelKind::knn:
        return Model{spec, dataset.schema(), dataset.classes(), seed, build_knn(dataset, spec.k)};
    }
    throw ContractViolation{"train_model: unknown model kind"};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json node_to_json(const DecisionTree &tree, std::size_t i, const std::vector<std::string> &classes) {
    const auto &n = tree.node(i);
    if (n.is_leaf()) {
        json counts = json::object();
        const auto c = tree.counts(i);
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] > 0) {
                counts[classes[k]] = c[k];
            }
        }
        return {{"leaf", classes[n.label]}, {"counts", std::move(counts)}};
    }
    return {{"f", n.feature},
            {"t", n.threshold},
            {"l", node_to_json(tree, n.left, classes)},
            {"r", node_to_json(tree, n.right, classes)}};
}

class TreeReader {
public:
    TreeReader(std::size_t width, const std::vector<std::string> &classes) : width_{width}, classes_{classes} {}

    DecisionTree read(const json &root) {
        read_node(root, 0);
        return DecisionTree{width_, classes_.size(), std::move(nodes_), std::move(counts_)};
    }

private:
    std::size_t class_index(const std::string &name) const {
        const auto it = std::find(classes_.begin(), classes_.end(), name);
        if (it == classes_.end()) {
            throw ModelLoadError{"tree leaf names unknown class '" + name + "'"};
        }
        return static_cast<std::size_t>(it - classes_.begin());
    }

    std::uint32_t read_node(const json &j, std::size_t depth) {
        if (depth > 100000) {
            throw ModelLoadError{"tree nesting too deep"};
        }
        if (!j.is_object()) {
            throw ModelLoadError{"tree node is not an object"};
        }
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        counts_.resize(counts_.size() + classes_.size(), 0);
        if (j.contains("leaf")) {
            const std::size_t label = class_index(j.at("leaf").get<std::string>());
            std::uint64_t total = 0;
            for (const auto &[name, count] : j.at("counts").items()) {
                const auto c = count.get<std::uint64_t>();
                counts_[id * classes_.size() + class_index(name)] = c;
                total += c;
            }
            if (total == 0) {
                throw ModelLoadError{"tree leaf has no training counts"};
            }
            nodes_[id].label = static_cast<std::uint32_t>(label);
            return id;
        }
        const auto feature = j.at("f").get<std::int64_t>();
        if (feature < 0 || static_cast<std::size_t>(feature) >= width_) {
            throw ModelLoadError{"tree split feature index " + std::to_string(feature) + " out of range"};
        }
        nodes_[id].feature = static_cast<std::int32_t>(feature);
        nodes_[id].threshold = j.at("t").get<double>();
        const auto l = read_node(j.at("l"), depth + 1);
        const auto r = read_node(j.at("r"), depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        std::uint64_t best = 0;
        for (std::size_t c = 0; c < classes_.size(); ++c) {
            const auto sum = counts_[l * classes_.size() + c] + counts_[r * classes_.size() + c];
            counts_[id * classes_.size() + c] = sum;
            if (sum > counts_[id * classes_.size() + best]) {
                best = c;
            }
        }
        nodes_[id].label = static_cast<std::uint32_t>(best);
        return id;
    }

    std::size_t width_;
    const std::vector<std::string> &classes_;
    std::vector<DecisionTree::Node> nodes_;
    std::vector<std::uint64_t> counts_;
};

} // namespace

std::string model_to_json(const Model &model) {
    const ModelSpec &spec = model.spec();
    json j;
    j["format"] = "botsift-model";
    j["version"] = model_format_version;
    j["tool_version"] = BOTSIFT_VERSION;
    j["kind"] = to_string(spec.kind);
    j["schema"] = model.schema();
    j["classes"] = model.classes();
    j["seed"] = model.seed();
    j["params"] = {
        {"max_depth", spec.forest.tree.max_depth},
        {"min_samples_split", spec.forest.tree.min_samples_split},
        {"trees", spec.forest.trees},
        {"bootstrap", spec.forest.bootstrap},
        {"subsample_features", spec.forest.subsample_features},
        {"k", spec.k},
    };
    if (const auto *tree = std::get_if<DecisionTree>(&model.body())) {
        j["tree"] = node_to_json(*tree, 0, model.classes());
    } else if (const auto *forest = std::get_if<RandomForest>(&model.body())) {
        json trees = json::array();
        for (const auto &t : forest->trees()) {
            trees.push_back(node_to_json(t, 0, model.classes()));
        }
        j["trees"] = std::move(trees);
    } else {
        const auto &knn = std::get<KnnModel>(model.body());
        json rows = json::array();
        json labels = json::array();
        for (std::size_t i = 0; i < knn.size(); ++i) {
            const auto *r = knn.matrix().data() + i * knn.width();
            rows.push_back(std::vector<double>(r, r + knn.width()));
            labels.push_back(model.classes()[knn.labels()[i]]);
        }
        j["knn"] = {{"k", knn.k()}, {"rows", std::move(rows)}, {"labels", std::move(labels)}};
    }
    return j.dump() + "\n";
}

Model model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        throw ModelLoadError{std::string{"corrupt model file: "} + e.what()};
    }
    try {
        if (!j.is_object() || j.value("format", "") != "botsift-model") {
            throw ModelLoadError{"not a botsift model file"};
        }
        const int version = j.at("version").get<int>();
        if (version != model_format_version) {
            throw ModelLoadError{"unsupported model version " + std::to_string(version)};
        }
        ModelSpec spec;
        spec.kind = parse_model_kind(j.at("kind").get<std::string>());
        const auto &p = j.at("params");
        spec.forest.tree.max_depth = p.at("max_depth").get<std::size_t>();
        spec.forest.tree.min_samples_split = p.at("min_samples_split").get<std::size_t>();
        spec.forest.trees = p.at("trees").get<std::size_t>();
        spec.forest.bootstrap = p.at("bootstrap").get<bool>();
        spec.forest.subsample_features = p.at("subsample_features").get<bool>();
        spec.k = p.at("k").get<std::size_t>();
        auto schema = j.at("schema").get<std::vector<std::string>>();
        auto classes = j.at("classes").get<std::vector<std::string>>();
        const auto seed = j.at("seed").get<std::uint64_t>();
        if (schema.empty() || classes.empty()) {
            throw ModelLoadError{"model has an empty schema or class list"};
        }

        switch (spec.kind) {
        case ModelKind::tree: {
            auto tree = TreeReader{schema.size(), classes}.read(j.at("tree"));
            return Model{spec, std::move(schema), std::move(classes), seed, std::move(tree)};
        }
        case ModelKind::forest: {
            std::vector<DecisionTree> trees;
            for (const auto &t : j.at("trees")) {
                trees.push_back(TreeReader{schema.size(), classes}.read(t));
            }
            if (trees.size() != spec.forest.trees) {
                throw ModelLoadError{"forest holds " + std::to_string(trees.size()) + " trees, params say " +
                                     std::to_string(spec.forest.trees)};
            }
            const auto n_classes = classes.size();
            return Model{spec, std::move(schema), std::move(classes), seed,
                         RandomForest{std::move(trees), n_classes}};
        }
        case ModelKind::knn: {
            const auto &body = j.at("knn");
            std::vector<double> matrix;
            std::vector<std::uint32_t> labels;
            for (const auto &row : body.at("rows")) {
                const auto values = row.get<std::vector<double>>();
                if (values.size() != schema.size()) {
                    throw ModelLoadError{"k-NN training row width does not match schema"};
                }
                matrix.insert(matrix.end(), values.begin(), values.end());
            }
            for (const auto &label : body.at("labels")) {
                const auto it = std::find(classes.begin(), classes.end(), label.get<std::string>());
                if (it == classes.end()) {
                    throw ModelLoadError{"k-NN label not in class list"};
                }
                labels.push_back(static_cast<std::uint32_t>(it - classes.begin()));
            }
            if (labels.size() * schema.size() != matrix.size()) {
                throw ModelLoadError{"k-NN rows and labels disagree in count"};
            }
            KnnModel knn{body.at("k").get<std::size_t>(), schema.size(), std::move(matrix), std::move(labels),
                         classes.size()};
            return Model{spec, std::move(schema), std::move(classes), seed, std::move(knn)};
        }
        }
    } catch (const json::exception &e) {
        throw ModelLoadError{std::string{"corrupt model file: "} + e.what()};
    } catch (const ModelLoadError &) {
        throw;
    } catch (const Error &e) {
        throw ModelLoadError{std::string{"invalid model file: "} + e.what()};
    }
    throw ModelLoadError{"unknown model kind"};
}

void save_model(const Model &model, const std::filesystem::path &path) {
    const std::string text = model_to_json(model);
    std::ofstream out{path, std::ios::binary};
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw IoError{"cannot write model " + path.string()};
    }
}

Model load_model(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError{"cannot open model " + path.string()};
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

} // namespace botsift
