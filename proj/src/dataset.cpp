#include "botsift/dataset.hpp"

#include "botsift/error.hpp"
#include "botsift/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace botsift {

namespace {

std::vector<std::string> canonical_schema() {
    const auto names = feature_schema();
    return {names.begin(), names.end()};
}

// Member indices of each class, ascending.
std::vector<std::vector<std::size_t>> members_by_class(const Dataset &dataset) {
    std::vector<std::vector<std::size_t>> members(dataset.classes().size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        members[dataset.class_of(i)].push_back(i);
    }
    return members;
}

} // namespace

Dataset::Dataset() : Dataset{canonical_schema()} {}

Dataset::Dataset(std::vector<std::string> schema) : schema_{std::move(schema)} {}

LabeledSample Dataset::sample(std::size_t i) const {
    const auto r = row(i);
    return {{r.begin(), r.end()}, label(i)};
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(classes_.size(), 0);
    for (const auto c : class_of_) {
        ++counts[c];
    }
    return counts;
}

void Dataset::add(std::span<const double> features, std::string_view label) {
    if (features.size() != width()) {
        throw ContractViolation{"Dataset::add: row has " + std::to_string(features.size()) + " values, schema has " +
                                std::to_string(width())};
    }
    if (label.empty()) {
        throw ContractViolation{"Dataset::add: empty label"};
    }
    auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end()) {
        classes_.emplace_back(label);
        it = classes_.end() - 1;
    }
    values_.insert(values_.end(), features.begin(), features.end());
    class_of_.push_back(static_cast<std::uint32_t>(it - classes_.begin()));
}

void Dataset::add(const FeatureVector &features, std::string_view label) {
    if (width() != feature_count) {
        throw ContractViolation{"Dataset::add: FeatureVector needs the canonical schema"};
    }
    const auto values = features.values();
    add(std::span<const double>{values}, label);
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
    Dataset out{schema_};
    out.values_.reserve(indices.size() * width());
    out.class_of_.reserve(indices.size());
    std::vector<std::int64_t> remap(classes_.size(), -1);
    for (const auto i : indices) {
        const auto c = class_of_[i];
        if (remap[c] < 0) {
            remap[c] = static_cast<std::int64_t>(out.classes_.size());
            out.classes_.push_back(classes_[c]);
        }
        const auto r = row(i);
        out.values_.insert(out.values_.end(), r.begin(), r.end());
        out.class_of_.push_back(static_cast<std::uint32_t>(remap[c]));
    }
    return out;
}

Dataset build_dataset(std::span<const LabeledFlow> flows, const UsableFlowFilter &filter) {
    Dataset out;
    for (const LabeledFlow &lf : flows) {
        if (lf.flow.packets.size() < filter.min_packets) {
            continue;
        }
        out.add(extract_features(lf.flow), lf.label);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string to_csv(const Dataset &dataset, std::string_view comment) {
    std::string out;
    if (!comment.empty()) {
        out += "# ";
        out += comment;
        out += '\n';
    }
    out += "label";
    for (const auto &name : dataset.schema()) {
        out += ',';
        out += name;
    }
    out += '\n';
    char buf[32];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!is_valid_label(dataset.label(i))) {
            throw ContractViolation{"label '" + dataset.label(i) + "' is not CSV-safe ([A-Za-z0-9_-]+)"};
        }
        out += dataset.label(i);
        for (const double v : dataset.row(i)) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

} // namespace

Dataset parse_csv(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    Dataset dataset;
    std::vector<double> row;

    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_fields(line);
        if (!have_header) {
            if (fields.front() != "label") {
                throw ParseError{"header must start with a 'label' column", line_no};
            }
            if (fields.size() < 2) {
                throw ParseError{"header names no feature columns", line_no};
            }
            std::vector<std::string> schema;
            for (std::size_t f = 1; f < fields.size(); ++f) {
                const std::string name{fields[f]};
                if (!feature_index(name)) {
                    throw ParseError{"unknown column '" + name + "'", line_no};
                }
                if (std::find(schema.begin(), schema.end(), name) != schema.end()) {
                    throw ParseError{"duplicate column '" + name + "'", line_no};
                }
                schema.push_back(name);
            }
            dataset = Dataset{std::move(schema)};
            row.resize(dataset.width());
            have_header = true;
            continue;
        }
        if (fields.size() != dataset.width() + 1) {
            throw ParseError{"expected " + std::to_string(dataset.width() + 1) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no};
        }
        if (!is_valid_label(fields[0])) {
            throw ParseError{"invalid label '" + std::string{fields[0]} + "'", line_no};
        }
        for (std::size_t f = 1; f < fields.size(); ++f) {
            const auto cell = fields[f];
            double v = 0;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || end != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError{"non-numeric value '" + std::string{cell} + "' in column '" +
                                     dataset.schema()[f - 1] + "'",
                                 line_no};
            }
            row[f - 1] = v;
        }
        dataset.add(row, fields[0]);
    }
    if (!have_header) {
        throw ParseError{"missing header row", std::max<std::size_t>(line_no, 1)};
    }
    return dataset;
}

void write_csv(const Dataset &dataset, const std::filesystem::path &path, std::string_view comment) {
    const std::string text = to_csv(dataset, comment);
    std::ofstream out{path, std::ios::binary};
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw IoError{"cannot write " + path.string()};
    }
}

Dataset read_csv(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError{"cannot open " + path.string()};
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

// ---------------------------------------------------------------------------
// sampling and splitting

Dataset quasi_balance(const Dataset &dataset, std::size_t cap, std::uint64_t seed) {
    if (cap < 1) {
        throw ParameterError{"quasi_balance: cap must be at least 1"};
    }
    auto members = members_by_class(dataset);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto &m = members[c];
        if (m.size() > cap) {
            Rng rng{derive_seed(seed, c)};
            rng.shuffle(std::span{m});
            m.resize(cap);
        }
        keep.insert(keep.end(), m.begin(), m.end());
    }
    std::sort(keep.begin(), keep.end());
    return dataset.select(keep);
}

Dataset project(const Dataset &dataset, std::span<const std::string> subset) {
    if (subset.empty()) {
        throw ParameterError{"project: empty feature subset"};
    }
    std::vector<std::size_t> columns;
    std::unordered_set<std::string> seen;
    for (const auto &name : subset) {
        const auto it = std::find(dataset.schema().begin(), dataset.schema().end(), name);
        if (it == dataset.schema().end()) {
            throw ParameterError{"unknown feature '" + name + "'"};
        }
        if (!seen.insert(name).second) {
            throw ParameterError{"feature '" + name + "' listed twice"};
        }
        columns.push_back(static_cast<std::size_t>(it - dataset.schema().begin()));
    }
    Dataset out{std::vector<std::string>{subset.begin(), subset.end()}};
    std::vector<double> row(columns.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            row[j] = dataset.value(i, columns[j]);
        }
        out.add(row, dataset.label(i));
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) {
            out.push_back(i);
        }
    }
    return out;
}

FoldAssignment stratified_folds(const Dataset &dataset, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw ParameterError{"stratified_folds: need at least 2 folds, got " + std::to_string(k)};
    }
    FoldAssignment folds{k, std::vector<std::size_t>(dataset.size(), 0)};
    auto members = members_by_class(dataset);
    std::size_t dealt = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        Rng rng{derive_seed(seed, c)};
        rng.shuffle(std::span{members[c]});
        for (const auto i : members[c]) {
            folds.fold_of[i] = dealt++ % k;
        }
    }
    return folds;
}

HoldoutSplit stratified_holdout(const Dataset &dataset, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ParameterError{"holdout fraction must lie in (0, 1)"};
    }
    HoldoutSplit split;
    auto members = members_by_class(dataset);
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto &m = members[c];
        Rng rng{derive_seed(seed ^ 0x686f6c646f7574ULL, c)};
        rng.shuffle(std::span{m});
        auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m.size())));
        if (m.size() >= 2) {
            n_test = std::clamp<std::size_t>(n_test, 1, m.size() - 1);
        } else {
            n_test = 0;
        }
        split.test.insert(split.test.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), m.begin() + static_cast<std::ptrdiff_t>(n_test), m.end());
    }
    if (split.test.empty() || split.train.empty()) {
        throw ParameterError{"holdout split leaves an empty side; dataset too small"};
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

} // namespace botsift
