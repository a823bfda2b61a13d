#include "botsift/cli.hpp"

#include "botsift/capture.hpp"
#include "botsift/dataset.hpp"
#include "botsift/error.hpp"
#include "botsift/eval.hpp"
#include "botsift/models.hpp"
#include "botsift/ranking.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace botsift {

namespace {

struct RunConfig {
    std::vector<std::string> inputs;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::string method = "gi";
    std::vector<std::string> models = {"dt"};
    std::size_t m = 10;
    std::size_t k = 1;
    std::size_t max_depth = 0;
    std::size_t min_split = 2;
    std::size_t bins = 10;
    std::size_t folds = 10;
    std::size_t cap = 0;
    std::string subset;
    std::vector<std::string> features;
    std::size_t min_packets = 2;
    double idle_timeout = 300.0;
    bool keep_on_rst = false;
    std::string format;
    std::string labels;
    std::string default_label;
    std::string model_file;
    double holdout = 0.1;
    std::size_t warmup = 3;
    std::size_t passes = 10;
};

std::uint64_t resolve_seed(const RunConfig &cfg) {
    if (cfg.seed) {
        return *cfg.seed;
    }
    if (const char *env = std::getenv("BOTSIFT_SEED"); env != nullptr && *env != '\0') {
        std::uint64_t v = 0;
        const std::string_view s{env};
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || end != s.data() + s.size()) {
            throw ParameterError{"BOTSIFT_SEED must be an unsigned integer, got '" + std::string{s} + "'"};
        }
        return v;
    }
    return 0;
}

std::string provenance(std::uint64_t seed) {
    return std::string{"botsift "} + BOTSIFT_VERSION + " seed=" + std::to_string(seed);
}

void emit(const RunConfig &cfg, const std::string &text, std::ostream &out) {
    if (cfg.output.empty() || cfg.output == "-") {
        out << text;
        return;
    }
    std::ofstream f{cfg.output, std::ios::binary};
    if (!f || !f.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw IoError{"cannot write " + cfg.output};
    }
}

std::string with_comment(const std::string &csv, std::uint64_t seed) { return "# " + provenance(seed) + "\n" + csv; }

const std::string &single_input(const RunConfig &cfg) {
    if (cfg.inputs.size() != 1) {
        throw ParameterError{"expected exactly one --input"};
    }
    return cfg.inputs.front();
}

ModelSpec model_spec(const RunConfig &cfg, const std::string &name) {
    ModelSpec spec;
    spec.kind = parse_model_kind(name);
    spec.forest.trees = cfg.m;
    spec.forest.tree.max_depth = cfg.max_depth;
    spec.forest.tree.min_samples_split = cfg.min_split;
    spec.k = cfg.k;
    if (cfg.m < 1) {
        throw ParameterError{"--m must be at least 1"};
    }
    if (cfg.k < 1) {
        throw ParameterError{"--k must be at least 1"};
    }
    return spec;
}

NamedSubset chosen_subset(const RunConfig &cfg) {
    if (!cfg.features.empty()) {
        return {"custom", cfg.features};
    }
    const std::string name = cfg.subset.empty() ? "all" : cfg.subset;
    const NamedSubset *s = find_builtin_subset(name);
    if (s == nullptr) {
        throw ParameterError{"unknown subset '" + name + "' (expected five, six, seven or all)"};
    }
    return *s;
}

bool wants_json(const RunConfig &cfg, bool json_default) {
    if (cfg.format.empty()) {
        return json_default;
    }
    return cfg.format == "json";
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_extract(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
    const std::uint64_t seed = resolve_seed(cfg);
    if (cfg.inputs.empty()) {
        throw ParameterError{"extract needs at least one --input capture"};
    }
    const auto rules = read_label_rules(cfg.labels);
    FlowConfig flow_cfg;
    flow_cfg.idle_timeout = cfg.idle_timeout;
    flow_cfg.terminate_on_rst = !cfg.keep_on_rst;
    if (!(cfg.idle_timeout > 0)) {
        throw ParameterError{"--idle-timeout must be positive"};
    }
    Dataset dataset;
    std::size_t flows_seen = 0;
    for (const auto &path : cfg.inputs) {
        const auto packets = read_capture(path);
        auto flows = assemble_flows(packets, flow_cfg);
        flows_seen += flows.size();
        const auto labeled = label_flows(std::move(flows), rules, {cfg.default_label});
        const Dataset part = build_dataset(labeled, {cfg.min_packets});
        for (std::size_t i = 0; i < part.size(); ++i) {
            dataset.add(part.row(i), part.label(i));
        }
    }
    emit(cfg, to_csv(dataset, provenance(seed)), out);
    if (!cfg.output.empty() && cfg.output != "-") {
        err << "extract: " << flows_seen << " flows, " << dataset.size() << " samples\n";
    }
    return exit_ok;
}

int cmd_balance(const RunConfig &cfg, std::ostream &out) {
    const std::uint64_t seed = resolve_seed(cfg);
    if (cfg.cap < 1) {
        throw ParameterError{"balance needs --cap >= 1"};
    }
    const Dataset balanced = quasi_balance(read_csv(single_input(cfg)), cfg.cap, seed);
    emit(cfg, to_csv(balanced, provenance(seed)), out);
    return exit_ok;
}

int cmd_rank(const RunConfig &cfg, std::ostream &out) {
    const std::uint64_t seed = resolve_seed(cfg);
    RankingParams params;
    params.forest.trees = cfg.m;
    params.bins = cfg.bins;
    const auto method = parse_importance_method(cfg.method);
    const FeatureRanking ranking = rank_features(read_csv(single_input(cfg)), method, params, seed);
    emit(cfg, wants_json(cfg, false) ? scores_to_json(ranking, seed) : with_comment(scores_to_csv(ranking), seed), out);
    return exit_ok;
}

int cmd_curve(const RunConfig &cfg, std::ostream &out) {
    const std::uint64_t seed = resolve_seed(cfg);
    if (cfg.models.size() != 1) {
        throw ParameterError{"curve takes exactly one --model"};
    }
    const ModelSpec spec = model_spec(cfg, cfg.models.front());
    RankingParams params;
    params.forest.trees = cfg.m;
    params.bins = cfg.bins;
    const Dataset dataset = read_csv(single_input(cfg));
    const FeatureRanking ranking = rank_features(dataset, parse_importance_method(cfg.method), params, seed);
    const FeatureCurve curve = feature_curve(dataset, ranking, spec, cfg.folds, seed);
    emit(cfg, wants_json(cfg, false) ? curve_to_json(curve, seed) : with_comment(curve_to_csv(curve), seed), out);
    return exit_ok;
}

int cmd_train(const RunConfig &cfg, std::ostream &out) {
    const std::uint64_t seed = resolve_seed(cfg);
    if (cfg.models.size() != 1) {
        throw ParameterError{"train takes exactly one --model"};
    }
    if (cfg.output.empty() || cfg.output == "-") {
        throw ParameterError{"train needs --output <model file>"};
    }
    const ModelSpec spec = model_spec(cfg, cfg.models.front());
    const Dataset dataset = project(read_csv(single_input(cfg)), chosen_subset(cfg).features);
    save_model(train_model(spec, dataset, seed), cfg.output);
    (void)out;
    return exit_ok;
}

int cmd_evaluate(const RunConfig &cfg, std::ostream &out) {
    const std::uint64_t seed = resolve_seed(cfg);
    std::vector<ModelSpec> specs;
    for (const auto &name : cfg.models) {
        specs.push_back(model_spec(cfg, name));
    }
    const NamedSubset subset = chosen_subset(cfg);
    SubsetEvalOptions options;
    options.k_folds = cfg.folds;
    options.seed = seed;
    options.holdout_fraction = cfg.holdout;
    options.latency = {cfg.warmup, cfg.passes};
    const auto reports = evaluate_subsets(read_csv(single_input(cfg)), std::span{&subset, 1}, specs, options);
    std::string text;
    if (wants_json(cfg, true)) {
        if (reports.size() == 1) {
            text = report_to_json(reports.front());
        } else {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto &r : reports) {
                arr.push_back(nlohmann::json::parse(report_to_json(r)));
            }
            text = arr.dump(2) + "\n";
        }
    } else {
        text = with_comment(reports.size() == 1 ? report_to_csv(reports.front()) : merged_table_csv(reports), seed);
    }
    emit(cfg, text, out);
    return exit_ok;
}

int cmd_bench(const RunConfig &cfg, std::ostream &out) {
    if (cfg.model_file.empty()) {
        throw ParameterError{"bench needs --model-file"};
    }
    const Model model = load_model(cfg.model_file);
    const Dataset test = project(read_csv(single_input(cfg)), model.schema());
    std::vector<std::string> truth, predicted;
    std::vector<std::string> classes = model.classes();
    for (std::size_t i = 0; i < test.size(); ++i) {
        truth.push_back(test.label(i));
        predicted.push_back(model.predict_label(test.row(i)));
        if (std::find(classes.begin(), classes.end(), truth.back()) == classes.end()) {
            classes.push_back(truth.back());
        }
    }
    if (truth.empty()) {
        throw ParameterError{"bench: the test CSV holds no samples"};
    }
    EvalReport report;
    report.model_id = model.spec().id();
    report.subset_name = cfg.subset.empty() ? "" : cfg.subset;
    report.features = model.schema();
    report.seed = model.seed();
    report.confusion = confusion_matrix(truth, predicted, classes);
    report.metrics = prf1(report.confusion);
    const LatencyResult latency = benchmark_latency(model, test, {cfg.warmup, cfg.passes});
    report.attach_latency(latency.seconds_per_sample);
    emit(cfg, wants_json(cfg, true) ? report_to_json(report) : with_comment(report_to_csv(report), report.seed), out);
    return exit_ok;
}

int cmd_report(const RunConfig &cfg, std::ostream &out) {
    if (cfg.inputs.empty()) {
        throw ParameterError{"report needs at least one --input report JSON"};
    }
    std::vector<EvalReport> reports;
    for (const auto &path : cfg.inputs) {
        std::ifstream in{path, std::ios::binary};
        if (!in) {
            throw IoError{"cannot open " + path};
        }
        std::stringstream buf;
        buf << in.rdbuf();
        const auto text = buf.str();
        const auto parsed = nlohmann::json::parse(text, nullptr, false);
        if (parsed.is_array()) {
            for (const auto &item : parsed) {
                reports.push_back(report_from_json(item.dump()));
            }
        } else {
            reports.push_back(report_from_json(text));
        }
    }
    const std::uint64_t seed = reports.front().seed;
    const std::string table = with_comment(merged_table_csv(reports), seed);
    const std::string summary = with_comment(summary_csv(reports), seed);
    if (cfg.output.empty() || cfg.output == "-") {
        out << table << "\n" << summary;
        return exit_ok;
    }
    const std::filesystem::path dir{cfg.output};
    std::filesystem::create_directories(dir);
    for (const auto &[name, text] : {std::pair{"table.csv", &table}, std::pair{"summary.csv", &summary}}) {
        std::ofstream f{dir / name, std::ios::binary};
        if (!f || !f.write(text->data(), static_cast<std::streamsize>(text->size()))) {
            throw IoError{"cannot write " + (dir / name).string()};
        }
    }
    return exit_ok;
}

} // namespace

int run_cli(std::span<const std::string> args, std::ostream &out, std::ostream &err) {
    CLI::App app{"botsift: botnet TCP-flow feature extraction, ranking and classification", "botsift"};
    app.require_subcommand(1);
    app.set_version_flag("--version", BOTSIFT_VERSION);
    RunConfig cfg;

    auto add_input = [&](CLI::App *sub, const char *what) {
        sub->add_option("--input", cfg.inputs, what)->required();
    };
    auto add_output = [&](CLI::App *sub) { sub->add_option("--output", cfg.output, "Output path ('-' = stdout)"); };
    auto add_seed = [&](CLI::App *sub) {
        sub->add_option("--seed", cfg.seed, "Random seed (falls back to $BOTSIFT_SEED, then 0)");
    };
    auto add_format = [&](CLI::App *sub) {
        sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto add_model_params = [&](CLI::App *sub) {
        sub->add_option("--m", cfg.m, "Trees per random forest")->capture_default_str();
        sub->add_option("--k", cfg.k, "Neighbours for k-NN")->capture_default_str();
        sub->add_option("--max-depth", cfg.max_depth, "Tree depth limit (0 = unlimited)")->capture_default_str();
        sub->add_option("--min-split", cfg.min_split, "Minimum samples to split a node")->capture_default_str();
    };
    auto add_subset = [&](CLI::App *sub) {
        auto *s = sub->add_option("--subset", cfg.subset, "Named feature subset")
                      ->check(CLI::IsMember({"five", "six", "seven", "all"}));
        auto *f = sub->add_option("--features", cfg.features, "Explicit feature list a,b,c")->delimiter(',');
        s->excludes(f);
        f->excludes(s);
    };
    auto add_models = [&](CLI::App *sub, bool many) {
        auto *o = sub->add_option("--model", cfg.models, many ? "Model(s): dt, rf, knn" : "Model: dt, rf, knn")
                      ->check(CLI::IsMember({"dt", "rf", "knn"}));
        if (!many) {
            o->expected(1);
        }
    };

    auto *extract = app.add_subcommand("extract", "Captures + label rules -> dataset CSV");
    add_input(extract, "Packet capture file(s)");
    extract->add_option("--labels", cfg.labels, "Label rules file")->required();
    add_output(extract);
    add_seed(extract);
    extract->add_option("--min-packets", cfg.min_packets, "Minimum packets per usable flow")->capture_default_str();
    extract->add_option("--idle-timeout", cfg.idle_timeout, "Flow idle timeout in seconds")->capture_default_str();
    extract->add_option("--default-label", cfg.default_label, "Label for unmatched flows (default: drop them)");
    extract->add_flag("--keep-on-rst", cfg.keep_on_rst, "Do not end flows on RST");

    auto *balance = app.add_subcommand("balance", "Cap every class at --cap samples");
    add_input(balance, "Dataset CSV");
    add_output(balance);
    add_seed(balance);
    balance->add_option("--cap", cfg.cap, "Per-class cap")->required();

    auto *rank = app.add_subcommand("rank", "Feature importance scores");
    add_input(rank, "Dataset CSV");
    add_output(rank);
    add_seed(rank);
    add_format(rank);
    rank->add_option("--method", cfg.method, "gi or ig")->check(CLI::IsMember({"gi", "ig"}))->capture_default_str();
    rank->add_option("--m", cfg.m, "Trees in the importance forest")->capture_default_str();
    rank->add_option("--bins", cfg.bins, "Equal-frequency bins for ig")->capture_default_str();

    auto *curve = app.add_subcommand("curve", "F1 as ranked features are added one by one");
    add_input(curve, "Dataset CSV");
    add_output(curve);
    add_seed(curve);
    add_format(curve);
    add_models(curve, false);
    add_model_params(curve);
    curve->add_option("--method", cfg.method, "gi or ig")->check(CLI::IsMember({"gi", "ig"}))->capture_default_str();
    curve->add_option("--bins", cfg.bins, "Equal-frequency bins for ig")->capture_default_str();
    curve->add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();

    auto *train = app.add_subcommand("train", "Train a model file");
    add_input(train, "Dataset CSV");
    add_output(train);
    add_seed(train);
    add_models(train, false);
    add_model_params(train);
    add_subset(train);

    auto *evaluate = app.add_subcommand("evaluate", "Cross-validated metrics, latency and performance");
    add_input(evaluate, "Dataset CSV");
    add_output(evaluate);
    add_seed(evaluate);
    add_format(evaluate);
    add_models(evaluate, true);
    add_model_params(evaluate);
    add_subset(evaluate);
    evaluate->add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();
    evaluate->add_option("--holdout", cfg.holdout, "Fraction held out for latency timing")->capture_default_str();
    evaluate->add_option("--warmup", cfg.warmup, "Discarded warm-up passes")->capture_default_str();
    evaluate->add_option("--passes", cfg.passes, "Measured passes")->capture_default_str();

    auto *bench = app.add_subcommand("bench", "Latency and performance of a saved model on a CSV");
    add_input(bench, "Dataset CSV to classify");
    bench->add_option("--model-file", cfg.model_file, "Model file from `train`")->required();
    add_output(bench);
    add_format(bench);
    bench->add_option("--subset", cfg.subset, "Subset name recorded in the report");
    bench->add_option("--warmup", cfg.warmup, "Discarded warm-up passes")->capture_default_str();
    bench->add_option("--passes", cfg.passes, "Measured passes")->capture_default_str();

    auto *report = app.add_subcommand("report", "Merge report JSONs into table and plot data");
    add_input(report, "EvalReport JSON file(s)");
    add_output(report);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion &) {
        out << BOTSIFT_VERSION << "\n";
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        err << "botsift: error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return exit_usage;
    }

    try {
        if (extract->parsed()) {
            return cmd_extract(cfg, out, err);
        }
        if (balance->parsed()) {
            return cmd_balance(cfg, out);
        }
        if (rank->parsed()) {
            return cmd_rank(cfg, out);
        }
        if (curve->parsed()) {
            return cmd_curve(cfg, out);
        }
        if (train->parsed()) {
            return cmd_train(cfg, out);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(cfg, out);
        }
        if (bench->parsed()) {
            return cmd_bench(cfg, out);
        }
        if (report->parsed()) {
            return cmd_report(cfg, out);
        }
    } catch (const ParameterError &e) {
        err << "botsift: error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception &e) {
        err << "botsift: error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_usage;
}

} // namespace botsift
