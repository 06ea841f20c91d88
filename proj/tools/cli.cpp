#include "cli.hpp"

#include "biolabel/classfile/archive.hpp"
#include "biolabel/error.hpp"
#include "biolabel/evaluation/evaluation.hpp"
#include "biolabel/pipeline/pipeline.hpp"
#include "biolabel/util/hash.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace biolabel::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Globals {
    std::string lexicon;
    std::uint64_t seed = 2024;
    std::size_t jobs = 0;
    std::string format = "text";
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

features::Catalog load_catalog(const Globals& g) {
    if (g.lexicon.empty()) return features::build_catalog(features::Lexicon::builtin());
    return features::build_catalog(features::Lexicon::load(g.lexicon));
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << "\n";
}

learners::Algorithm parse_algorithm(const std::string& name) {
    const auto a = learners::algorithm_from_name(name);
    if (!a) throw CLI::ValidationError("--algorithm", "unknown algorithm '" + name + "'");
    return *a;
}

int cmd_harvest(const Globals&, const std::string& archive, const std::string& output, std::ostream& out,
                std::ostream& err) {
    classfile::ScanSummary summary;
    groundtruth::Dataset ds;
    ds.records = groundtruth::harvest_records(archive, &summary);
    print_warnings(summary.warnings, err);
    const auto text = groundtruth::serialize_dataset(ds);
    if (output.empty()) {
        out << text;
    } else {
        write_file(output, text);
    }
    err << "harvested " << ds.size() << " methods from " << summary.classes << " classes";
    if (summary.failures) err << " (" << summary.failures << " entries failed)";
    err << "\n";
    return kOk;
}

int cmd_train(const Globals& g, const std::string& dataset_path, const std::string& algorithm,
              const std::string& output, std::ostream& out, std::ostream& err) {
    const auto alg = parse_algorithm(algorithm);
    const auto text = read_file(dataset_path);
    const auto ds = groundtruth::parse_dataset(text);
    print_warnings(ds.warnings, err);
    const auto catalog = load_catalog(g);
    const auto matrix = learners::TrainingMatrix::from_dataset(ds, catalog);
    const auto bundle = learners::train_bundle(matrix, alg, {}, g.seed, hex64(util::fnv1a(text)));
    print_warnings(bundle.warnings, err);
    learners::save_bundle(bundle, output);
    if (g.format == "json") {
        ordered_json j{{"model", output},
                       {"algorithm", learners::algorithm_name(alg)},
                       {"records", ds.size()},
                       {"features", catalog.size()},
                       {"dataset_hash", bundle.dataset_hash},
                       {"warnings", bundle.warnings}};
        out << j.dump(1) << "\n";
    } else {
        out << "trained " << groundtruth::kLabelCount << " label models (" << learners::algorithm_name(alg)
            << ") on " << ds.size() << " records, " << catalog.size() << " features -> " << output << "\n";
    }
    return kOk;
}

int cmd_evaluate(const Globals& g, const std::string& dataset_path, std::size_t k, std::size_t repeats,
                 const std::vector<std::string>& algorithms, bool all_labels, std::ostream& out, std::ostream& err) {
    std::vector<learners::Algorithm> algs;
    for (const auto& a : algorithms) algs.push_back(parse_algorithm(a));
    if (algs.empty()) algs.assign(learners::kAllAlgorithms.begin(), learners::kAllAlgorithms.end());
    const auto ds = groundtruth::load_dataset(dataset_path);
    print_warnings(ds.warnings, err);
    std::vector<groundtruth::Label> labels(std::begin(groundtruth::kAllLabels), std::end(groundtruth::kAllLabels));
    const auto& columns = all_labels ? labels : evaluation::kTableLabels;
    const auto report = evaluation::cross_validate(ds, load_catalog(g), algs, labels, k, repeats, g.seed);
    out << (g.format == "json" ? evaluation::render_json(report, columns) : evaluation::render_text(report, columns));
    return kOk;
}

int cmd_classify(const Globals& g, const std::string& archive, const std::string& model_path,
                 const std::string& output, bool all, std::ostream& out, std::ostream& err) {
    const auto catalog = load_catalog(g);
    const auto bundle = learners::load_bundle(model_path, catalog.id());
    std::ofstream results(output, std::ios::binary | std::ios::trunc);
    if (!results) throw Error("cannot write " + output);
    pipeline::ClassifyOptions opts;
    opts.all = all;
    opts.jobs = g.jobs;
    const auto write = [&](const pipeline::MethodResult& r) { results << pipeline::result_to_json(r) << '\n'; };
    const auto stats = pipeline::classify_archive(archive, bundle, catalog, write, opts);
    results.close();
    if (!results) throw Error("write failed for " + output);
    print_warnings(stats.warnings, err);
    out << (g.format == "json" ? pipeline::stats_to_json(stats) : pipeline::render_stats(stats));
    return kOk;
}

int cmd_report(const Globals&, const std::string& results_path, const std::string& output, std::ostream& out) {
    const auto results = pipeline::load_results(results_path);
    const auto text = pipeline::render_report(results, fs::path(results_path).filename().string());
    if (output.empty()) {
        out << text;
    } else {
        write_file(output, text);
    }
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Label JVM methods with biometric privacy behaviours", "biolabel"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--lexicon", g.lexicon, "Lexicon file (default: the built-in lexicon)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
    app.add_option("--format", g.format, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    std::string archive, output, dataset, algorithm = "svm", model, results_path;
    std::size_t k = 10, repeats = 10;
    std::vector<std::string> algorithms;
    bool all = false, all_labels = false;

    auto* harvest = app.add_subcommand("harvest", "Extract unlabeled method records from an archive");
    harvest->add_option("archive", archive, "JAR, directory or class file")->required();
    harvest->add_option("-o,--output", output, "Records file (default: stdout)");

    auto* train = app.add_subcommand("train", "Train the 16 label models");
    train->add_option("--dataset", dataset, "Ground-truth JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--algorithm", algorithm, "nb, logistic, stump, tree or svm")->capture_default_str();
    train->add_option("-o,--output", output, "Model file")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Repeated k-fold cross-validation of every algorithm");
    evaluate->add_option("--dataset", dataset, "Ground-truth JSONL")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--k", k, "Folds")->capture_default_str();
    evaluate->add_option("--repeats", repeats, "Repeats")->capture_default_str();
    evaluate->add_option("--algorithms", algorithms, "Subset of algorithms (default: all)")->delimiter(',');
    evaluate->add_flag("--all-labels", all_labels, "Show all 16 labels instead of Source/Sink/Auth/Crypto");

    auto* classify = app.add_subcommand("classify", "Label every method of an archive");
    classify->add_option("archive", archive, "JAR, directory or class file")->required();
    classify->add_option("--model", model, "Model file")->required()->check(CLI::ExistingFile);
    classify->add_option("-o,--output", output, "Results JSONL")->required();
    classify->add_flag("--all", all, "Write methods without labels too");

    auto* report = app.add_subcommand("report", "Render a DPIA evidence document from a results file");
    report->add_option("results", results_path, "Results JSONL")->required()->check(CLI::ExistingFile);
    report->add_option("-o,--output", output, "Report file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    if (g.jobs) omp_set_num_threads(static_cast<int>(g.jobs));
    try {
        if (*harvest) return cmd_harvest(g, archive, output, out, err);
        if (*train) return cmd_train(g, dataset, algorithm, output, out, err);
        if (*evaluate) return cmd_evaluate(g, dataset, k, repeats, algorithms, all_labels, out, err);
        if (*classify) return cmd_classify(g, archive, model, output, all, out, err);
        if (*report) return cmd_report(g, results_path, output, out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

}  // namespace biolabel::cli
