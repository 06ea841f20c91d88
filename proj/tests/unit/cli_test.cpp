#include "biolabel/evaluation/evaluation.hpp"
#include "biolabel/pipeline/pipeline.hpp"

#include "cli.hpp"
#include "class_writer.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sstream>

using namespace biolabel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "biolabel");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return (testing::data_dir() / name).string(); }
std::string fixture(const std::string& name) { return (testing::fixture_dir() / name).string(); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
    CHECK(run({"train", "--dataset", data("ground_truth.jsonl")}).code == cli::kUsage);
    CHECK(run({"--format", "xml", "report", fixture("golden/stub_results.jsonl")}).code == cli::kUsage);
    testing::ScratchDir dir;
    CHECK(run({"train", "--dataset", data("ground_truth.jsonl"), "--algorithm", "forest", "-o",
               (dir / "m.json").string()})
              .code == cli::kUsage);
    CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("train is deterministic and records its metadata") {
    testing::ScratchDir dir;
    const auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
    const auto r1 = run({"train", "--dataset", data("ground_truth.jsonl"), "--algorithm", "svm", "-o", a});
    REQUIRE(r1.code == cli::kOk);
    REQUIRE(run({"--seed", "2024", "train", "--dataset", data("ground_truth.jsonl"), "-o", b}).code == cli::kOk);
    const auto text = testing::read_text(a);
    CHECK(text == testing::read_text(b));
    CHECK(text == testing::read_text(testing::data_dir() / "reference_model.json"));
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("algorithm") == "svm");
    CHECK(j.at("models").size() == 16);

    REQUIRE(run({"train", "--dataset", data("ground_truth.jsonl"), "--algorithm", "nb", "-o", a}).code == cli::kOk);
    CHECK(nlohmann::json::parse(testing::read_text(a)).at("algorithm") == "naive_bayes");
}

TEST_CASE("train on a bad dataset fails with 1") {
    testing::ScratchDir dir;
    const auto bad = dir / "bad.jsonl";
    testing::write_bytes(bad, {'{', '"', 'x', '"', ':', '1', '}', '\n'});
    const auto r = run({"train", "--dataset", bad.string(), "-o", (dir / "m.json").string()});
    CHECK(r.code == cli::kFailure);
    CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("train warns about degenerate labels but succeeds") {
    testing::ScratchDir dir;
    // The first two fixture records carry no DATABASE positive.
    const auto text = testing::read_text(testing::fixture_dir() / "cv_fixture.jsonl");
    const auto two = text.substr(0, text.find('\n', text.find('\n') + 1) + 1);
    testing::write_bytes(dir / "two.jsonl", {two.begin(), two.end()});
    const auto r = run({"train", "--dataset", (dir / "two.jsonl").string(), "--algorithm", "tree", "-o",
                        (dir / "m.json").string()});
    CHECK(r.code == cli::kOk);
    CHECK(r.err.find("warning: ") != std::string::npos);
    CHECK(r.err.find("DATABASE") != std::string::npos);
}

TEST_CASE("evaluate matches the evaluation module on the fixture") {
    const auto r = run({"--format", "json", "--seed", "7", "evaluate", "--dataset", fixture("cv_fixture.jsonl"),
                        "--k", "2", "--repeats", "1"});
    REQUIRE(r.code == cli::kOk);
    const auto ds = groundtruth::load_dataset(fixture("cv_fixture.jsonl"));
    const std::vector<groundtruth::Label> all(std::begin(groundtruth::kAllLabels), std::end(groundtruth::kAllLabels));
    const auto report =
        evaluation::cross_validate(ds, features::build_catalog(features::Lexicon::builtin()),
                                   {learners::kAllAlgorithms.begin(), learners::kAllAlgorithms.end()}, all, 2, 1, 7);
    CHECK(r.out == evaluation::render_json(report));

    const auto text = run({"evaluate", "--dataset", fixture("cv_fixture.jsonl"), "--k", "2", "--repeats", "2",
                           "--algorithms", "svm,nb", "--all-labels"});
    REQUIRE(text.code == cli::kOk);
    CHECK(text.out.find("Median precision") == 0);
    CHECK(text.out.find("Mean precision") != std::string::npos);
    CHECK(text.out.find("Database") != std::string::npos);
    CHECK(text.out.find("\nsvm ") != std::string::npos);
    CHECK(text.out.find("\nnaive_bayes ") != std::string::npos);
}

TEST_CASE("evaluate defaults give one row per algorithm") {
    const auto r = run({"evaluate", "--dataset", data("ground_truth.jsonl")});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("10 repeats of 10-fold") != std::string::npos);
    for (auto a : learners::kAllAlgorithms) {
        const std::string row = "\n" + std::string(learners::algorithm_name(a)) + " ";
        std::size_t n = 0;
        for (auto p = r.out.find(row); p != std::string::npos; p = r.out.find(row, p + 1)) ++n;
        CHECK(n == 2);  // median and mean blocks
    }
}

TEST_CASE("evaluate with too few records fails with 1") {
    const auto r = run({"evaluate", "--dataset", fixture("cv_fixture.jsonl"), "--k", "9"});
    CHECK(r.code == cli::kFailure);
    CHECK(r.err.find("at least 9 records") != std::string::npos);
}

TEST_CASE("classify writes the golden results for any job count") {
    testing::ScratchDir dir;
    for (const char* jobs : {"1", "4"}) {
        const auto out = (dir / (std::string("r") + jobs + ".jsonl")).string();
        const auto r = run({"--jobs", jobs, "classify", fixture("biometric_prompt_stub.jar"), "--model",
                            data("reference_model.json"), "-o", out});
        REQUIRE(r.code == cli::kOk);
        CHECK(testing::read_text(out) == testing::read_text(testing::fixture_dir() / "golden" / "stub_results.jsonl"));
        CHECK(r.out.find("Biometric methods") != std::string::npos);
    }
    const auto all = (dir / "all.jsonl").string();
    const auto r = run({"--format", "json", "classify", fixture("biometric_prompt_stub.jar"), "--model",
                        data("reference_model.json"), "-o", all, "--all"});
    REQUIRE(r.code == cli::kOk);
    const auto stats = nlohmann::json::parse(r.out);
    CHECK(pipeline::load_results(all).size() == stats.at("total_methods").get<std::size_t>());
}

TEST_CASE("classify on an empty archive succeeds with zero counts") {
    testing::ScratchDir dir;
    testing::write_bytes(dir / "empty.jar", testing::write_stored_zip({}));
    const auto r = run({"--format", "json", "classify", (dir / "empty.jar").string(), "--model",
                        data("reference_model.json"), "-o", (dir / "r.jsonl").string()});
    REQUIRE(r.code == cli::kOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("total_methods") == 0);
    for (const auto& [label, n] : j.at("label_counts").items()) CHECK(n == 0);
    CHECK(testing::read_text(dir / "r.jsonl").empty());
}

TEST_CASE("classify fatal errors exit with 1") {
    testing::ScratchDir dir;
    const auto out = (dir / "r.jsonl").string();
    testing::write_bytes(dir / "junk.jar", {'P', 'K', 0, 0});
    CHECK(run({"classify", (dir / "junk.jar").string(), "--model", data("reference_model.json"), "-o", out}).code ==
          cli::kFailure);
    // A different lexicon gives a different catalog.
    const std::string lex = "[keywords]\nauth\n";
    testing::write_bytes(dir / "small.lexicon", {lex.begin(), lex.end()});
    const auto r = run({"--lexicon", (dir / "small.lexicon").string(), "classify", fixture("biometric_prompt_stub.jar"),
                        "--model", data("reference_model.json"), "-o", out});
    CHECK(r.code == cli::kFailure);
    CHECK(r.err.find("catalog") != std::string::npos);
}

TEST_CASE("harvest lists every method") {
    testing::ScratchDir dir;
    const auto out = (dir / "h.jsonl").string();
    const auto r = run({"harvest", fixture("biometric_prompt_stub.jar"), "-o", out});
    REQUIRE(r.code == cli::kOk);
    classfile::ScanSummary scan;
    groundtruth::harvest_records(testing::fixture_dir() / "biometric_prompt_stub.jar", &scan);
    CHECK(groundtruth::load_dataset(out).size() == scan.methods);
    CHECK(run({"harvest", (dir / "missing.jar").string()}).code == cli::kFailure);
}

TEST_CASE("report renders and rejects malformed results") {
    testing::ScratchDir dir;
    const auto a = run({"report", fixture("golden/stub_results.jsonl")});
    REQUIRE(a.code == cli::kOk);
    const auto out = (dir / "report.md").string();
    REQUIRE(run({"report", fixture("golden/stub_results.jsonl"), "-o", out}).code == cli::kOk);
    CHECK(testing::read_text(out) == a.out);
    CHECK(a.out.find("## 4. Data portability and transfer") != std::string::npos);

    testing::write_bytes(dir / "bad.jsonl", {'n', 'o', '\n'});
    const auto bad = run({"report", (dir / "bad.jsonl").string()});
    CHECK(bad.code == cli::kFailure);
    CHECK(bad.err.find("results line 1") != std::string::npos);

    testing::write_bytes(dir / "empty.jsonl", {});
    const auto empty = run({"report", (dir / "empty.jsonl").string()});
    REQUIRE(empty.code == cli::kOk);
    std::size_t n = 0;
    for (auto p = empty.out.find("None found."); p != std::string::npos; p = empty.out.find("None found.", p + 1)) ++n;
    CHECK(n == 5);
}

TEST_CASE("self-classification precision is at least the cross-validated precision") {
    const auto ds = groundtruth::load_dataset(data("ground_truth.jsonl"));
    const auto catalog = features::build_catalog(features::Lexicon::builtin());
    const auto matrix = learners::TrainingMatrix::from_dataset(ds, catalog);
    const auto bundle = learners::load_bundle(data("reference_model.json"), catalog.id());
    const auto cv = evaluation::cross_validate(ds, catalog, {learners::Algorithm::Svm}, evaluation::kTableLabels, 10,
                                               2, 2024);
    for (auto l : evaluation::kTableLabels) {
        evaluation::Confusion c;
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            const bool y = matrix.target(i, l);
            const auto labels = learners::classify(bundle, matrix.vector(i)).labels();
            const bool p = std::find(labels.begin(), labels.end(), l) != labels.end();
            (p ? (y ? c.tp : c.fp) : (y ? c.fn : c.tn))++;
        }
        CAPTURE(groundtruth::label_name(l));
        CHECK(*c.precision() >= *cv.cell("svm", l).summary.mean_precision);
    }
}

}  // TEST_SUITE
