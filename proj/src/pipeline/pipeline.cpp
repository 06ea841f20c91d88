#include "biolabel/pipeline/pipeline.hpp"
#include "biolabel/classfile/archive.hpp"
#include "biolabel/error.hpp"
#include "biolabel/flowfacts/flowfacts.hpp"

#include <nlohmann/json.hpp>

#include <omp.h>
#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace biolabel::pipeline {

using groundtruth::kAllLabels;
using nlohmann::ordered_json;

bool MethodResult::has(Label l) const {
    return std::any_of(labels.begin(), labels.end(), [l](const Scored& s) { return s.label == l; });
}

MethodResult to_result(const classfile::MethodModel& method, const learners::LabelAssignment& a) {
    MethodResult r{method.owner, method.name, method.raw_descriptor, {}, a.resolved_bsc};
    for (auto l : a.labels()) {
        const double s = a.predictions[static_cast<std::size_t>(l)].score;
        r.labels.push_back({l, std::isfinite(s) ? std::optional<double>(s) : std::nullopt});
    }
    return r;
}

std::string result_to_json(const MethodResult& r) {
    ordered_json labels = ordered_json::array();
    for (const auto& s : r.labels) {
        labels.push_back({{"label", groundtruth::label_name(s.label)},
                          {"score", s.score ? ordered_json(*s.score) : ordered_json(nullptr)}});
    }
    ordered_json j{{"owner", r.owner},
                   {"method", r.method},
                   {"descriptor", r.descriptor},
                   {"labels", labels},
                   {"resolved_bsc", r.resolved_bsc ? ordered_json(groundtruth::label_name(*r.resolved_bsc))
                                                   : ordered_json(nullptr)}};
    return j.dump();
}

namespace {

MethodResult parse_result_line(const std::string& line, std::size_t n) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
        throw MalformedResults(n, std::string("not JSON: ") + e.what());
    }
    auto text = [&](const char* key) {
        if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
            throw MalformedResults(n, std::string("missing string field '") + key + "'");
        }
        return j[key].get<std::string>();
    };
    MethodResult r{text("owner"), text("method"), text("descriptor"), {}, std::nullopt};
    if (!j.contains("labels") || !j["labels"].is_array()) throw MalformedResults(n, "missing array field 'labels'");
    for (const auto& e : j["labels"]) {
        if (!e.is_object() || !e.contains("label") || !e["label"].is_string()) {
            throw MalformedResults(n, "label entry without a name");
        }
        const auto l = groundtruth::label_from_name(e["label"].get<std::string>());
        if (!l) throw MalformedResults(n, "unknown label '" + e["label"].get<std::string>() + "'");
        MethodResult::Scored s{*l, std::nullopt};
        if (e.contains("score") && !e["score"].is_null()) {
            if (!e["score"].is_number()) throw MalformedResults(n, "score is not a number");
            s.score = e["score"].get<double>();
        }
        r.labels.push_back(s);
    }
    if (j.contains("resolved_bsc") && !j["resolved_bsc"].is_null()) {
        const auto& b = j["resolved_bsc"];
        const auto l = b.is_string() ? groundtruth::label_from_name(b.get<std::string>()) : std::nullopt;
        if (!l || !groundtruth::is_bsc(*l)) throw MalformedResults(n, "resolved_bsc is not a BSC label");
        r.resolved_bsc = l;
    }
    return r;
}

}  // namespace

std::vector<MethodResult> parse_results(std::string_view text) {
    std::vector<MethodResult> out;
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_result_line(line, n));
    }
    return out;
}

std::vector<MethodResult> load_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read results " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_results(buf.str());
}

double peak_rss_mb() {
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return static_cast<double>(u.ru_maxrss) / 1024.0;  // KB on Linux
}

namespace {

struct EntryOutput {
    std::vector<MethodResult> results;
    std::vector<std::string> warnings;
    bool failed = false;
};

EntryOutput classify_entry(const classfile::ClassSource& source, std::size_t index,
                           const learners::LabelModelBundle& bundle, const features::Catalog& catalog) {
    EntryOutput out;
    try {
        const auto cls = classfile::parse_entry(source, index);
        out.results.reserve(cls.methods.size());
        for (const auto& m : cls.methods) {
            const auto flows = flowfacts::analyze_flows(m, &out.warnings);
            const auto v = features::vectorize(m, flows, catalog);
            out.results.push_back(to_result(m, learners::classify(bundle, v)));
        }
    } catch (const CatalogMismatch&) {
        throw;
    } catch (const std::exception& e) {
        out.results.clear();
        out.failed = true;
        out.warnings.push_back(source.entry_name(index) + ": " + e.what());
    }
    return out;
}

}  // namespace

RunStats classify_archive(const std::filesystem::path& archive, const learners::LabelModelBundle& bundle,
                          const features::Catalog& catalog, const std::function<void(const MethodResult&)>& sink,
                          const ClassifyOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (catalog.id() != bundle.catalog_id) {
        char a[17], b[17];
        std::snprintf(a, sizeof a, "%016llx", static_cast<unsigned long long>(catalog.id()));
        std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(bundle.catalog_id));
        throw CatalogMismatch(a, b);
    }
    const auto source = classfile::ClassSource::open(archive);
    const std::size_t jobs = options.jobs ? options.jobs : static_cast<std::size_t>(omp_get_max_threads());
    const std::size_t batch = options.batch ? options.batch : 16 * jobs;

    RunStats stats;
    stats.warnings = source.index_warnings();
    std::exception_ptr failure;
    for (std::size_t first = 0; first < source.size(); first += batch) {
        const std::size_t count = std::min(batch, source.size() - first);
        std::vector<EntryOutput> outputs(count);

#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(jobs)) if (jobs > 1)
        for (std::size_t i = 0; i < count; ++i) {
            try {
                outputs[i] = classify_entry(source, first + i, bundle, catalog);
            } catch (...) {
#pragma omp critical(biolabel_classify_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        // Single ordered writer.
        for (auto& out : outputs) {
            stats.warnings.insert(stats.warnings.end(), out.warnings.begin(), out.warnings.end());
            if (out.failed) {
                ++stats.failures;
                continue;
            }
            ++stats.classes;
            for (const auto& r : out.results) {
                ++stats.total_methods;
                if (!r.labels.empty()) ++stats.biometric_methods;
                for (const auto& s : r.labels) ++stats.label_counts[static_cast<std::size_t>(s.label)];
                if (options.all || !r.labels.empty()) sink(r);
            }
        }
    }
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats.peak_memory_mb = peak_rss_mb();
    return stats;
}

std::string render_stats(const RunStats& s) {
    std::string out = "Label          Methods\n";
    char buf[96];
    for (auto l : kAllLabels) {
        std::snprintf(buf, sizeof buf, "%-14s %zu\n", std::string(groundtruth::label_name(l)).c_str(),
                      s.label_counts[static_cast<std::size_t>(l)]);
        out += buf;
    }
    out += "\n";
    std::snprintf(buf, sizeof buf, "Classes            %zu\n", s.classes);
    out += buf;
    std::snprintf(buf, sizeof buf, "Failed entries     %zu\n", s.failures);
    out += buf;
    std::snprintf(buf, sizeof buf, "Total methods      %zu\n", s.total_methods);
    out += buf;
    std::snprintf(buf, sizeof buf, "Biometric methods  %zu\n", s.biometric_methods);
    out += buf;
    std::snprintf(buf, sizeof buf, "Wall time (s)      %.2f\n", s.wall_seconds);
    out += buf;
    std::snprintf(buf, sizeof buf, "Peak memory (MB)   %.1f\n", s.peak_memory_mb);
    out += buf;
    return out;
}

std::string stats_to_json(const RunStats& s) {
    ordered_json counts = ordered_json::object();
    for (auto l : kAllLabels) {
        counts[std::string(groundtruth::label_name(l))] = s.label_counts[static_cast<std::size_t>(l)];
    }
    ordered_json j{{"classes", s.classes},
                   {"failures", s.failures},
                   {"total_methods", s.total_methods},
                   {"biometric_methods", s.biometric_methods},
                   {"wall_seconds", s.wall_seconds},
                   {"peak_memory_mb", s.peak_memory_mb},
                   {"label_counts", counts},
                   {"warnings", s.warnings}};
    return j.dump(1) + "\n";
}

const std::vector<ReportSection>& report_sections() {
    static const std::vector<ReportSection> sections = {
        {"Consent controls", {Label::PERMISSION}, ""},
        {"Secure storage of biometric data", {Label::CRYPTO, Label::BSC3}, ""},
        {"Processing purposes", {Label::INTERACTION, Label::AUTHENTICATE}, ""},
        {"Data portability and transfer",
         {Label::TRANSFER},
         "Biometric templates on current mobile platforms stay inside an isolated secure enclave and apps only "
         "receive the outcome of a match, so no transfer path is the expected result rather than a gap in the "
         "scan."},
        {"Retention and deletion", {Label::STORAGE, Label::DELETION}, ""},
    };
    return sections;
}

std::string render_report(const std::vector<MethodResult>& results, const std::string& source_name) {
    std::size_t labelled = 0;
    for (const auto& r : results) labelled += !r.labels.empty();

    std::string out = "# Biometric DPIA evidence\n\n";
    out += "Source: " + source_name + "\n";
    out += "Methods in results: " + std::to_string(results.size()) + "\n";
    out += "Methods with at least one label: " + std::to_string(labelled) + "\n";

    std::size_t number = 1;
    for (const auto& section : report_sections()) {
        out += "\n## " + std::to_string(number++) + ". " + section.title + "\n\n";
        std::string names;
        for (auto l : section.labels) names += (names.empty() ? "" : ", ") + std::string(groundtruth::label_name(l));
        out += "Labels: " + names + "\n\n";

        // qualified name -> matched labels of this section
        std::map<std::string, std::set<std::string>> matched;
        for (auto l : section.labels) {
            std::size_t n = 0;
            for (const auto& r : results) {
                if (!r.has(l)) continue;
                ++n;
                matched[r.qualified_name()].insert(std::string(groundtruth::label_name(l)));
            }
            out += "- " + std::string(groundtruth::label_name(l)) + ": " + std::to_string(n) + " method" +
                   (n == 1 ? "" : "s") + "\n";
        }
        out += "\n";
        if (matched.empty()) {
            out += "None found.";
            if (!section.empty_note.empty()) out += " " + section.empty_note;
            out += "\n";
            continue;
        }
        for (const auto& [name, labels] : matched) {
            std::string ls;
            for (const auto& l : labels) ls += (ls.empty() ? "" : ", ") + l;
            out += "- `" + name + "` (" + ls + ")\n";
        }
    }
    return out;
}

}  // namespace biolabel::pipeline
