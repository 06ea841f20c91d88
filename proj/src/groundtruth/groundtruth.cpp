#include "biolabel/groundtruth/groundtruth.hpp"

#include "biolabel/error.hpp"
#include "biolabel/util/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace biolabel::groundtruth {

using nlohmann::ordered_json;

const std::array<Label, kLabelCount> kAllLabels = {
    Label::BSC1,        Label::BSC2,        Label::BSC3,     Label::SOURCE,
    Label::SINK,        Label::CHECKER,     Label::PERMISSION, Label::AUTHENTICATE,
    Label::CRYPTO,      Label::TERMINATION, Label::INTERACTION, Label::TRANSFER,
    Label::ACQUISITION, Label::DELETION,    Label::STORAGE,  Label::DATABASE,
};

namespace {

constexpr std::string_view kLabelNames[kLabelCount] = {
    "BSC1",        "BSC2",        "BSC3",        "SOURCE",   "SINK",     "CHECKER",
    "PERMISSION",  "AUTHENTICATE", "CRYPTO",     "TERMINATION", "INTERACTION", "TRANSFER",
    "ACQUISITION", "DELETION",    "STORAGE",     "DATABASE",
};

const char* const kKeys[] = {"name", "return", "parametersTypes", "calleeNames", "labels"};

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool valid_qualified_name(std::string_view name, std::size_t min_dots) {
    if (name.empty() || name.front() == '.' || name.back() == '.') return false;
    if (name.find("..") != std::string_view::npos) return false;
    if (name.find_first_of(" \t;()/[]") != std::string_view::npos) return false;
    return static_cast<std::size_t>(std::count(name.begin(), name.end(), '.')) >= min_dots;
}

bool valid_type(std::string_view s, bool allow_void) {
    try {
        return classfile::parse_java_type(s).has_value() || allow_void;
    } catch (const DescriptorSyntax&) {
        return false;
    }
}

struct CalleeParts {
    std::string owner;
    std::string name;
    std::optional<classfile::MethodDescriptor> descriptor;
};

std::optional<CalleeParts> split_callee(std::string_view s) {
    std::string_view head = s;
    std::optional<classfile::MethodDescriptor> desc;
    if (const auto paren = s.find('('); paren != std::string_view::npos) {
        head = s.substr(0, paren);
        try {
            desc = classfile::parse_method_descriptor(s.substr(paren));
        } catch (const DescriptorSyntax&) {
            return std::nullopt;
        }
    }
    const auto dot = head.rfind('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == head.size()) return std::nullopt;
    return CalleeParts{std::string(head.substr(0, dot)), std::string(head.substr(dot + 1)), std::move(desc)};
}

std::vector<std::string> string_array(const ordered_json& j, std::size_t line, std::string_view field) {
    if (!j.is_array()) throw SchemaViolation(line, std::string(field), "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) throw SchemaViolation(line, std::string(field), "expected an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

AnnotatedMethod record_from_json(const ordered_json& j, std::size_t line) {
    for (const auto& [k, v] : j.items()) {
        if (std::find(std::begin(kKeys), std::end(kKeys), k) == std::end(kKeys)) {
            throw SchemaViolation(line, k, "unknown field");
        }
    }
    for (auto k : kKeys) {
        if (!j.contains(k)) throw SchemaViolation(line, std::string(k), "missing field");
    }
    AnnotatedMethod r;
    if (!j["name"].is_string()) throw SchemaViolation(line, "name", "expected a string");
    if (!j["return"].is_string()) throw SchemaViolation(line, "return", "expected a string");
    r.name = j["name"].get<std::string>();
    r.return_type = j["return"].get<std::string>();
    r.parameter_types = string_array(j["parametersTypes"], line, "parametersTypes");
    r.callee_names = string_array(j["calleeNames"], line, "calleeNames");
    for (const auto& l : string_array(j["labels"], line, "labels")) {
        const auto label = label_from_name(l);
        if (!label) throw SchemaViolation(line, "labels", "unknown label " + l);
        if (has(r.labels, *label)) throw SchemaViolation(line, "labels", "repeated label " + l);
        add(r.labels, *label);
    }
    return r;
}

ordered_json record_to_json(const AnnotatedMethod& r) {
    ordered_json j;
    j["name"] = r.name;
    j["return"] = r.return_type;
    j["parametersTypes"] = r.parameter_types;
    j["calleeNames"] = r.callee_names;
    j["labels"] = ordered_json::array();
    for (auto l : labels_of(r.labels)) j["labels"].push_back(label_name(l));
    return j;
}

}  // namespace

std::string_view label_name(Label l) noexcept { return kLabelNames[static_cast<std::size_t>(l)]; }

std::optional<Label> label_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kLabelCount; ++i) {
        if (kLabelNames[i] == name) return static_cast<Label>(i);
    }
    return std::nullopt;
}

std::vector<Label> labels_of(const LabelSet& s) {
    std::vector<Label> out;
    for (auto l : kAllLabels) {
        if (has(s, l)) out.push_back(l);
    }
    return out;
}

LabelSet label_set(std::initializer_list<Label> labels) {
    LabelSet s;
    for (auto l : labels) add(s, l);
    return s;
}

std::string AnnotatedMethod::key() const { return name + "(" + join(parameter_types, ',') + ")"; }

std::string AnnotatedMethod::class_name() const {
    const auto dot = name.rfind('.');
    return dot == std::string::npos ? std::string{} : name.substr(0, dot);
}

std::string AnnotatedMethod::method_name() const {
    const auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(dot + 1);
}

std::size_t Dataset::positives(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [l](const AnnotatedMethod& r) { return has(r.labels, l); }));
}

void validate_record(const AnnotatedMethod& r, std::size_t line) {
    if (!valid_qualified_name(r.name, 2)) throw SchemaViolation(line, "name", "expected package.class.method");
    if (!valid_type(r.return_type, true)) throw SchemaViolation(line, "return", "bad type '" + r.return_type + "'");
    for (const auto& p : r.parameter_types) {
        if (!valid_type(p, false)) throw SchemaViolation(line, "parametersTypes", "bad type '" + p + "'");
    }
    for (const auto& c : r.callee_names) {
        if (!split_callee(c)) throw SchemaViolation(line, "calleeNames", "bad callee '" + c + "'");
    }
    const auto bsc = (r.labels & label_set({Label::BSC1, Label::BSC2, Label::BSC3})).count();
    if (bsc > 1) throw BscConflict(line, r.name);
}

Dataset parse_dataset(std::string_view text) {
    Dataset ds;
    std::map<std::string, std::size_t> first_line;
    std::string provenance;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw SchemaViolation(line_no, "", std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw SchemaViolation(line_no, "", "expected a JSON object");
        if (j.size() == 1 && j.contains("provenance")) {
            if (!j["provenance"].is_string()) throw SchemaViolation(line_no, "provenance", "expected a string");
            provenance = j["provenance"].get<std::string>();
            continue;
        }
        auto r = record_from_json(j, line_no);
        validate_record(r, line_no);
        r.provenance = provenance;
        const auto [it, inserted] = first_line.emplace(r.key(), line_no);
        if (!inserted) throw DuplicateRecord(line_no, it->second, r.key());
        ds.records.push_back(std::move(r));
    }
    if (ds.records.empty()) ds.warnings.push_back("dataset has no records");
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read dataset " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

std::string serialize_dataset(const Dataset& ds) {
    std::string out;
    std::set<std::string> keys;
    const std::string* provenance = nullptr;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        validate_record(r, i + 1);
        if (!keys.insert(r.key()).second) throw DuplicateRecord(i + 1, 0, r.key());
        if ((provenance == nullptr && !r.provenance.empty()) || (provenance && *provenance != r.provenance)) {
            out += ordered_json{{"provenance", r.provenance}}.dump() + "\n";
        }
        provenance = &r.provenance;
        out += record_to_json(r).dump() + "\n";
    }
    return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    const auto text = serialize_dataset(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write dataset " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

namespace {

class SplitState {
public:
    SplitState(const Dataset& ds, double fraction, const std::vector<bool>& stratified)
        : ds_(ds), fraction_(fraction), stratified_(stratified), in_train_(ds.size(), false) {
        for (std::size_t l = 0; l < kLabelCount; ++l) total_[l] = ds.positives(static_cast<Label>(l));
    }

    bool in_train(std::size_t i) const { return in_train_[i]; }
    std::size_t train_size() const { return train_size_; }

    void place(std::size_t i, bool train) {
        if (in_train_[i] == train) return;
        in_train_[i] = train;
        const int d = train ? 1 : -1;
        train_size_ += d;
        for (std::size_t l = 0; l < kLabelCount; ++l) {
            if (ds_.records[i].labels.test(l)) train_pos_[l] += d;
        }
    }

    // (sum of excess deviation beyond 1, sum of squared deviation) over
    // stratified labels, after toggling records a and b.
    std::pair<double, double> cost_after(std::size_t a, std::size_t b) const {
        double excess = 0, sq = 0;
        for (std::size_t l = 0; l < kLabelCount; ++l) {
            if (!stratified_[l]) continue;
            long long c = train_pos_[l];
            for (std::size_t i : {a, b}) {
                if (i == npos || !ds_.records[i].labels.test(l)) continue;
                c += in_train_[i] ? -1 : 1;
            }
            const double dev = std::abs(static_cast<double>(c) - fraction_ * static_cast<double>(total_[l]));
            excess += std::max(0.0, dev - 1.0 - 1e-9);
            sq += dev * dev;
        }
        return {excess, sq};
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    const Dataset& ds_;
    double fraction_;
    std::vector<bool> stratified_;
    std::vector<bool> in_train_;
    std::array<std::size_t, kLabelCount> total_{};
    std::array<long long, kLabelCount> train_pos_{};
    long long train_size_ = 0;
};

}  // namespace

Split stratified_split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (ds.empty()) throw EmptyDataset();
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("train fraction must be in (0, 1)");

    Split out;
    const std::size_t n = ds.size();
    std::vector<bool> stratified(kLabelCount, false);
    std::vector<bool> pinned(n, false);
    for (auto l : kAllLabels) {
        const auto c = ds.positives(l);
        const auto li = static_cast<std::size_t>(l);
        stratified[li] = c >= 2;
        if (c == 1) {
            out.warnings.push_back("label " + std::string(label_name(l)) +
                                   " has a single positive; its record goes to train");
            for (std::size_t i = 0; i < n; ++i) {
                if (ds.records[i].labels.test(li)) pinned[i] = true;
            }
        }
    }
    const std::size_t pinned_count = static_cast<std::size_t>(std::count(pinned.begin(), pinned.end(), true));
    const std::size_t target = std::max<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), pinned_count);

    util::Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    util::shuffle(order, rng);

    // Iterative stratification: rarest label first, each record to the side
    // that still wants that label most.
    SplitState state(ds, fraction, stratified);
    std::vector<bool> assigned(n, false);
    double want_size[2] = {static_cast<double>(n - target), static_cast<double>(target)};  // [test, train]
    std::array<std::array<double, kLabelCount>, 2> want_label{};
    for (std::size_t l = 0; l < kLabelCount; ++l) {
        const auto c = static_cast<double>(ds.positives(static_cast<Label>(l)));
        want_label[1][l] = fraction * c;
        want_label[0][l] = c - want_label[1][l];
    }
    auto assign = [&](std::size_t i, int side) {
        assigned[i] = true;
        state.place(i, side == 1);
        want_size[side] -= 1;
        for (std::size_t l = 0; l < kLabelCount; ++l) {
            if (ds.records[i].labels.test(l)) want_label[side][l] -= 1;
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (pinned[i]) assign(i, 1);
    }
    while (true) {
        std::size_t best_label = kLabelCount, best_count = 0;
        for (std::size_t l = 0; l < kLabelCount; ++l) {
            std::size_t c = 0;
            for (std::size_t i = 0; i < n; ++i) c += !assigned[i] && ds.records[i].labels.test(l);
            if (c > 0 && (best_label == kLabelCount || c < best_count)) best_label = l, best_count = c;
        }
        if (best_label == kLabelCount) break;
        for (auto i : order) {
            if (assigned[i] || !ds.records[i].labels.test(best_label)) continue;
            int side;
            if (want_label[0][best_label] != want_label[1][best_label]) {
                side = want_label[1][best_label] > want_label[0][best_label] ? 1 : 0;
            } else if (want_size[0] != want_size[1]) {
                side = want_size[1] > want_size[0] ? 1 : 0;
            } else {
                side = static_cast<int>(util::uniform_below(rng, 2));
            }
            assign(i, side);
        }
    }
    for (auto i : order) {
        if (assigned[i]) continue;
        int side = want_size[1] > want_size[0] ? 1 : want_size[1] < want_size[0] ? 0 : static_cast<int>(util::uniform_below(rng, 2));
        assign(i, side);
    }

    // Repair: exact train size first, then pairwise swaps until every
    // stratified label is within tolerance or no swap improves.
    constexpr auto npos = SplitState::npos;
    while (state.train_size() != target) {
        const bool to_test = state.train_size() > target;
        std::size_t best = npos;
        std::pair<double, double> best_cost{};
        for (auto i : order) {
            if (pinned[i] || state.in_train(i) != to_test) continue;
            const auto c = state.cost_after(i, npos);
            if (best == npos || c < best_cost) best = i, best_cost = c;
        }
        if (best == npos) break;
        state.place(best, !to_test);
    }
    auto current = state.cost_after(npos, npos);
    while (current.first > 0) {
        std::size_t bi = npos, bj = npos;
        auto best_cost = current;
        for (auto i : order) {
            if (pinned[i] || !state.in_train(i)) continue;
            for (auto j : order) {
                if (state.in_train(j)) continue;
                const auto c = state.cost_after(i, j);
                if (c < best_cost) bi = i, bj = j, best_cost = c;
            }
        }
        if (bi == npos) break;
        state.place(bi, false);
        state.place(bj, true);
        current = best_cost;
    }
    if (current.first > 0) out.warnings.push_back("could not balance every label within one positive");

    for (std::size_t i = 0; i < n; ++i) {
        (state.in_train(i) ? out.train : out.test).records.push_back(ds.records[i]);
    }
    return out;
}

AnnotatedMethod record_of(const classfile::MethodModel& m) {
    AnnotatedMethod r;
    r.name = m.owner + "." + m.name;
    r.return_type = classfile::java_type_name(m.descriptor.return_type);
    for (const auto& p : m.descriptor.params) r.parameter_types.push_back(p.java_name());
    std::set<std::string> seen;
    for (const auto& insn : m.instructions) {
        if (const auto* inv = std::get_if<classfile::Invoke>(&insn.kind)) {
            auto callee = inv->owner + "." + inv->name + inv->descriptor.render();
            if (seen.insert(callee).second) r.callee_names.push_back(std::move(callee));
        }
    }
    return r;
}

std::vector<AnnotatedMethod> harvest_records(const std::filesystem::path& path, classfile::ScanSummary* summary) {
    std::vector<AnnotatedMethod> out;
    auto s = classfile::scan_archive(path, [&](classfile::ClassModel&& cls) {
        for (const auto& m : cls.methods) {
            out.push_back(record_of(m));
            out.back().provenance = cls.source_archive + (cls.source_entry.empty() ? "" : "!" + cls.source_entry);
        }
    });
    if (summary) *summary = std::move(s);
    return out;
}

features::FeatureSubject subject_of(const AnnotatedMethod& r) {
    features::FeatureSubject s;
    s.class_name = r.class_name();
    s.method_name = r.method_name();
    s.return_type = classfile::parse_java_type(r.return_type);
    for (const auto& p : r.parameter_types) {
        if (auto t = classfile::parse_java_type(p)) s.params.push_back(std::move(*t));
    }
    for (const auto& c : r.callee_names) {
        if (auto parts = split_callee(c)) {
            s.callees.push_back({std::move(parts->owner), std::move(parts->name), std::move(parts->descriptor)});
        }
    }
    return s;
}

}  // namespace biolabel::groundtruth
