#include "fixtures.hpp"

#include "biolabel/classfile/archive.hpp"
#include "biolabel/classfile/parser.hpp"

#include <atomic>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <unistd.h>

namespace biolabel::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return BIOLABEL_FIXTURE_DIR; }
fs::path data_dir() { return BIOLABEL_DATA_DIR; }

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
    const auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

classfile::ClassModel load_fixture(const std::string& entry) {
    const auto bytes = read_bytes(fixture_dir() / "classes" / entry);
    auto model = classfile::parse_class(bytes);
    model.source_entry = entry;
    return model;
}

std::vector<classfile::ClassModel> load_all_fixtures() {
    std::vector<classfile::ClassModel> out;
    classfile::scan_archive(fixture_dir() / "classes",
                            [&](classfile::ClassModel&& m) { out.push_back(std::move(m)); });
    return out;
}

const classfile::MethodModel& find_method(const classfile::ClassModel& cls, const std::string& name,
                                          const std::string& raw_descriptor) {
    for (const auto& m : cls.methods) {
        if (m.name == name && (raw_descriptor.empty() || m.raw_descriptor == raw_descriptor)) return m;
    }
    throw std::out_of_range("no method " + cls.binary_name + "." + name + raw_descriptor);
}

const nlohmann::json& corpus_manifest() {
    static const nlohmann::json manifest = [] {
        std::ifstream in(fixture_dir() / "corpus_manifest.json");
        return nlohmann::json::parse(in);
    }();
    return manifest;
}

ScratchDir::ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("biolabel-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

}  // namespace biolabel::testing
