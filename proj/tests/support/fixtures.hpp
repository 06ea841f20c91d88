#pragma once

#include "biolabel/classfile/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace biolabel::testing {

std::filesystem::path fixture_dir();
std::filesystem::path data_dir();

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Parses tests/fixtures/classes/<entry>, e.g. "fixtures/Branches.class".
classfile::ClassModel load_fixture(const std::string& entry);

/// Every class under tests/fixtures/classes, in entry order.
std::vector<classfile::ClassModel> load_all_fixtures();

const classfile::MethodModel& find_method(const classfile::ClassModel& cls, const std::string& name,
                                          const std::string& raw_descriptor = {});

/// The disassembly frozen by generate_fixtures.py.
const nlohmann::json& corpus_manifest();

/// Fresh directory removed on destruction.
class ScratchDir {
public:
    ScratchDir();
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace biolabel::testing
