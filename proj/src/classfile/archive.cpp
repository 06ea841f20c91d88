#include "biolabel/classfile/archive.hpp"

#include "biolabel/classfile/parser.hpp"
#include "biolabel/error.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <limits>

namespace biolabel::classfile {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint32_t kZip64EndSig = 0x06064b50;
constexpr std::uint32_t kZip64LocatorSig = 0x07064b50;
constexpr std::uint64_t kMaxEntryBytes = 256ull << 20;

std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}
std::uint64_t le64(const std::uint8_t* p) {
    return std::uint64_t{le32(p)} | (std::uint64_t{le32(p + 4)} << 32);
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_nested_archive(const std::string& name) {
    return ends_with(name, ".jar") || ends_with(name, ".zip") || ends_with(name, ".aar");
}

class File {
public:
    explicit File(const fs::path& path) : fd_(::open(path.c_str(), O_RDONLY | O_CLOEXEC)) {
        if (fd_ < 0) {
            throw ArchiveUnreadable("cannot open " + path.string() + ": " + std::strerror(errno));
        }
    }
    File(const File&) = delete;
    File& operator=(const File&) = delete;
    ~File() {
        if (fd_ >= 0) ::close(fd_);
    }

    std::uint64_t size() const {
        const off_t end = ::lseek(fd_, 0, SEEK_END);
        return end < 0 ? 0 : static_cast<std::uint64_t>(end);
    }

    /// Thread-safe positional read; false on short read.
    bool read_at(std::uint64_t offset, std::uint8_t* out, std::size_t n) const {
        std::size_t done = 0;
        while (done < n) {
            const ssize_t got = ::pread(fd_, out + done, n - done, static_cast<off_t>(offset + done));
            if (got < 0 && errno == EINTR) continue;
            if (got <= 0) return false;
            done += static_cast<std::size_t>(got);
        }
        return true;
    }

private:
    int fd_;
};

struct ZipEntry {
    std::string name;
    std::uint16_t flags = 0;
    std::uint16_t method = 0;
    std::uint32_t crc = 0;
    std::uint64_t compressed = 0;
    std::uint64_t uncompressed = 0;
    std::uint64_t local_offset = 0;
};

std::vector<std::uint8_t> inflate_raw(const std::vector<std::uint8_t>& in, std::uint64_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error("inflateInit2 failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) {
        throw Error("deflate stream is corrupt or has the wrong size");
    }
    return out;
}

}  // namespace

class ClassSource::Impl {
public:
    virtual ~Impl() = default;
    virtual std::vector<std::uint8_t> read(std::size_t index) const = 0;

    fs::path path;
    std::vector<std::string> names;
    std::vector<std::string> warnings;
};

namespace {

class ZipSource final : public ClassSource::Impl {
public:
    explicit ZipSource(const fs::path& p) : file_(p) {
        path = p;
        index();
    }

    std::vector<std::uint8_t> read(std::size_t i) const override {
        const ZipEntry& e = entries_.at(i);
        if (e.flags & 0x1) throw Error("encrypted entry");
        if (e.uncompressed > kMaxEntryBytes || e.compressed > kMaxEntryBytes) {
            throw Error("entry too large");
        }
        std::array<std::uint8_t, 30> lh{};
        if (!file_.read_at(e.local_offset, lh.data(), lh.size()) || le32(lh.data()) != kLocalHeaderSig) {
            throw Error("bad local file header");
        }
        const std::uint64_t data_at = e.local_offset + 30 + le16(&lh[26]) + le16(&lh[28]);
        std::vector<std::uint8_t> raw(e.compressed);
        if (!file_.read_at(data_at, raw.data(), raw.size())) throw Error("truncated entry data");

        std::vector<std::uint8_t> data;
        if (e.method == 0) {
            if (e.compressed != e.uncompressed) throw Error("stored entry size mismatch");
            data = std::move(raw);
        } else if (e.method == 8) {
            data = inflate_raw(raw, e.uncompressed);
        } else {
            throw Error("unsupported compression method " + std::to_string(e.method));
        }
        const auto crc = crc32(0L, data.data(), static_cast<uInt>(data.size()));
        if (crc != e.crc) throw Error("CRC mismatch");
        return data;
    }

private:
    [[noreturn]] void corrupt(const std::string& why) const {
        throw ArchiveUnreadable(path.string() + ": " + why);
    }

    void index() {
        const std::uint64_t size = file_.size();
        if (size < 22) corrupt("too small to be a zip archive");

        // The end-of-central-directory record sits within the last 64 KiB + 22 bytes.
        const std::uint64_t tail_len = std::min<std::uint64_t>(size, 0xFFFF + 22);
        std::vector<std::uint8_t> tail(tail_len);
        if (!file_.read_at(size - tail_len, tail.data(), tail.size())) corrupt("read failed");
        std::int64_t eocd = -1;
        for (std::int64_t i = static_cast<std::int64_t>(tail_len) - 22; i >= 0; --i) {
            if (le32(&tail[i]) == kEndSig) {
                eocd = i;
                break;
            }
        }
        if (eocd < 0) corrupt("no end of central directory record");
        const std::uint8_t* end = &tail[eocd];
        std::uint64_t total = le16(end + 10);
        std::uint64_t cd_size = le32(end + 12);
        std::uint64_t cd_offset = le32(end + 16);
        const std::uint64_t eocd_abs = size - tail_len + static_cast<std::uint64_t>(eocd);

        if (total == 0xFFFF || cd_size == 0xFFFFFFFF || cd_offset == 0xFFFFFFFF) {
            std::array<std::uint8_t, 20> loc{};
            if (eocd_abs < 20 || !file_.read_at(eocd_abs - 20, loc.data(), loc.size()) ||
                le32(loc.data()) != kZip64LocatorSig) {
                corrupt("zip64 locator missing");
            }
            const std::uint64_t z64_at = le64(&loc[8]);
            std::array<std::uint8_t, 56> z64{};
            if (!file_.read_at(z64_at, z64.data(), z64.size()) || le32(z64.data()) != kZip64EndSig) {
                corrupt("zip64 end record missing");
            }
            total = le64(&z64[32]);
            cd_size = le64(&z64[40]);
            cd_offset = le64(&z64[48]);
        }
        if (cd_offset > size || cd_size > size - cd_offset) corrupt("central directory out of bounds");
        if (total > cd_size / 46 + 1) corrupt("entry count inconsistent with directory size");

        std::vector<std::uint8_t> cd(cd_size);
        if (!file_.read_at(cd_offset, cd.data(), cd.size())) corrupt("central directory unreadable");

        std::size_t pos = 0;
        std::vector<ZipEntry> all;
        all.reserve(total);
        for (std::uint64_t n = 0; n < total; ++n) {
            if (pos + 46 > cd.size() || le32(&cd[pos]) != kCentralSig) {
                corrupt("bad central directory entry " + std::to_string(n));
            }
            const std::uint8_t* h = &cd[pos];
            ZipEntry e;
            e.flags = le16(h + 8);
            e.method = le16(h + 10);
            e.crc = le32(h + 16);
            e.compressed = le32(h + 20);
            e.uncompressed = le32(h + 24);
            const std::size_t name_len = le16(h + 28);
            const std::size_t extra_len = le16(h + 30);
            const std::size_t comment_len = le16(h + 32);
            e.local_offset = le32(h + 42);
            if (pos + 46 + name_len + extra_len + comment_len > cd.size()) {
                corrupt("central directory entry overruns directory");
            }
            e.name.assign(reinterpret_cast<const char*>(h + 46), name_len);
            parse_zip64_extra(e, h + 46 + name_len, extra_len);
            pos += 46 + name_len + extra_len + comment_len;
            all.push_back(std::move(e));
        }

        for (auto& e : all) {
            if (!e.name.empty() && e.name.back() == '/') continue;
            if (is_nested_archive(e.name)) {
                warnings.push_back(e.name + ": nested archive skipped");
            } else if (ends_with(e.name, ".class")) {
                entries_.push_back(std::move(e));
            }
        }
        std::stable_sort(entries_.begin(), entries_.end(),
                         [](const ZipEntry& a, const ZipEntry& b) { return a.name < b.name; });
        names.reserve(entries_.size());
        for (const auto& e : entries_) names.push_back(e.name);
    }

    static void parse_zip64_extra(ZipEntry& e, const std::uint8_t* p, std::size_t len) {
        std::size_t i = 0;
        while (i + 4 <= len) {
            const std::uint16_t id = le16(p + i);
            const std::uint16_t sz = le16(p + i + 2);
            if (i + 4 + sz > len) return;
            if (id == 0x0001) {
                std::size_t j = i + 4;
                const std::size_t stop = i + 4 + sz;
                if (e.uncompressed == 0xFFFFFFFF && j + 8 <= stop) {
                    e.uncompressed = le64(p + j);
                    j += 8;
                }
                if (e.compressed == 0xFFFFFFFF && j + 8 <= stop) {
                    e.compressed = le64(p + j);
                    j += 8;
                }
                if (e.local_offset == 0xFFFFFFFF && j + 8 <= stop) e.local_offset = le64(p + j);
            }
            i += 4 + sz;
        }
    }

    File file_;
    std::vector<ZipEntry> entries_;
};

class FileTreeSource final : public ClassSource::Impl {
public:
    FileTreeSource(const fs::path& p, bool single_file) {
        path = p;
        if (single_file) {
            files_.push_back(p);
            names.push_back(p.filename().string());
            return;
        }
        std::vector<std::pair<std::string, fs::path>> found;
        std::error_code ec;
        fs::recursive_directory_iterator it(p, fs::directory_options::skip_permission_denied, ec);
        if (ec) throw ArchiveUnreadable("cannot read directory " + p.string() + ": " + ec.message());
        for (const auto& entry : it) {
            if (!entry.is_regular_file()) continue;
            const std::string rel = fs::relative(entry.path(), p).generic_string();
            if (is_nested_archive(rel)) {
                warnings.push_back(rel + ": nested archive skipped");
            } else if (ends_with(rel, ".class")) {
                found.emplace_back(rel, entry.path());
            }
        }
        std::sort(found.begin(), found.end());
        for (auto& [rel, full] : found) {
            names.push_back(std::move(rel));
            files_.push_back(std::move(full));
        }
    }

    std::vector<std::uint8_t> read(std::size_t i) const override {
        std::ifstream in(files_.at(i), std::ios::binary);
        if (!in) throw Error("cannot open " + files_[i].string());
        std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
        if (in.bad()) throw Error("read failed for " + files_[i].string());
        return data;
    }

private:
    std::vector<fs::path> files_;
};

bool looks_like_zip(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    return in.gcount() == 4 && head[0] == 'P' && head[1] == 'K';
}

}  // namespace

ClassSource::ClassSource(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ClassSource::ClassSource(ClassSource&&) noexcept = default;
ClassSource& ClassSource::operator=(ClassSource&&) noexcept = default;
ClassSource::~ClassSource() = default;

ClassSource ClassSource::open(const fs::path& path) {
    std::error_code ec;
    const auto status = fs::status(path, ec);
    if (ec || !fs::exists(status)) throw ArchiveUnreadable("no such path: " + path.string());
    if (fs::is_directory(status)) {
        return ClassSource(std::make_unique<FileTreeSource>(path, false));
    }
    const std::string ext = path.extension().string();
    if (ext == ".class") return ClassSource(std::make_unique<FileTreeSource>(path, true));
    if (ext == ".jar" || ext == ".zip" || looks_like_zip(path)) {
        return ClassSource(std::make_unique<ZipSource>(path));
    }
    throw ArchiveUnreadable("not a class file, archive or directory: " + path.string());
}

const fs::path& ClassSource::path() const noexcept { return impl_->path; }
std::size_t ClassSource::size() const noexcept { return impl_->names.size(); }
const std::string& ClassSource::entry_name(std::size_t index) const { return impl_->names.at(index); }
std::vector<std::uint8_t> ClassSource::read(std::size_t index) const { return impl_->read(index); }
const std::vector<std::string>& ClassSource::index_warnings() const noexcept {
    return impl_->warnings;
}

ClassModel parse_entry(const ClassSource& source, std::size_t index) {
    const auto bytes = source.read(index);
    ClassModel cls = parse_class(bytes);
    cls.source_archive = source.path().string();
    cls.source_entry = source.entry_name(index);
    return cls;
}

ScanSummary scan_archive(const fs::path& path, const std::function<void(ClassModel&&)>& sink) {
    const ClassSource source = ClassSource::open(path);
    ScanSummary summary;
    summary.warnings = source.index_warnings();
    for (std::size_t i = 0; i < source.size(); ++i) {
        ClassModel cls;
        try {
            cls = parse_entry(source, i);
        } catch (const Error& e) {
            ++summary.failures;
            summary.warnings.push_back(source.entry_name(i) + ": " + e.what());
            continue;
        }
        ++summary.classes;
        summary.methods += cls.methods.size();
        sink(std::move(cls));
    }
    return summary;
}

}  // namespace biolabel::classfile
