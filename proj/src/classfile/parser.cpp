#include "biolabel/classfile/parser.hpp"

#include "biolabel/error.hpp"

#include <algorithm>
#include <string_view>

namespace biolabel::classfile {

namespace {

enum Tag : std::uint8_t {
    kUtf8 = 1,
    kInteger = 3,
    kFloat = 4,
    kLong = 5,
    kDouble = 6,
    kClass = 7,
    kString = 8,
    kFieldref = 9,
    kMethodref = 10,
    kInterfaceMethodref = 11,
    kNameAndType = 12,
    kMethodHandle = 15,
    kMethodType = 16,
    kDynamic = 17,
    kInvokeDynamic = 18,
    kModule = 19,
    kPackage = 20,
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes, std::size_t base = 0)
        : bytes_(bytes), base_(base) {}

    std::size_t pos() const noexcept { return pos_; }
    std::size_t file_offset() const noexcept { return base_ + pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void need(std::size_t n) const {
        if (remaining() < n) throw MalformedClassFile(file_offset(), "unexpected end of data");
    }

    std::uint8_t u1() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint16_t u2() {
        need(2);
        const auto v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u4() {
        need(4);
        const std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) |
                                (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                                (std::uint32_t{bytes_[pos_ + 2]} << 8) | bytes_[pos_ + 3];
        pos_ += 4;
        return v;
    }
    std::int16_t s2() { return static_cast<std::int16_t>(u2()); }
    std::int32_t s4() { return static_cast<std::int32_t>(u4()); }

    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    void skip(std::size_t n) { take(n); }
    void seek(std::size_t pos) { pos_ = pos; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

// Modified UTF-8 (class-file flavour) to standard UTF-8.
bool decode_modified_utf8(std::span<const std::uint8_t> in, std::string& out) {
    out.clear();
    out.reserve(in.size());
    auto append_code_point = [&out](std::uint32_t cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    };
    std::size_t i = 0;
    std::uint32_t pending_high = 0;
    while (i < in.size()) {
        const std::uint8_t b = in[i];
        std::uint32_t cp;
        if (b == 0 || b >= 0xF0) return false;
        if (b < 0x80) {
            cp = b;
            i += 1;
        } else if ((b & 0xE0) == 0xC0) {
            if (i + 1 >= in.size() || (in[i + 1] & 0xC0) != 0x80) return false;
            cp = ((b & 0x1Fu) << 6) | (in[i + 1] & 0x3Fu);
            i += 2;
        } else if ((b & 0xF0) == 0xE0) {
            if (i + 2 >= in.size() || (in[i + 1] & 0xC0) != 0x80 || (in[i + 2] & 0xC0) != 0x80) {
                return false;
            }
            cp = ((b & 0x0Fu) << 12) | ((in[i + 1] & 0x3Fu) << 6) | (in[i + 2] & 0x3Fu);
            i += 3;
        } else {
            return false;
        }
        if (cp >= 0xD800 && cp <= 0xDBFF) {
            if (pending_high != 0) append_code_point(0xFFFD);
            pending_high = cp;
            continue;
        }
        if (cp >= 0xDC00 && cp <= 0xDFFF && pending_high != 0) {
            append_code_point(0x10000 + ((pending_high - 0xD800) << 10) + (cp - 0xDC00));
            pending_high = 0;
            continue;
        }
        if (pending_high != 0) {
            append_code_point(0xFFFD);
            pending_high = 0;
        }
        append_code_point(cp);
    }
    if (pending_high != 0) append_code_point(0xFFFD);
    return true;
}

std::string dotted(std::string_view internal) {
    std::string out(internal);
    std::replace(out.begin(), out.end(), '/', '.');
    return out;
}

struct PoolEntry {
    std::uint8_t tag = 0;
    std::uint16_t a = 0;
    std::uint16_t b = 0;
    std::size_t file_offset = 0;
    std::string utf8;
};

class ConstantPool {
public:
    void read(ByteReader& in) {
        const std::uint16_t count = in.u2();
        if (count == 0) throw MalformedClassFile(in.file_offset() - 2, "constant pool count is 0");
        entries_.assign(count, PoolEntry{});
        for (std::uint16_t i = 1; i < count; ++i) {
            PoolEntry& e = entries_[i];
            e.file_offset = in.file_offset();
            e.tag = in.u1();
            switch (e.tag) {
                case kUtf8: {
                    const std::uint16_t len = in.u2();
                    if (!decode_modified_utf8(in.take(len), e.utf8)) {
                        throw MalformedClassFile(e.file_offset, "invalid modified UTF-8");
                    }
                    break;
                }
                case kInteger:
                case kFloat:
                    in.skip(4);
                    break;
                case kLong:
                case kDouble:
                    in.skip(8);
                    if (++i >= count) {
                        throw MalformedClassFile(e.file_offset, "8-byte constant in last pool slot");
                    }
                    break;
                case kClass:
                case kString:
                case kMethodType:
                case kModule:
                case kPackage:
                    e.a = in.u2();
                    break;
                case kFieldref:
                case kMethodref:
                case kInterfaceMethodref:
                case kNameAndType:
                case kDynamic:
                case kInvokeDynamic:
                    e.a = in.u2();
                    e.b = in.u2();
                    break;
                case kMethodHandle:
                    e.a = in.u1();
                    e.b = in.u2();
                    break;
                default:
                    throw MalformedClassFile(e.file_offset,
                                             "unknown constant tag " + std::to_string(e.tag));
            }
        }
    }

    const PoolEntry& entry(std::uint16_t index, std::uint8_t tag, std::size_t where) const {
        if (index == 0 || index >= entries_.size() || entries_[index].tag != tag) {
            throw MalformedClassFile(where, "bad constant pool reference #" + std::to_string(index));
        }
        return entries_[index];
    }

    bool valid_index(std::uint16_t index) const noexcept {
        return index != 0 && index < entries_.size() && entries_[index].tag != 0;
    }

    const std::string& utf8(std::uint16_t index, std::size_t where) const {
        return entry(index, kUtf8, where).utf8;
    }

    const std::string& class_internal_name(std::uint16_t index, std::size_t where) const {
        const auto& c = entry(index, kClass, where);
        return utf8(c.a, c.file_offset);
    }

    std::pair<const std::string*, const std::string*> name_and_type(std::uint16_t index,
                                                                    std::size_t where) const {
        const auto& nt = entry(index, kNameAndType, where);
        return {&utf8(nt.a, nt.file_offset), &utf8(nt.b, nt.file_offset)};
    }

    struct MemberRef {
        std::string owner;
        const std::string* name;
        const std::string* descriptor;
        std::size_t file_offset;
    };

    MemberRef member(std::uint16_t index, std::initializer_list<std::uint8_t> tags,
                     std::size_t where) const {
        if (index == 0 || index >= entries_.size() ||
            std::find(tags.begin(), tags.end(), entries_[index].tag) == tags.end()) {
            throw MalformedClassFile(where, "bad member reference #" + std::to_string(index));
        }
        const auto& e = entries_[index];
        const auto [name, desc] = name_and_type(e.b, e.file_offset);
        return {dotted(class_internal_name(e.a, e.file_offset)), name, desc, e.file_offset};
    }

    std::uint16_t bootstrap_slot(std::uint16_t index, std::size_t where) const {
        return entry(index, kInvokeDynamic, where).a;
    }

    /// Name of the method a bootstrap MethodHandle refers to.
    const std::string& handle_target_name(std::uint16_t index, std::size_t where) const {
        const auto& h = entry(index, kMethodHandle, where);
        return *member(h.b, {kMethodref, kInterfaceMethodref}, h.file_offset).name;
    }

    MemberRef invoke_dynamic(std::uint16_t index, std::size_t where) const {
        const auto& e = entry(index, kInvokeDynamic, where);
        const auto [name, desc] = name_and_type(e.b, e.file_offset);
        return {std::string(kIndyOwner), name, desc, e.file_offset};
    }

private:
    std::vector<PoolEntry> entries_;
};

MethodDescriptor method_descriptor_at(const std::string& raw, std::size_t where) {
    try {
        return parse_method_descriptor(raw);
    } catch (const DescriptorSyntax& e) {
        throw MalformedClassFile(where, std::string("method descriptor: ") + e.what());
    }
}

TypeRef field_descriptor_at(const std::string& raw, std::size_t where) {
    try {
        return parse_field_descriptor(raw);
    } catch (const DescriptorSyntax& e) {
        throw MalformedClassFile(where, std::string("field descriptor: ") + e.what());
    }
}

Other other(std::uint16_t pop, std::uint16_t push) { return Other{pop, push, false}; }

class CodeDecoder {
public:
    CodeDecoder(const ConstantPool& pool, std::span<const std::uint8_t> code,
                std::size_t code_file_offset)
        : pool_(pool), in_(code, code_file_offset), code_size_(code.size()) {}

    std::vector<Instruction> decode() {
        std::vector<Instruction> out;
        while (in_.remaining() > 0) {
            index_ = out.size();
            out.push_back(next());
        }
        return out;
    }

    struct IndySite {
        std::size_t instruction;
        std::uint16_t bootstrap_slot;
        std::size_t file_offset;
    };
    const std::vector<IndySite>& indy_sites() const noexcept { return indy_; }

private:
    std::uint32_t target(std::uint32_t pc, std::int64_t delta) const {
        const std::int64_t t = static_cast<std::int64_t>(pc) + delta;
        if (t < 0 || t >= static_cast<std::int64_t>(code_size_)) {
            throw MalformedClassFile(in_.file_offset(), "branch target out of range");
        }
        return static_cast<std::uint32_t>(t);
    }

    Instruction next() {
        Instruction insn;
        const auto pc = static_cast<std::uint32_t>(in_.pos());
        const std::size_t where = in_.file_offset();
        insn.offset = pc;
        std::uint8_t op = in_.u1();
        bool wide = false;
        if (op == 196) {  // wide
            wide = true;
            op = in_.u1();
        }
        insn.opcode = op;
        auto local_index = [&]() -> std::uint16_t { return wide ? in_.u2() : in_.u1(); };

        if (wide) {
            const bool ok = (op >= 21 && op <= 25) || (op >= 54 && op <= 58) || op == 132 ||
                            op == 169;
            if (!ok) throw MalformedClassFile(where, "invalid opcode after wide");
        }

        if (op == 0) {
            insn.kind = other(0, 0);
        } else if (op == 1 || (op >= 2 && op <= 8) || op == 11 || op == 12 || op == 13) {
            insn.kind = Const{1};
        } else if (op == 9 || op == 10 || op == 14 || op == 15) {
            insn.kind = Const{2};
        } else if (op == 16) {
            in_.skip(1);
            insn.kind = Const{1};
        } else if (op == 17) {
            in_.skip(2);
            insn.kind = Const{1};
        } else if (op == 18 || op == 19 || op == 20) {
            const std::uint16_t idx = op == 18 ? in_.u1() : in_.u2();
            if (!pool_.valid_index(idx)) throw MalformedClassFile(where, "bad ldc index");
            insn.kind = Const{static_cast<std::uint8_t>(op == 20 ? 2 : 1)};
        } else if (op >= 21 && op <= 25) {
            insn.kind = Load{local_index(), static_cast<std::uint8_t>(op == 22 || op == 24 ? 2 : 1)};
        } else if (op >= 26 && op <= 45) {
            const int group = (op - 26) / 4;  // i, l, f, d, a
            insn.kind = Load{static_cast<std::uint16_t>((op - 26) % 4),
                             static_cast<std::uint8_t>(group == 1 || group == 3 ? 2 : 1)};
        } else if (op >= 46 && op <= 53) {
            insn.kind = other(2, (op == 47 || op == 49) ? 2 : 1);
        } else if (op >= 54 && op <= 58) {
            insn.kind =
                Store{local_index(), static_cast<std::uint8_t>(op == 55 || op == 57 ? 2 : 1)};
        } else if (op >= 59 && op <= 78) {
            const int group = (op - 59) / 4;
            insn.kind = Store{static_cast<std::uint16_t>((op - 59) % 4),
                              static_cast<std::uint8_t>(group == 1 || group == 3 ? 2 : 1)};
        } else if (op >= 79 && op <= 86) {
            insn.kind = other((op == 80 || op == 82) ? 4 : 3, 0);
        } else if (op >= 87 && op <= 95) {
            static constexpr StackEffect effects[] = {
                StackEffect::Pop,    StackEffect::Pop2,   StackEffect::Dup,
                StackEffect::DupX1,  StackEffect::DupX2,  StackEffect::Dup2,
                StackEffect::Dup2X1, StackEffect::Dup2X2, StackEffect::Swap};
            insn.kind = StackOp{effects[op - 87]};
        } else if (op >= 96 && op <= 115) {
            const bool two = ((op - 96) % 4 == 1) || ((op - 96) % 4 == 3);  // l, d
            insn.kind = two ? other(4, 2) : other(2, 1);
        } else if (op >= 116 && op <= 119) {
            const bool two = op == 117 || op == 119;
            insn.kind = two ? other(2, 2) : other(1, 1);
        } else if (op >= 120 && op <= 125) {
            insn.kind = (op % 2 == 1) ? other(3, 2) : other(2, 1);  // lshl, lshr, lushr
        } else if (op >= 126 && op <= 131) {
            insn.kind = (op % 2 == 1) ? other(4, 2) : other(2, 1);
        } else if (op == 132) {
            local_index();
            wide ? in_.skip(2) : in_.skip(1);
            insn.kind = other(0, 0);
        } else if (op >= 133 && op <= 147) {
            static constexpr std::uint8_t pops[] = {1, 1, 1, 2, 2, 2, 1, 1, 1, 2, 2, 2, 1, 1, 1};
            static constexpr std::uint8_t pushes[] = {2, 1, 2, 1, 1, 2, 1, 2, 2, 1, 2, 1, 1, 1, 1};
            insn.kind = other(pops[op - 133], pushes[op - 133]);
        } else if (op >= 148 && op <= 152) {
            insn.kind = other((op == 149 || op == 150) ? 2 : 4, 1);
        } else if ((op >= 153 && op <= 166) || op == 198 || op == 199) {
            const std::int16_t delta = in_.s2();
            Branch b;
            b.targets = {target(pc, delta)};
            b.pop_words = (op >= 159 && op <= 166) ? 2 : 1;
            insn.kind = std::move(b);
        } else if (op == 167 || op == 200) {
            const std::int32_t delta = op == 167 ? in_.s2() : in_.s4();
            Branch b;
            b.targets = {target(pc, delta)};
            b.falls_through = false;
            insn.kind = std::move(b);
        } else if (op == 168 || op == 201) {
            const std::int32_t delta = op == 168 ? in_.s2() : in_.s4();
            Branch b;
            b.targets = {target(pc, delta)};
            b.push_words = 1;
            b.falls_through = false;
            insn.kind = std::move(b);
        } else if (op == 169) {
            local_index();
            Branch b;
            b.falls_through = false;
            b.is_ret = true;
            insn.kind = std::move(b);
        } else if (op == 170 || op == 171) {
            while (in_.pos() % 4 != 0) in_.skip(1);
            Branch b;
            b.pop_words = 1;
            b.falls_through = false;
            b.targets.push_back(target(pc, in_.s4()));
            if (op == 170) {
                const std::int32_t low = in_.s4();
                const std::int32_t high = in_.s4();
                if (high < low) throw MalformedClassFile(where, "tableswitch high < low");
                const std::uint64_t n = static_cast<std::uint64_t>(
                    static_cast<std::int64_t>(high) - static_cast<std::int64_t>(low) + 1);
                if (n > in_.remaining() / 4) throw MalformedClassFile(where, "truncated tableswitch");
                for (std::uint64_t i = 0; i < n; ++i) b.targets.push_back(target(pc, in_.s4()));
            } else {
                const std::int32_t npairs = in_.s4();
                if (npairs < 0 || static_cast<std::uint64_t>(npairs) > in_.remaining() / 8) {
                    throw MalformedClassFile(where, "bad lookupswitch pair count");
                }
                for (std::int32_t i = 0; i < npairs; ++i) {
                    in_.skip(4);
                    b.targets.push_back(target(pc, in_.s4()));
                }
            }
            std::sort(b.targets.begin(), b.targets.end());
            b.targets.erase(std::unique(b.targets.begin(), b.targets.end()), b.targets.end());
            insn.kind = std::move(b);
        } else if (op >= 172 && op <= 177) {
            static constexpr std::uint8_t words[] = {1, 2, 1, 2, 1, 0};
            insn.kind = Return{op != 177, words[op - 172]};
        } else if (op >= 178 && op <= 181) {
            const auto ref = pool_.member(in_.u2(), {kFieldref}, where);
            FieldAccess access{ref.owner, *ref.name, field_descriptor_at(*ref.descriptor, ref.file_offset),
                               op == 178 || op == 179};
            if (op == 178 || op == 180) {
                insn.kind = FieldGet{std::move(access)};
            } else {
                insn.kind = FieldPut{std::move(access)};
            }
        } else if (op >= 182 && op <= 186) {
            const std::uint16_t idx = in_.u2();
            Invoke inv;
            ConstantPool::MemberRef ref;
            switch (op) {
                case 182:
                    inv.kind = InvokeKind::Virtual;
                    ref = pool_.member(idx, {kMethodref}, where);
                    break;
                case 183:
                    inv.kind = InvokeKind::Special;
                    ref = pool_.member(idx, {kMethodref, kInterfaceMethodref}, where);
                    break;
                case 184:
                    inv.kind = InvokeKind::Static;
                    ref = pool_.member(idx, {kMethodref, kInterfaceMethodref}, where);
                    break;
                case 185:
                    inv.kind = InvokeKind::Interface;
                    ref = pool_.member(idx, {kInterfaceMethodref}, where);
                    in_.skip(2);
                    break;
                default:
                    inv.kind = InvokeKind::Dynamic;
                    ref = pool_.invoke_dynamic(idx, where);
                    indy_.push_back({index_, pool_.bootstrap_slot(idx, where), where});
                    in_.skip(2);
                    break;
            }
            inv.owner = std::move(ref.owner);
            inv.name = *ref.name;
            inv.descriptor = method_descriptor_at(*ref.descriptor, ref.file_offset);
            insn.kind = std::move(inv);
        } else if (op == 187) {
            in_.skip(2);
            insn.kind = other(0, 1);
        } else if (op == 188) {
            in_.skip(1);
            insn.kind = other(1, 1);
        } else if (op == 189 || op == 192 || op == 193) {
            in_.skip(2);
            insn.kind = other(1, 1);
        } else if (op == 190) {
            insn.kind = other(1, 1);
        } else if (op == 191) {
            insn.kind = Other{1, 0, true};
        } else if (op == 194 || op == 195) {
            insn.kind = other(1, 0);
        } else if (op == 197) {
            in_.skip(2);
            const std::uint8_t dims = in_.u1();
            if (dims == 0) throw MalformedClassFile(where, "multianewarray with 0 dimensions");
            insn.kind = other(dims, 1);
        } else {
            // breakpoint, impdep1/2 and unassigned opcodes: no operands, no stack effect.
            insn.kind = other(0, 0);
        }
        return insn;
    }

    const ConstantPool& pool_;
    std::size_t index_ = 0;
    std::vector<IndySite> indy_;
    ByteReader in_;
    std::size_t code_size_;
};

void skip_attributes(ByteReader& in) {
    const std::uint16_t count = in.u2();
    for (std::uint16_t i = 0; i < count; ++i) {
        in.skip(2);
        in.skip(in.u4());
    }
}

void validate_offsets(const MethodModel& m, std::uint32_t code_length, std::size_t where) {
    for (const auto& insn : m.instructions) {
        if (const auto* b = std::get_if<Branch>(&insn.kind)) {
            for (const auto t : b->targets) {
                if (!m.index_of(t)) {
                    throw MalformedClassFile(where, "branch target " + std::to_string(t) +
                                                        " is not an instruction boundary");
                }
            }
        }
    }
    for (const auto& h : m.handlers) {
        const bool end_ok = h.end == code_length || m.index_of(h.end).has_value();
        if (!m.index_of(h.start) || !end_ok || h.start >= h.end || !m.index_of(h.handler)) {
            throw MalformedClassFile(where, "bad exception table entry");
        }
    }
    if (!m.instructions.empty() && m.instructions.back().falls_through()) {
        throw MalformedClassFile(where, "control falls off the end of the code");
    }
}

struct PendingIndy {
    std::size_t method;
    std::size_t instruction;
    std::uint16_t bootstrap_slot;
    std::size_t file_offset;
};

MethodModel read_method(ByteReader& in, const ConstantPool& pool, const std::string& owner,
                        std::size_t method_index, std::vector<PendingIndy>& pending) {
    MethodModel m;
    const std::size_t start = in.file_offset();
    m.owner = owner;
    m.access_flags = in.u2();
    m.name = pool.utf8(in.u2(), start);
    m.raw_descriptor = pool.utf8(in.u2(), start);
    m.descriptor = method_descriptor_at(m.raw_descriptor, start);
    m.is_abstract_or_native = (m.access_flags & (access::kAbstract | access::kNative)) != 0;

    const std::uint16_t attr_count = in.u2();
    bool seen_code = false;
    for (std::uint16_t i = 0; i < attr_count; ++i) {
        const std::size_t attr_at = in.file_offset();
        const std::string& attr_name = pool.utf8(in.u2(), attr_at);
        const std::uint32_t length = in.u4();
        auto body = in.take(length);
        if (attr_name != "Code") continue;
        if (seen_code) throw MalformedClassFile(attr_at, "duplicate Code attribute");
        if (m.is_abstract_or_native) {
            throw MalformedClassFile(attr_at, "Code attribute on abstract or native method");
        }
        seen_code = true;

        const std::size_t body_at = attr_at + 6;
        ByteReader code_in(body, body_at);
        m.max_stack = code_in.u2();
        m.max_locals = code_in.u2();
        const std::uint32_t code_length = code_in.u4();
        if (code_length == 0) throw MalformedClassFile(code_in.file_offset(), "empty code");
        const std::size_t code_at = code_in.file_offset();
        auto code = code_in.take(code_length);
        CodeDecoder decoder(pool, code, code_at);
        m.instructions = decoder.decode();
        for (const auto& site : decoder.indy_sites()) {
            pending.push_back({method_index, site.instruction, site.bootstrap_slot, site.file_offset});
        }

        const std::uint16_t handler_count = code_in.u2();
        m.handlers.reserve(handler_count);
        for (std::uint16_t h = 0; h < handler_count; ++h) {
            ExceptionHandler eh;
            const std::size_t entry_at = code_in.file_offset();
            eh.start = code_in.u2();
            eh.end = code_in.u2();
            eh.handler = code_in.u2();
            const std::uint16_t catch_index = code_in.u2();
            if (catch_index != 0) eh.catch_type = dotted(pool.class_internal_name(catch_index, entry_at));
            m.handlers.push_back(std::move(eh));
        }
        skip_attributes(code_in);
        if (code_in.remaining() != 0) {
            throw MalformedClassFile(code_in.file_offset(), "trailing bytes in Code attribute");
        }
        validate_offsets(m, code_length, code_at);
    }
    return m;
}

}  // namespace

bool Instruction::falls_through() const noexcept {
    if (const auto* b = std::get_if<Branch>(&kind)) return b->falls_through;
    if (std::holds_alternative<Return>(kind)) return false;
    if (const auto* o = std::get_if<Other>(&kind)) return !o->terminates;
    return true;
}

std::optional<std::size_t> MethodModel::index_of(std::uint32_t offset) const {
    const auto it = std::lower_bound(
        instructions.begin(), instructions.end(), offset,
        [](const Instruction& insn, std::uint32_t off) { return insn.offset < off; });
    if (it == instructions.end() || it->offset != offset) return std::nullopt;
    return static_cast<std::size_t>(it - instructions.begin());
}

ClassModel parse_class(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.remaining() < 4 || in.u4() != kClassMagic) throw MalformedClassFile(0, "bad magic");
    const std::uint16_t minor = in.u2();
    const std::uint16_t major = in.u2();
    if (major < kMinMajorVersion || major > kMaxMajorVersion) throw UnsupportedVersion(major, minor);

    ConstantPool pool;
    pool.read(in);

    ClassModel cls;
    cls.major_version = major;
    const std::size_t header_at = in.file_offset();
    cls.access_flags = in.u2();
    const std::string& this_name = pool.class_internal_name(in.u2(), header_at);
    if (this_name.empty() || this_name.find_first_of(";([") != std::string::npos) {
        throw MalformedClassFile(header_at, "invalid class name \"" + this_name + "\"");
    }
    cls.binary_name = dotted(this_name);
    const std::uint16_t super_index = in.u2();
    if (super_index != 0) cls.super_name = dotted(pool.class_internal_name(super_index, header_at));

    const std::uint16_t interface_count = in.u2();
    in.skip(std::size_t{interface_count} * 2);

    const std::uint16_t field_count = in.u2();
    for (std::uint16_t i = 0; i < field_count; ++i) {
        in.skip(6);
        skip_attributes(in);
    }

    const std::uint16_t method_count = in.u2();
    cls.methods.reserve(method_count);
    std::vector<PendingIndy> pending;
    for (std::uint16_t i = 0; i < method_count; ++i) {
        cls.methods.push_back(read_method(in, pool, cls.binary_name, i, pending));
    }

    // invokedynamic sites are named after their bootstrap method, which is
    // only known once the class-level BootstrapMethods attribute is read.
    std::vector<std::uint16_t> bootstrap_handles;
    const std::uint16_t class_attr_count = in.u2();
    for (std::uint16_t i = 0; i < class_attr_count; ++i) {
        const std::size_t attr_at = in.file_offset();
        const std::string& attr_name = pool.utf8(in.u2(), attr_at);
        ByteReader attr(in.take(in.u4()), attr_at + 6);
        if (attr_name != "BootstrapMethods") continue;
        const std::uint16_t n = attr.u2();
        for (std::uint16_t b = 0; b < n; ++b) {
            bootstrap_handles.push_back(attr.u2());
            attr.skip(std::size_t{attr.u2()} * 2);
        }
    }
    for (const auto& site : pending) {
        if (site.bootstrap_slot >= bootstrap_handles.size()) continue;  // keep the call-site name
        auto& inv = std::get<Invoke>(cls.methods[site.method].instructions[site.instruction].kind);
        inv.name = pool.handle_target_name(bootstrap_handles[site.bootstrap_slot], site.file_offset);
    }
    if (in.remaining() != 0) throw MalformedClassFile(in.file_offset(), "trailing bytes after class");
    return cls;
}

}  // namespace biolabel::classfile
