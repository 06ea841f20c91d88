#include "biolabel/classfile/parser.hpp"
#include "biolabel/error.hpp"

#include "class_writer.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace biolabel;
using namespace biolabel::classfile;

namespace {

template <typename T>
const T& kind_at(const MethodModel& m, std::size_t i) {
    REQUIRE(i < m.instructions.size());
    const auto* k = std::get_if<T>(&m.instructions[i].kind);
    REQUIRE(k != nullptr);
    return *k;
}

std::vector<std::uint32_t> branch_targets(const Instruction& insn) {
    if (const auto* b = std::get_if<Branch>(&insn.kind)) {
        std::set<std::uint32_t> unique(b->targets.begin(), b->targets.end());
        return {unique.begin(), unique.end()};
    }
    return {};
}

}  // namespace

TEST_SUITE("parser") {

TEST_CASE("bad magic") {
    const std::vector<std::uint8_t> bytes{0xCA, 0xFE, 0xBA, 0xBF, 0, 0, 0, 49};
    try {
        parse_class(bytes);
        FAIL("accepted bad magic");
    } catch (const MalformedClassFile& e) {
        CHECK(e.offset() == 0);
    }
    CHECK_THROWS_AS(parse_class(std::vector<std::uint8_t>{}), MalformedClassFile);
}

TEST_CASE("version bounds") {
    auto with_major = [](std::uint16_t major) {
        return testing::ClassWriter("v/C", "java/lang/Object", major).bytes();
    };
    CHECK_THROWS_AS(parse_class(with_major(44)), UnsupportedVersion);
    CHECK_THROWS_AS(parse_class(with_major(66)), UnsupportedVersion);
    CHECK(parse_class(with_major(45)).major_version == 45);
    CHECK(parse_class(with_major(65)).major_version == 65);
}

TEST_CASE("class with one empty void method") {
    const auto cls = testing::load_fixture("fixtures/Empty.class");
    CHECK(cls.binary_name == "fixtures.Empty");
    REQUIRE(cls.methods.size() == 2);
    CHECK(cls.methods[0].name == "<init>");
    const auto& f = testing::find_method(cls, "f");
    CHECK(f.descriptor.render() == "()V");
    CHECK(f.instructions.size() == 1);
    CHECK(kind_at<Return>(f, 0).has_value == false);
}

TEST_CASE("authenticate stub signature") {
    const auto cls = testing::load_fixture("android/hardware/biometrics/BiometricPrompt.class");
    const auto& m = testing::find_method(
        cls, "authenticate",
        "(Landroid/hardware/biometrics/BiometricPrompt$CryptoObject;Landroid/os/CancellationSignal;"
        "Ljava/util/concurrent/Executor;Landroid/hardware/biometrics/BiometricPrompt$AuthenticationCallback;)V");
    CHECK(m.owner == "android.hardware.biometrics.BiometricPrompt");
    REQUIRE(m.descriptor.params.size() == 4);
    for (const auto& p : m.descriptor.params) CHECK(p.is_object());
    CHECK(m.descriptor.params[0].simple_name() == "BiometricPrompt$CryptoObject");
    CHECK(m.descriptor.returns_void());
    CHECK(m.parameter_count() == 5);
}

TEST_CASE("fixture corpus matches the disassembler oracle") {
    std::size_t classes = 0;
    for (const auto& expected : testing::corpus_manifest()["classes"]) {
        CAPTURE(expected["entry"].get<std::string>());
        const auto cls = testing::load_fixture(expected["entry"]);
        ++classes;
        CHECK(cls.binary_name == expected["name"]);
        REQUIRE(cls.super_name.has_value());
        CHECK(*cls.super_name == expected["super"]);
        REQUIRE(cls.methods.size() == expected["methods"].size());
        for (std::size_t i = 0; i < cls.methods.size(); ++i) {
            const auto& m = cls.methods[i];
            const auto& em = expected["methods"][i];
            CAPTURE(m.name);
            CHECK(m.owner == cls.binary_name);
            CHECK(m.name == em["name"]);
            CHECK(m.raw_descriptor == em["descriptor"]);
            CHECK(m.descriptor.render() == m.raw_descriptor);
            CHECK(m.access_flags == em["access"]);
            CHECK(m.instructions.empty() == !em["has_code"].get<bool>());
            CHECK(m.instructions.empty() == m.is_abstract_or_native);
            REQUIRE(m.instructions.size() == em["instructions"].size());
            for (std::size_t k = 0; k < m.instructions.size(); ++k) {
                const auto& ei = em["instructions"][k];
                CHECK(m.instructions[k].offset == ei["offset"]);
                CHECK(branch_targets(m.instructions[k]) == ei["targets"].get<std::vector<std::uint32_t>>());
            }
            REQUIRE(m.handlers.size() == em["handlers"].size());
            for (std::size_t h = 0; h < m.handlers.size(); ++h) {
                const auto range = em["handlers"][h].get<std::vector<std::uint32_t>>();
                CHECK(m.handlers[h].start == range[0]);
                CHECK(m.handlers[h].end == range[1]);
                CHECK(m.handlers[h].handler == range[2]);
            }
        }
    }
    CHECK(classes == testing::corpus_manifest()["classes"].size());
}

TEST_CASE("branch targets resolve to instructions") {
    for (const auto& cls : testing::load_all_fixtures()) {
        for (const auto& m : cls.methods) {
            for (const auto& insn : m.instructions) {
                if (const auto* b = std::get_if<Branch>(&insn.kind)) {
                    for (auto t : b->targets) CHECK(m.index_of(t).has_value());
                }
            }
        }
    }
}

TEST_CASE("operand decoding") {
    const auto wide = testing::load_fixture("fixtures/Wide.class");
    const auto& far = testing::find_method(wide, "farLocal");
    CHECK(kind_at<Store>(far, 1).slot == 300);
    CHECK(kind_at<Load>(far, 3).slot == 300);
    const auto& ref = testing::find_method(wide, "farRef");
    CHECK(kind_at<Load>(ref, 2).slot == 400);

    const auto arith = testing::load_fixture("fixtures/Arith.class");
    CHECK(kind_at<Load>(testing::find_method(arith, "scale"), 0).words == 2);
    CHECK(kind_at<Const>(testing::find_method(arith, "bigConstant"), 0).words == 2);
    CHECK(kind_at<Return>(testing::find_method(arith, "scale"), 4).words == 2);

    const auto calls = testing::load_fixture("fixtures/Calls.class");
    const auto& size = kind_at<Invoke>(testing::find_method(calls, "size"), 1);
    CHECK(size.kind == InvokeKind::Interface);
    CHECK(size.owner == "java.util.List");
    CHECK(size.name == "size");
    CHECK(size.descriptor.render() == "()I");

    const auto fields = testing::load_fixture("fixtures/Fields.class");
    const auto& put = kind_at<FieldPut>(testing::find_method(fields, "publish"), 1);
    CHECK(put.is_static);
    CHECK(put.id() == "fixtures.Fields.shared");
    const auto& get = kind_at<FieldGet>(testing::find_method(fields, "getValue"), 1);
    CHECK_FALSE(get.is_static);
    CHECK(get.type.element_class_name() == "java.lang.Object");

    const auto sw = testing::load_fixture("fixtures/Switches.class");
    const auto& lookup = kind_at<Branch>(testing::find_method(sw, "lookup"), 1);
    CHECK_FALSE(lookup.falls_through);
    CHECK(lookup.pop_words == 1);

    const auto legacy = testing::load_fixture("fixtures/Legacy.class");
    const auto& with_finally = testing::find_method(legacy, "withFinally");
    CHECK(kind_at<Branch>(with_finally, 0).push_words == 1);
    CHECK(kind_at<Branch>(with_finally, 4).is_ret);
}

TEST_CASE("invokedynamic is named after its bootstrap method") {
    const auto cls = testing::load_fixture("fixtures/Indy.class");
    const auto& inv = kind_at<Invoke>(testing::find_method(cls, "greet"), 1);
    CHECK(inv.kind == InvokeKind::Dynamic);
    CHECK(inv.owner == kIndyOwner);
    CHECK(inv.name == "bootstrap");
    CHECK(inv.descriptor.render() == "(Ljava/lang/String;)Ljava/lang/String;");
    CHECK_FALSE(inv.has_receiver());
}

TEST_CASE("nested class names keep the dollar sign") {
    CHECK(testing::load_fixture("fixtures/Outer$Inner.class").binary_name == "fixtures.Outer$Inner");
    CHECK(testing::load_fixture("fixtures/Outer$1.class").binary_name == "fixtures.Outer$1");
}

TEST_CASE("abstract, interface and native methods have no instructions") {
    const auto shape = testing::load_fixture("fixtures/AbstractShape.class");
    CHECK(testing::find_method(shape, "area").instructions.empty());
    CHECK(testing::find_method(shape, "area").is_abstract_or_native);
    CHECK_FALSE(testing::find_method(shape, "describe").instructions.empty());
    const auto native = testing::load_fixture("fixtures/NativeBridge.class");
    CHECK(testing::find_method(native, "nativeHash").is_abstract_or_native);
    for (const auto& m : testing::load_fixture("fixtures/Listener.class").methods) {
        CHECK(m.instructions.empty());
    }
}

TEST_CASE("unknown opcodes decode as Other") {
    testing::ClassWriter w("u/C");
    // breakpoint (0xCA), impdep1 (0xFE), then return
    w.add_method(0x0009, "f", "()V", {0xCA, 0xFE, 0xB1});
    const auto cls = parse_class(w.bytes());
    const auto& f = cls.methods[0];
    REQUIRE(f.instructions.size() == 3);
    CHECK(kind_at<Other>(f, 0).pop_words == 0);
    CHECK(kind_at<Other>(f, 1).push_words == 0);
}

TEST_CASE("structural errors carry file offsets") {
    testing::ClassWriter w("e/C");
    w.add_method(0x0009, "f", "()V", {0xA7, 0x00, 0x07});  // goto past the end
    const auto bytes = w.bytes();
    try {
        parse_class(bytes);
        FAIL("accepted bad branch");
    } catch (const MalformedClassFile& e) {
        CHECK(e.offset() > 10);
        CHECK(e.offset() < bytes.size());
    }

    testing::ClassWriter d("e/D");
    d.add_method(0x0009, "f", "(X)V", {0xB1});
    CHECK_THROWS_AS(parse_class(d.bytes()), MalformedClassFile);

    testing::ClassWriter falls("e/E");
    falls.add_method(0x0009, "f", "()V", {0x00});  // nop, then nothing
    CHECK_THROWS_AS(parse_class(falls.bytes()), MalformedClassFile);
}

TEST_CASE("truncation at every length is a structured error") {
    const auto bytes = testing::read_bytes(testing::fixture_dir() / "classes/fixtures/Switches.class");
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        CAPTURE(n);
        CHECK_THROWS_AS(parse_class(std::span(bytes.data(), n)), MalformedClassFile);
    }
    CHECK_NOTHROW(parse_class(bytes));
}

TEST_CASE("mutated class files never crash the parser") {
    std::vector<std::vector<std::uint8_t>> seeds;
    for (const char* entry : {"fixtures/Switches.class", "fixtures/Exceptions.class",
                              "fixtures/Indy.class", "fixtures/Wide.class",
                              "android/hardware/biometrics/BiometricPrompt.class"}) {
        seeds.push_back(testing::read_bytes(testing::fixture_dir() / "classes" / entry));
    }
    std::mt19937 rng(7);
    std::size_t parsed = 0, rejected = 0;
    for (int round = 0; round < 20000; ++round) {
        auto bytes = seeds[round % seeds.size()];
        const int edits = std::uniform_int_distribution<int>(1, 4)(rng);
        for (int e = 0; e < edits; ++e) {
            const auto at = std::uniform_int_distribution<std::size_t>(8, bytes.size() - 1)(rng);
            switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
                case 0: bytes[at] = static_cast<std::uint8_t>(rng()); break;
                case 1: bytes[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
                case 2: bytes.erase(bytes.begin() + static_cast<std::ptrdiff_t>(at)); break;
                default: bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(at), 0xFF); break;
            }
        }
        try {
            const auto cls = parse_class(bytes);
            ++parsed;
            for (const auto& m : cls.methods) CHECK(m.owner == cls.binary_name);
        } catch (const MalformedClassFile&) {
            ++rejected;
        } catch (const UnsupportedVersion&) {
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 20000);
    CHECK(rejected > 0);
}

}  // TEST_SUITE
