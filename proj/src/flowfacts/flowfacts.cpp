#include "biolabel/flowfacts/flowfacts.hpp"

#include "biolabel/error.hpp"

#include <algorithm>
#include <deque>
#include <iterator>
#include <optional>
#include <unordered_map>

namespace biolabel::flowfacts {

using classfile::Instruction;
using classfile::MethodModel;
using Kind = FlowAnalysisError::Kind;

namespace {

// Origins are interned per method: 0 is Other, 1..P are parameters, fields
// follow in first-seen order.
using OriginSet = std::vector<std::uint32_t>;  // sorted, unique

constexpr std::uint32_t kOther = 0;

void unite(OriginSet& into, const OriginSet& from) {
    if (from.empty()) return;
    if (into.empty()) {
        into = from;
        return;
    }
    OriginSet out;
    out.reserve(into.size() + from.size());
    std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(out));
    into.swap(out);
}

struct Frame {
    std::vector<OriginSet> locals;
    std::vector<OriginSet> stack;
};

class Analyzer {
public:
    explicit Analyzer(const MethodModel& m) : m_(m), states_(m.instructions.size()) {
        const std::uint32_t params = static_cast<std::uint32_t>(m.parameter_count());
        next_id_ = 1 + params;
    }

    FlowFacts run() {
        if (m_.instructions.empty()) return {};
        collect_jsr_returns();
        states_[0] = entry_frame();
        std::deque<std::size_t> work{0};
        std::vector<bool> queued(m_.instructions.size(), false);
        queued[0] = true;
        while (!work.empty()) {
            const std::size_t i = work.front();
            work.pop_front();
            queued[i] = false;
            const Frame in = *states_[i];
            auto push_succ = [&](std::size_t j, const Frame& f) {
                if (merge_into(j, f) && !queued[j]) {
                    queued[j] = true;
                    work.push_back(j);
                }
            };
            for (std::size_t h : handlers_covering(i)) {
                Frame ex;
                ex.locals = in.locals;
                ex.stack = {OriginSet{kOther}};
                push_succ(h, ex);
            }
            Frame out = in;
            step(i, out);
            for (std::size_t j : successors(i)) push_succ(j, out);
        }
        return collect();
    }

private:
    std::uint32_t param_id(std::uint32_t position) const { return 1 + position; }

    std::uint32_t field_id(const std::string& id) {
        auto [it, inserted] = fields_.try_emplace(id, next_id_);
        if (inserted) {
            ++next_id_;
            field_names_.push_back(id);
        }
        return it->second;
    }

    Frame entry_frame() const {
        Frame f;
        std::uint32_t position = 0;
        if (!m_.is_static()) {
            f.locals.push_back({param_id(position++)});
        }
        for (const auto& p : m_.descriptor.params) {
            f.locals.push_back({param_id(position)});
            if (p.words() == 2) f.locals.push_back({kOther});
            ++position;
        }
        return f;
    }

    std::uint32_t offset_of(std::size_t i) const { return m_.instructions[i].offset; }

    OriginSet pop(Frame& f, std::size_t i) {
        if (f.stack.empty()) throw FlowAnalysisError(Kind::StackUnderflow, offset_of(i), "stack underflow");
        OriginSet top = std::move(f.stack.back());
        f.stack.pop_back();
        return top;
    }

    OriginSet pop_union(Frame& f, std::size_t i, std::size_t words) {
        OriginSet all;
        for (std::size_t w = 0; w < words; ++w) unite(all, pop(f, i));
        return all;
    }

    void push_n(Frame& f, std::size_t words, const OriginSet& value) {
        for (std::size_t w = 0; w < words; ++w) f.stack.push_back(value);
    }

    static OriginSet& local(Frame& f, std::size_t slot) {
        if (slot >= f.locals.size()) f.locals.resize(slot + 1);
        return f.locals[slot];
    }

    void step(std::size_t i, Frame& f) {
        const Instruction& insn = m_.instructions[i];
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, classfile::Load>) {
                    for (std::size_t w = 0; w < k.words; ++w) f.stack.push_back(local(f, k.slot + w));
                } else if constexpr (std::is_same_v<T, classfile::Store>) {
                    for (std::size_t w = k.words; w-- > 0;) local(f, k.slot + w) = pop(f, i);
                } else if constexpr (std::is_same_v<T, classfile::Invoke>) {
                    pop_union(f, i, k.descriptor.param_words() + (k.has_receiver() ? 1 : 0));
                    if (k.descriptor.return_type) push_n(f, k.descriptor.return_type->words(), {kOther});
                } else if constexpr (std::is_same_v<T, classfile::FieldGet>) {
                    if (!k.is_static) pop(f, i);
                    OriginSet v{kOther, field_id(k.id())};
                    push_n(f, k.type.words(), v);
                } else if constexpr (std::is_same_v<T, classfile::FieldPut>) {
                    pop_union(f, i, k.type.words());
                    if (!k.is_static) pop(f, i);
                } else if constexpr (std::is_same_v<T, classfile::Return>) {
                    if (k.has_value) pop_union(f, i, k.words);
                } else if constexpr (std::is_same_v<T, classfile::Branch>) {
                    pop_union(f, i, k.pop_words);
                    push_n(f, k.push_words, {kOther});
                } else if constexpr (std::is_same_v<T, classfile::Const>) {
                    push_n(f, k.words, {kOther});
                } else if constexpr (std::is_same_v<T, classfile::StackOp>) {
                    stack_op(f, i, k.effect);
                } else if constexpr (std::is_same_v<T, classfile::Other>) {
                    OriginSet v = pop_union(f, i, k.pop_words);
                    unite(v, {kOther});
                    push_n(f, k.push_words, v);
                }
            },
            insn.kind);
    }

    void stack_op(Frame& f, std::size_t i, classfile::StackEffect effect) {
        using E = classfile::StackEffect;
        auto take = [&](std::size_t n) {
            std::vector<OriginSet> top(n);
            for (std::size_t w = n; w-- > 0;) top[w] = pop(f, i);
            return top;  // bottom-to-top
        };
        auto put = [&](const std::vector<OriginSet>& words, std::initializer_list<std::size_t> order) {
            for (std::size_t idx : order) f.stack.push_back(words[idx]);
        };
        switch (effect) {
            case E::Pop: take(1); break;
            case E::Pop2: take(2); break;
            case E::Dup: put(take(1), {0, 0}); break;
            case E::DupX1: put(take(2), {1, 0, 1}); break;
            case E::DupX2: put(take(3), {2, 0, 1, 2}); break;
            case E::Dup2: put(take(2), {0, 1, 0, 1}); break;
            case E::Dup2X1: put(take(3), {1, 2, 0, 1, 2}); break;
            case E::Dup2X2: put(take(4), {2, 3, 0, 1, 2, 3}); break;
            case E::Swap: put(take(2), {1, 0}); break;
        }
    }

    void collect_jsr_returns() {
        for (std::size_t i = 0; i < m_.instructions.size(); ++i) {
            const auto* b = std::get_if<classfile::Branch>(&m_.instructions[i].kind);
            if (b && b->push_words == 1 && !b->falls_through && !b->is_ret &&
                i + 1 < m_.instructions.size()) {
                jsr_returns_.push_back(i + 1);
            }
        }
    }

    std::vector<std::size_t> successors(std::size_t i) const {
        const Instruction& insn = m_.instructions[i];
        std::vector<std::size_t> out;
        if (const auto* b = std::get_if<classfile::Branch>(&insn.kind)) {
            if (b->is_ret) return jsr_returns_;
            for (std::uint32_t t : b->targets) out.push_back(*m_.index_of(t));
        }
        if (insn.falls_through() && i + 1 < m_.instructions.size()) out.push_back(i + 1);
        return out;
    }

    std::vector<std::size_t> handlers_covering(std::size_t i) const {
        std::vector<std::size_t> out;
        const std::uint32_t off = offset_of(i);
        for (const auto& h : m_.handlers) {
            if (off >= h.start && off < h.end) out.push_back(*m_.index_of(h.handler));
        }
        return out;
    }

    // Returns true when the stored state grew.
    bool merge_into(std::size_t j, const Frame& f) {
        auto& slot = states_[j];
        if (!slot) {
            slot = f;
            return true;
        }
        if (slot->stack.size() != f.stack.size()) {
            throw FlowAnalysisError(Kind::InconsistentStackDepth, offset_of(j),
                                    "stack depth " + std::to_string(slot->stack.size()) + " vs " +
                                        std::to_string(f.stack.size()) + " at join");
        }
        bool grew = false;
        auto merge_set = [&](OriginSet& into, const OriginSet& from) {
            const std::size_t before = into.size();
            unite(into, from);
            grew |= into.size() != before;
        };
        if (slot->locals.size() < f.locals.size()) slot->locals.resize(f.locals.size());
        for (std::size_t s = 0; s < f.locals.size(); ++s) merge_set(slot->locals[s], f.locals[s]);
        for (std::size_t s = 0; s < f.stack.size(); ++s) merge_set(slot->stack[s], f.stack[s]);
        return grew;
    }

    // Reads the facts off the fixpoint in-states.
    FlowFacts collect() {
        FlowFacts facts;
        const std::uint32_t params = static_cast<std::uint32_t>(m_.parameter_count());
        auto is_param = [&](std::uint32_t id) { return id >= 1 && id <= params; };
        auto field_name = [&](std::uint32_t id) -> const std::string& {
            return field_names_[id - 1 - params];
        };
        for (std::size_t i = 0; i < m_.instructions.size(); ++i) {
            if (!states_[i]) continue;
            const auto& stack = states_[i]->stack;
            const auto top_union = [&](std::size_t skip, std::size_t words) {
                if (stack.size() < skip + words) {
                    throw FlowAnalysisError(Kind::StackUnderflow, offset_of(i), "stack underflow");
                }
                OriginSet v;
                for (std::size_t w = 0; w < words; ++w) unite(v, stack[stack.size() - 1 - skip - w]);
                return v;
            };
            const auto& kind = m_.instructions[i].kind;
            if (const auto* r = std::get_if<classfile::Return>(&kind); r && r->has_value) {
                for (std::uint32_t id : top_union(0, r->words)) {
                    if (is_param(id)) {
                        facts.params_to_return.insert(id - 1);
                    } else if (id != kOther) {
                        facts.fields_to_return.insert(field_name(id));
                    }
                }
            } else if (const auto* p = std::get_if<classfile::FieldPut>(&kind)) {
                const std::string fid = p->id();
                for (std::uint32_t id : top_union(0, p->type.words())) {
                    if (is_param(id)) facts.params_to_field.emplace(id - 1, fid);
                }
            }
        }
        return facts;
    }

    const MethodModel& m_;
    std::vector<std::optional<Frame>> states_;
    std::unordered_map<std::string, std::uint32_t> fields_;
    std::vector<std::string> field_names_;
    std::uint32_t next_id_ = 1;
    std::vector<std::size_t> jsr_returns_;
};

}  // namespace

bool is_subset(const FlowFacts& sub, const FlowFacts& super) {
    return std::includes(super.params_to_return.begin(), super.params_to_return.end(),
                         sub.params_to_return.begin(), sub.params_to_return.end()) &&
           std::includes(super.params_to_field.begin(), super.params_to_field.end(),
                         sub.params_to_field.begin(), sub.params_to_field.end()) &&
           std::includes(super.fields_to_return.begin(), super.fields_to_return.end(),
                         sub.fields_to_return.begin(), sub.fields_to_return.end());
}

FlowFacts analyze_flows_checked(const MethodModel& method) {
    if (method.is_abstract_or_native || method.instructions.empty()) return {};
    return Analyzer(method).run();
}

FlowFacts analyze_flows(const MethodModel& method, std::vector<std::string>* warnings) {
    try {
        return analyze_flows_checked(method);
    } catch (const FlowAnalysisError& e) {
        if (warnings) {
            warnings->push_back(method.owner + "." + method.name + method.raw_descriptor + ": " + e.what());
        }
        return {};
    }
}

}  // namespace biolabel::flowfacts
