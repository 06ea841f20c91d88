#include "flow_oracle.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace biolabel::testing {

using namespace classfile;

namespace {

using Value = std::set<std::string>;  // "p<i>", "f:<owner.name>", "other"

struct PathState {
    std::map<std::size_t, Value> locals;
    std::vector<Value> stack;
    std::vector<std::size_t> jsr_returns;
    std::vector<bool> on_path;
};

class Walker {
public:
    Walker(const MethodModel& m, std::size_t max_paths) : m_(m), max_paths_(max_paths) {}

    OracleResult run() {
        if (m_.instructions.empty()) return {};
        PathState s;
        std::size_t slot = 0, position = 0;
        if (!m_.is_static()) s.locals[slot++] = {"p0"}, ++position;
        for (const auto& p : m_.descriptor.params) {
            s.locals[slot++] = {"p" + std::to_string(position++)};
            if (p.words() == 2) s.locals[slot++] = {"other"};
        }
        s.on_path.assign(m_.instructions.size(), false);
        walk(0, s);
        return result_;
    }

private:
    static Value pop(PathState& s) {
        if (s.stack.empty()) throw std::logic_error("oracle: stack underflow");
        Value v = s.stack.back();
        s.stack.pop_back();
        return v;
    }

    static Value pop_all(PathState& s, std::size_t words) {
        Value all;
        for (std::size_t i = 0; i < words; ++i) {
            Value v = pop(s);
            all.insert(v.begin(), v.end());
        }
        return all;
    }

    void record_return(const Value& v) {
        for (const auto& o : v) {
            if (o[0] == 'p') result_.facts.params_to_return.insert(std::stoul(o.substr(1)));
            if (o[0] == 'f') result_.facts.fields_to_return.insert(o.substr(2));
        }
    }

    void record_store(const Value& v, const std::string& field) {
        for (const auto& o : v) {
            if (o[0] == 'p') result_.facts.params_to_field.emplace(std::stoul(o.substr(1)), field);
        }
    }

    void finish_path() {
        if (++result_.paths > max_paths_) throw std::runtime_error("oracle: path limit exceeded");
    }

    void walk(std::size_t i, PathState s) {
        if (s.on_path[i]) {
            result_.cut = true;
            finish_path();
            return;
        }
        s.on_path[i] = true;
        const Instruction& insn = m_.instructions[i];

        for (const auto& h : m_.handlers) {
            if (insn.offset >= h.start && insn.offset < h.end) {
                PathState ex = s;
                ex.stack = {Value{"other"}};
                walk(*m_.index_of(h.handler), std::move(ex));
            }
        }

        std::vector<std::size_t> next;
        bool ends = false;
        if (const auto* k = std::get_if<Load>(&insn.kind)) {
            for (std::size_t w = 0; w < k->words; ++w) s.stack.push_back(s.locals[k->slot + w]);
        } else if (const auto* k = std::get_if<Store>(&insn.kind)) {
            for (std::size_t w = k->words; w-- > 0;) s.locals[k->slot + w] = pop(s);
        } else if (const auto* k = std::get_if<Invoke>(&insn.kind)) {
            pop_all(s, k->descriptor.param_words() + (k->has_receiver() ? 1 : 0));
            if (k->descriptor.return_type) {
                for (unsigned w = 0; w < k->descriptor.return_type->words(); ++w) s.stack.push_back({"other"});
            }
        } else if (const auto* k = std::get_if<FieldGet>(&insn.kind)) {
            if (!k->is_static) pop(s);
            for (unsigned w = 0; w < k->type.words(); ++w) s.stack.push_back({"f:" + k->id(), "other"});
        } else if (const auto* k = std::get_if<FieldPut>(&insn.kind)) {
            record_store(pop_all(s, k->type.words()), k->id());
            if (!k->is_static) pop(s);
        } else if (const auto* k = std::get_if<Return>(&insn.kind)) {
            if (k->has_value) record_return(pop_all(s, k->words));
            ends = true;
        } else if (const auto* k = std::get_if<Branch>(&insn.kind)) {
            pop_all(s, k->pop_words);
            if (k->is_ret) {
                if (s.jsr_returns.empty()) throw std::logic_error("oracle: ret without jsr");
                next.push_back(s.jsr_returns.back());
                s.jsr_returns.pop_back();
            } else {
                if (k->push_words == 1) {  // jsr
                    s.stack.push_back({"other"});
                    s.jsr_returns.push_back(i + 1);
                }
                for (auto t : k->targets) next.push_back(*m_.index_of(t));
                if (k->falls_through) next.push_back(i + 1);
            }
        } else if (const auto* k = std::get_if<Const>(&insn.kind)) {
            for (std::size_t w = 0; w < k->words; ++w) s.stack.push_back({"other"});
        } else if (const auto* k = std::get_if<StackOp>(&insn.kind)) {
            stack_op(s, k->effect);
        } else if (const auto* k = std::get_if<Other>(&insn.kind)) {
            Value v = pop_all(s, k->pop_words);
            v.insert("other");
            for (std::size_t w = 0; w < k->push_words; ++w) s.stack.push_back(v);
            ends = k->terminates;
        }
        if (!std::holds_alternative<Branch>(insn.kind) && !ends) next.push_back(i + 1);

        if (next.empty()) {
            finish_path();
            return;
        }
        std::set<std::size_t> distinct(next.begin(), next.end());
        for (auto j : distinct) walk(j, s);
    }

    static void stack_op(PathState& s, StackEffect e) {
        auto top = [&](std::size_t n) {
            std::vector<Value> v(n);
            for (std::size_t k = 0; k < n; ++k) v[n - 1 - k] = pop(s);
            return v;  // v[0] deepest
        };
        auto push = [&](const std::vector<Value>& v, std::initializer_list<int> order) {
            for (int k : order) s.stack.push_back(v[k]);
        };
        switch (e) {
            case StackEffect::Pop: pop(s); break;
            case StackEffect::Pop2: pop(s), pop(s); break;
            case StackEffect::Dup: push(top(1), {0, 0}); break;
            case StackEffect::DupX1: push(top(2), {1, 0, 1}); break;
            case StackEffect::DupX2: push(top(3), {2, 0, 1, 2}); break;
            case StackEffect::Dup2: push(top(2), {0, 1, 0, 1}); break;
            case StackEffect::Dup2X1: push(top(3), {1, 2, 0, 1, 2}); break;
            case StackEffect::Dup2X2: push(top(4), {2, 3, 0, 1, 2, 3}); break;
            case StackEffect::Swap: push(top(2), {1, 0}); break;
        }
    }

    const MethodModel& m_;
    std::size_t max_paths_;
    OracleResult result_;
};

}  // namespace

OracleResult enumerate_paths(const MethodModel& method, std::size_t max_paths) {
    return Walker(method, max_paths).run();
}

}  // namespace biolabel::testing
