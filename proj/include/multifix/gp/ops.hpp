#pragma once

#include <cmath>
#include <cstring>
#include <cstdint>
#include <string>
#include <vector>

#include "multifix/common.hpp"

namespace multifix::gp {

// Mixed numeric/Boolean operator inventory. Boolean results are the floats
// 0/1; numeric operands feeding a Boolean operator are coerced with
// truthy(v) = v > 0.5 (learned expressions make thresholds explicit through
// the comparison operators).
enum class Op : int8_t {
    add,
    sub,
    mul,
    div,   // protected: y == 0 -> 1
    pow2,
    pow3,
    gt,
    lt,
    eq,    // |a-b| <= 1e-6
    band,
    bor,
    bnot,
    ite,
    bxor,  // excluded from the default set
};

struct OpInfo {
    const char* name;
    int arity;
    bool boolean_out;
};

inline const OpInfo& op_info(Op op) {
    static const OpInfo kTable[] = {
        {"+", 2, false},  {"-", 2, false},   {"*", 2, false},  {"/", 2, false},  {"^2", 1, false},
        {"^3", 1, false}, {">", 2, true},    {"<", 2, true},   {"==", 2, true},  {"AND", 2, true},
        {"OR", 2, true},  {"NOT", 1, true},  {"if", 3, false}, {"XOR", 2, true},
    };
    return kTable[static_cast<size_t>(op)];
}

constexpr float kValueCap = 1e15f;   // protected ops never exceed this magnitude
constexpr float kEqEpsilon = 1e-6f;

inline float clamp_value(double v) {
    if (v > kValueCap) return kValueCap;
    if (v < -kValueCap) return -kValueCap;
    return static_cast<float>(v);
}

inline bool truthy(float v) { return v > 0.5f; }

inline float apply_op(Op op, float a, float b, float c) {
    switch (op) {
        case Op::add: return clamp_value(static_cast<double>(a) + b);
        case Op::sub: return clamp_value(static_cast<double>(a) - b);
        case Op::mul: return clamp_value(static_cast<double>(a) * b);
        case Op::div: return b == 0.0f ? 1.0f : clamp_value(static_cast<double>(a) / b);
        case Op::pow2: return clamp_value(static_cast<double>(a) * a);
        case Op::pow3: return clamp_value(static_cast<double>(a) * a * a);
        case Op::gt: return a > b ? 1.0f : 0.0f;
        case Op::lt: return a < b ? 1.0f : 0.0f;
        case Op::eq: return std::fabs(a - b) <= kEqEpsilon ? 1.0f : 0.0f;
        case Op::band: return truthy(a) && truthy(b) ? 1.0f : 0.0f;
        case Op::bor: return truthy(a) || truthy(b) ? 1.0f : 0.0f;
        case Op::bnot: return truthy(a) ? 0.0f : 1.0f;
        case Op::ite: return truthy(a) ? b : c;
        case Op::bxor: return truthy(a) != truthy(b) ? 1.0f : 0.0f;
    }
    return 0.0f;
}

// Grammar symbols: an operator, an input variable, or an ephemeral constant.
struct Symbol {
    enum Kind : int8_t { op, var, cnst } kind = cnst;
    int16_t id = 0;  // Op index or variable index
    float value = 0.0f;

    static Symbol make_op(Op o) { return {op, static_cast<int16_t>(o), 0.0f}; }
    static Symbol make_var(int v) { return {var, static_cast<int16_t>(v), 0.0f}; }
    static Symbol make_const(float v) { return {cnst, 0, v}; }

    bool operator==(const Symbol& o) const {
        if (kind != o.kind) return false;
        if (kind == cnst) return value == o.value;
        return id == o.id;
    }

    // dense categorical key for linkage statistics
    uint64_t key() const {
        uint32_t bits = 0;
        if (kind == cnst) std::memcpy(&bits, &value, 4);
        return (static_cast<uint64_t>(kind) << 48) | (static_cast<uint64_t>(static_cast<uint16_t>(id)) << 32) | bits;
    }
};

// Operator inventory plus terminal pool for one GP run.
struct OperatorSet {
    std::vector<Op> ops;
    int n_vars = 0;
    std::vector<std::string> var_names;
    std::vector<float> const_pool;
    bool continuous_consts = true;  // also sample U(-3, 3)

    // default inventory; XOR stays out unless asked for
    static OperatorSet standard(std::vector<std::string> vars, bool include_xor = false) {
        OperatorSet s;
        s.ops = {Op::add, Op::sub, Op::mul, Op::div, Op::pow2, Op::pow3, Op::gt,
                 Op::lt,  Op::eq,  Op::band, Op::bor, Op::bnot, Op::ite};
        if (include_xor) s.ops.push_back(Op::bxor);
        s.n_vars = static_cast<int>(vars.size());
        s.var_names = std::move(vars);
        s.const_pool = {-2.0f, -1.0f, -0.5f, 0.0f, 0.5f, 1.0f, 1.1f, 1.4f, 1.5f, 2.0f, 2.5f, 3.0f};
        return s;
    }

    static OperatorSet boolean_only(std::vector<std::string> vars, bool include_xor = false) {
        OperatorSet s;
        s.ops = {Op::band, Op::bor, Op::bnot, Op::ite};
        if (include_xor) s.ops.push_back(Op::bxor);
        s.n_vars = static_cast<int>(vars.size());
        s.var_names = std::move(vars);
        s.const_pool = {0.0f, 1.0f};
        s.continuous_consts = false;
        return s;
    }

    Symbol sample_terminal(Rng& rng) const {
        if (n_vars > 0 && rng.uniform() < 0.75) return Symbol::make_var(rng.uniform_int(n_vars));
        return sample_const(rng);
    }

    Symbol sample_const(Rng& rng) const {
        if (continuous_consts && rng.uniform() < 0.5)
            return Symbol::make_const(static_cast<float>(rng.uniform(-3.0, 3.0)));
        return Symbol::make_const(const_pool[static_cast<size_t>(rng.uniform_int(static_cast<int>(const_pool.size())))]);
    }

    Symbol sample_symbol(Rng& rng, bool leaf) const {
        if (leaf || rng.uniform() >= 0.7) return sample_terminal(rng);
        return Symbol::make_op(ops[static_cast<size_t>(rng.uniform_int(static_cast<int>(ops.size())))]);
    }
};

}  // namespace multifix::gp
