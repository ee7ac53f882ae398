#pragma once

#include <cctype>
#include <functional>
#include <map>

#include "multifix/gp/ops.hpp"

namespace multifix::gp {

// Column-major feature matrix for vectorized tree evaluation.
struct FeatureMatrix {
    int rows = 0, cols = 0;
    std::vector<float> data;  // cols blocks of rows values

    FeatureMatrix() = default;
    FeatureMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0f) {}

    float* col(int j) { return data.data() + static_cast<size_t>(j) * rows; }
    const float* col(int j) const { return data.data() + static_cast<size_t>(j) * rows; }
    float& at(int i, int j) { return data[static_cast<size_t>(j) * rows + i]; }
    float at(int i, int j) const { return data[static_cast<size_t>(j) * rows + i]; }
};

// Fixed-template expression tree: a complete ternary heap of the configured
// depth. Every slot holds any symbol; terminals cut evaluation short, so the
// active expression is usually much smaller than the template.
struct Tree {
    int depth = 2;
    std::vector<Symbol> nodes;

    static int template_size(int depth) {
        int n = 1, level = 1;
        for (int d = 0; d < depth; ++d) {
            level *= 3;
            n += level;
        }
        return n;
    }

    explicit Tree(int depth_ = 2) : depth(depth_), nodes(static_cast<size_t>(template_size(depth_))) {}

    static int child(int i, int k) { return 3 * i + 1 + k; }
    bool is_leaf_slot(int i) const { return child(i, 0) >= static_cast<int>(nodes.size()); }

    bool operator==(const Tree& o) const { return depth == o.depth && nodes == o.nodes; }

    void random_init(const OperatorSet& set, Rng& rng) {
        for (size_t i = 0; i < nodes.size(); ++i)
            nodes[i] = set.sample_symbol(rng, is_leaf_slot(static_cast<int>(i)));
    }

    // indices reachable from the root given operator arities
    void active_nodes(std::vector<int>& out) const {
        out.clear();
        collect_active(0, out);
    }

    int active_count() const {
        std::vector<int> tmp;
        active_nodes(tmp);
        return static_cast<int>(tmp.size());
    }

    // scalar evaluation of one row
    float eval_row(const float* features) const { return eval_row_at(0, features); }

    // vectorized evaluation over a feature matrix
    void eval(const FeatureMatrix& x, std::vector<float>& out) const {
        out.resize(static_cast<size_t>(x.rows));
        std::vector<std::vector<float>> scratch;
        eval_vec(0, x, out.data(), scratch, 0);
    }

  private:
    void collect_active(int i, std::vector<int>& out) const {
        out.push_back(i);
        const Symbol& s = nodes[static_cast<size_t>(i)];
        if (s.kind != Symbol::op) return;
        int ar = op_info(static_cast<Op>(s.id)).arity;
        for (int k = 0; k < ar; ++k) collect_active(child(i, k), out);
    }

    float eval_row_at(int i, const float* features) const {
        const Symbol& s = nodes[static_cast<size_t>(i)];
        if (s.kind == Symbol::var) return features[s.id];
        if (s.kind == Symbol::cnst) return s.value;
        Op op = static_cast<Op>(s.id);
        int ar = op_info(op).arity;
        float a = eval_row_at(child(i, 0), features);
        float b = ar >= 2 ? eval_row_at(child(i, 1), features) : 0.0f;
        float c = ar >= 3 ? eval_row_at(child(i, 2), features) : 0.0f;
        return apply_op(op, a, b, c);
    }

    void eval_vec(int i, const FeatureMatrix& x, float* out, std::vector<std::vector<float>>& scratch,
                  size_t scratch_base) const {
        const Symbol& s = nodes[static_cast<size_t>(i)];
        int n = x.rows;
        if (s.kind == Symbol::var) {
            if (s.id >= x.cols) throw ConfigError("tree: variable x" + std::to_string(s.id) + " not in input matrix");
            std::copy(x.col(s.id), x.col(s.id) + n, out);
            return;
        }
        if (s.kind == Symbol::cnst) {
            std::fill(out, out + n, s.value);
            return;
        }
        Op op = static_cast<Op>(s.id);
        int ar = op_info(op).arity;
        while (scratch.size() < scratch_base + static_cast<size_t>(ar))
            scratch.emplace_back(static_cast<size_t>(n));
        for (auto k = scratch_base; k < scratch_base + static_cast<size_t>(ar); ++k)
            if (scratch[k].size() < static_cast<size_t>(n)) scratch[k].resize(static_cast<size_t>(n));
        // evaluate children into scratch rows, then combine elementwise
        for (int k = 0; k < ar; ++k)
            eval_vec(child(i, k), x, scratch[scratch_base + static_cast<size_t>(k)].data(), scratch,
                     scratch_base + 3);
        const float* a = scratch[scratch_base].data();
        const float* b = ar >= 2 ? scratch[scratch_base + 1].data() : nullptr;
        const float* c = ar >= 3 ? scratch[scratch_base + 2].data() : nullptr;
        switch (op) {
            case Op::add:
                for (int r = 0; r < n; ++r) out[r] = clamp_value(static_cast<double>(a[r]) + b[r]);
                break;
            case Op::sub:
                for (int r = 0; r < n; ++r) out[r] = clamp_value(static_cast<double>(a[r]) - b[r]);
                break;
            case Op::mul:
                for (int r = 0; r < n; ++r) out[r] = clamp_value(static_cast<double>(a[r]) * b[r]);
                break;
            case Op::gt:
                for (int r = 0; r < n; ++r) out[r] = a[r] > b[r] ? 1.0f : 0.0f;
                break;
            case Op::lt:
                for (int r = 0; r < n; ++r) out[r] = a[r] < b[r] ? 1.0f : 0.0f;
                break;
            case Op::band:
                for (int r = 0; r < n; ++r) out[r] = truthy(a[r]) && truthy(b[r]) ? 1.0f : 0.0f;
                break;
            case Op::bor:
                for (int r = 0; r < n; ++r) out[r] = truthy(a[r]) || truthy(b[r]) ? 1.0f : 0.0f;
                break;
            default:
                for (int r = 0; r < n; ++r)
                    out[r] = apply_op(op, a[r], b ? b[r] : 0.0f, c ? c[r] : 0.0f);
        }
    }
};

// ---------------------------------------------------------------------------
// detached expression form (active subtree), used for simplification,
// printing, parsing and report serialization
// ---------------------------------------------------------------------------

struct Expr {
    Symbol sym;
    std::vector<Expr> kids;

    bool operator==(const Expr& o) const { return sym == o.sym && kids == o.kids; }

    float eval(const float* features) const {
        if (sym.kind == Symbol::var) return features[sym.id];
        if (sym.kind == Symbol::cnst) return sym.value;
        Op op = static_cast<Op>(sym.id);
        int ar = op_info(op).arity;
        float a = kids[0].eval(features);
        float b = ar >= 2 ? kids[1].eval(features) : 0.0f;
        float c = ar >= 3 ? kids[2].eval(features) : 0.0f;
        return apply_op(op, a, b, c);
    }

    float eval(const std::vector<float>& features) const { return eval(features.data()); }

    int node_count() const {
        int n = 1;
        for (const auto& k : kids) n += k.node_count();
        return n;
    }

    bool is_const(float v) const { return sym.kind == Symbol::cnst && sym.value == v; }

    // does this node always produce 0/1?
    bool boolean_valued() const {
        if (sym.kind == Symbol::cnst) return sym.value == 0.0f || sym.value == 1.0f;
        if (sym.kind == Symbol::var) return false;
        Op op = static_cast<Op>(sym.id);
        if (op_info(op).boolean_out) return true;
        if (op == Op::ite) return kids[1].boolean_valued() && kids[2].boolean_valued();
        return false;
    }
};

inline Expr extract_expr(const Tree& t, int node = 0) {
    Expr e;
    e.sym = t.nodes[static_cast<size_t>(node)];
    if (e.sym.kind == Symbol::op) {
        int ar = op_info(static_cast<Op>(e.sym.id)).arity;
        for (int k = 0; k < ar; ++k) e.kids.push_back(extract_expr(t, Tree::child(node, k)));
    }
    return e;
}

// ---------------------------------------------------------------------------
// simplification: constant folding, identity elements, double negation.
// Only rewrites that are exact under the protected semantics are applied.
// ---------------------------------------------------------------------------

inline bool all_const(const Expr& e) {
    for (const auto& k : e.kids)
        if (k.sym.kind != Symbol::cnst) return false;
    return true;
}

inline Expr simplify(const Expr& in) {
    Expr e;
    e.sym = in.sym;
    for (const auto& k : in.kids) e.kids.push_back(simplify(k));
    if (e.sym.kind != Symbol::op) return e;
    Op op = static_cast<Op>(e.sym.id);

    if (all_const(e)) {
        float v = e.eval(nullptr);
        return Expr{Symbol::make_const(v), {}};
    }
    switch (op) {
        case Op::add:
            if (e.kids[0].is_const(0.0f)) return e.kids[1];
            if (e.kids[1].is_const(0.0f)) return e.kids[0];
            break;
        case Op::sub:
            if (e.kids[1].is_const(0.0f)) return e.kids[0];
            if (e.kids[0] == e.kids[1]) return Expr{Symbol::make_const(0.0f), {}};
            break;
        case Op::mul:
            if (e.kids[0].is_const(1.0f)) return e.kids[1];
            if (e.kids[1].is_const(1.0f)) return e.kids[0];
            if (e.kids[0].is_const(0.0f) || e.kids[1].is_const(0.0f)) return Expr{Symbol::make_const(0.0f), {}};
            break;
        case Op::div:
            if (e.kids[1].is_const(1.0f)) return e.kids[0];
            if (e.kids[0] == e.kids[1]) return Expr{Symbol::make_const(1.0f), {}};  // protected: 0/0 is 1 too
            break;
        case Op::bnot:
            if (e.kids[0].sym.kind == Symbol::op && static_cast<Op>(e.kids[0].sym.id) == Op::bnot &&
                e.kids[0].kids[0].boolean_valued())
                return e.kids[0].kids[0];
            break;
        case Op::band:
            if (e.kids[0].is_const(1.0f) && e.kids[1].boolean_valued()) return e.kids[1];
            if (e.kids[1].is_const(1.0f) && e.kids[0].boolean_valued()) return e.kids[0];
            if (e.kids[0].is_const(0.0f) || e.kids[1].is_const(0.0f)) return Expr{Symbol::make_const(0.0f), {}};
            break;
        case Op::bor:
            if (e.kids[0].is_const(0.0f) && e.kids[1].boolean_valued()) return e.kids[1];
            if (e.kids[1].is_const(0.0f) && e.kids[0].boolean_valued()) return e.kids[0];
            if (e.kids[0].is_const(1.0f) || e.kids[1].is_const(1.0f)) return Expr{Symbol::make_const(1.0f), {}};
            break;
        case Op::ite:
            if (e.kids[0].sym.kind == Symbol::cnst) return truthy(e.kids[0].sym.value) ? e.kids[1] : e.kids[2];
            if (e.kids[1] == e.kids[2]) return e.kids[1];
            break;
        default:
            break;
    }
    return e;
}

// ---------------------------------------------------------------------------
// canonical printing
// ---------------------------------------------------------------------------

inline std::string var_name(int id, const std::vector<std::string>& names) {
    if (id >= 0 && id < static_cast<int>(names.size())) return names[static_cast<size_t>(id)];
    return "x" + std::to_string(id);
}

inline std::string to_infix(const Expr& e, const std::vector<std::string>& names) {
    if (e.sym.kind == Symbol::var) return var_name(e.sym.id, names);
    if (e.sym.kind == Symbol::cnst) return format_float(e.sym.value);
    Op op = static_cast<Op>(e.sym.id);
    switch (op) {
        case Op::pow2: return "(" + to_infix(e.kids[0], names) + " ^ 2)";
        case Op::pow3: return "(" + to_infix(e.kids[0], names) + " ^ 3)";
        case Op::bnot: return "NOT(" + to_infix(e.kids[0], names) + ")";
        case Op::ite:
            return "if(" + to_infix(e.kids[0], names) + ", " + to_infix(e.kids[1], names) + ", " +
                   to_infix(e.kids[2], names) + ")";
        default:
            return "(" + to_infix(e.kids[0], names) + " " + op_info(op).name + " " + to_infix(e.kids[1], names) + ")";
    }
}

inline std::string to_prefix(const Expr& e, const std::vector<std::string>& names) {
    if (e.sym.kind == Symbol::var) return var_name(e.sym.id, names);
    if (e.sym.kind == Symbol::cnst) return format_float(e.sym.value);
    Op op = static_cast<Op>(e.sym.id);
    std::string out = "(";
    out += op == Op::pow2 ? "^2" : op == Op::pow3 ? "^3" : op_info(op).name;
    for (const auto& k : e.kids) out += " " + to_prefix(k, names);
    return out + ")";
}

// ---------------------------------------------------------------------------
// parsing (round-trips the canonical forms)
// ---------------------------------------------------------------------------

namespace detail {

struct Lexer {
    std::string s;
    size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }

    bool eof() {
        skip_ws();
        return pos >= s.size();
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    bool accept(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) throw DataError("expression parse: expected '" + std::string(1, c) + "' at position " +
                                        std::to_string(pos) + " in '" + s + "'");
    }

    std::string token() {
        skip_ws();
        size_t start = pos;
        if (pos < s.size() && (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        } else if (pos < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '-' || s[pos] == '.')) {
            if (s[pos] == '-') ++pos;
            while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                                      s[pos] == 'e' || s[pos] == 'E' ||
                                      ((s[pos] == '-' || s[pos] == '+') && (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
                ++pos;
        } else {
            // operator token
            while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '(' &&
                   s[pos] != ')' && s[pos] != ',')
                ++pos;
        }
        return s.substr(start, pos - start);
    }
};

inline int lookup_var(const std::string& tok, const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == tok) return static_cast<int>(i);
    if (tok.size() > 1 && tok[0] == 'x') {
        char* end = nullptr;
        long v = strtol(tok.c_str() + 1, &end, 10);
        if (end && *end == '\0') return static_cast<int>(v);
    }
    return -1;
}

inline Expr parse_terminal(const std::string& tok, const std::vector<std::string>& names) {
    int v = lookup_var(tok, names);
    if (v >= 0) return Expr{Symbol::make_var(v), {}};
    char* end = nullptr;
    float f = strtof(tok.c_str(), &end);
    if (end != tok.c_str() && *end == '\0') return Expr{Symbol::make_const(f), {}};
    throw DataError("expression parse: unknown terminal '" + tok + "'");
}

inline Op binop_from(const std::string& t) {
    if (t == "+") return Op::add;
    if (t == "-") return Op::sub;
    if (t == "*") return Op::mul;
    if (t == "/") return Op::div;
    if (t == ">") return Op::gt;
    if (t == "<") return Op::lt;
    if (t == "==") return Op::eq;
    if (t == "AND") return Op::band;
    if (t == "OR") return Op::bor;
    if (t == "XOR") return Op::bxor;
    throw DataError("expression parse: unknown operator '" + t + "'");
}

inline Expr parse_infix_expr(Lexer& lx, const std::vector<std::string>& names) {
    if (lx.accept('(')) {
        Expr lhs = parse_infix_expr(lx, names);
        std::string opt = lx.token();
        if (opt == "^") {
            std::string e = lx.token();
            lx.expect(')');
            if (e == "2") return Expr{Symbol::make_op(Op::pow2), {lhs}};
            if (e == "3") return Expr{Symbol::make_op(Op::pow3), {lhs}};
            throw DataError("expression parse: only ^2 and ^3 are supported, got ^" + e);
        }
        Expr rhs = parse_infix_expr(lx, names);
        lx.expect(')');
        return Expr{Symbol::make_op(binop_from(opt)), {lhs, rhs}};
    }
    std::string tok = lx.token();
    if (tok == "NOT") {
        lx.expect('(');
        Expr a = parse_infix_expr(lx, names);
        lx.expect(')');
        return Expr{Symbol::make_op(Op::bnot), {a}};
    }
    if (tok == "if") {
        lx.expect('(');
        Expr c = parse_infix_expr(lx, names);
        lx.expect(',');
        Expr a = parse_infix_expr(lx, names);
        lx.expect(',');
        Expr b = parse_infix_expr(lx, names);
        lx.expect(')');
        return Expr{Symbol::make_op(Op::ite), {c, a, b}};
    }
    return parse_terminal(tok, names);
}

inline Expr parse_prefix_expr(Lexer& lx, const std::vector<std::string>& names) {
    if (lx.accept('(')) {
        std::string opt = lx.token();
        Op op;
        if (opt == "^2") op = Op::pow2;
        else if (opt == "^3") op = Op::pow3;
        else if (opt == "NOT") op = Op::bnot;
        else if (opt == "if") op = Op::ite;
        else op = binop_from(opt);
        Expr e{Symbol::make_op(op), {}};
        for (int k = 0; k < op_info(op).arity; ++k) e.kids.push_back(parse_prefix_expr(lx, names));
        lx.expect(')');
        return e;
    }
    return parse_terminal(lx.token(), names);
}

}  // namespace detail

inline Expr parse_infix(const std::string& s, const std::vector<std::string>& names = {}) {
    detail::Lexer lx{s};
    Expr e = detail::parse_infix_expr(lx, names);
    if (!lx.eof()) throw DataError("expression parse: trailing input in '" + s + "'");
    return e;
}

inline Expr parse_prefix(const std::string& s, const std::vector<std::string>& names = {}) {
    detail::Lexer lx{s};
    Expr e = detail::parse_prefix_expr(lx, names);
    if (!lx.eof()) throw DataError("expression parse: trailing input in '" + s + "'");
    return e;
}

// simplify + canonical string, the report-facing form of a tree
inline std::string simplify_and_print(const Tree& t, const std::vector<std::string>& names) {
    return to_infix(simplify(extract_expr(t)), names);
}

}  // namespace multifix::gp
