#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "multifix/gp/gomea.hpp"

namespace multifix::explain {

// Exhaustive binary-input truth table of a fusion expression: 2^k rows,
// labels are the rounded-and-clamped expression outputs.
struct TruthTable {
    std::vector<std::string> inputs;
    std::vector<int> labels;  // row r holds the label for input bits of r (input 0 = MSB)

    int arity() const { return static_cast<int>(inputs.size()); }
    int rows() const { return static_cast<int>(labels.size()); }

    int bit(int row, int input) const { return (row >> (arity() - 1 - input)) & 1; }
};

inline TruthTable extract_truth_table(const gp::Expr& fusion, const std::vector<std::string>& input_names,
                                      int n_classes) {
    int k = static_cast<int>(input_names.size());
    if (k > 16)
        throw ConfigError("truth table: refusing to enumerate " + std::to_string(k) +
                          " binary inputs (limit is 16)");
    if (k < 1) throw ConfigError("truth table: needs at least one input");
    TruthTable t;
    t.inputs = input_names;
    std::vector<float> row(static_cast<size_t>(k));
    for (int r = 0; r < (1 << k); ++r) {
        for (int j = 0; j < k; ++j) row[static_cast<size_t>(j)] = static_cast<float>((r >> (k - 1 - j)) & 1);
        t.labels.push_back(gp::round_to_class(fusion.eval(row.data()), n_classes));
    }
    return t;
}

// designed multiclass table: label = 2*first_input + second_input
inline TruthTable designed_multiclass_table() {
    TruthTable t;
    t.inputs = {"ft_square", "ft_A"};
    t.labels = {0, 1, 2, 3};
    return t;
}

inline TruthTable designed_xor_table() {
    TruthTable t;
    t.inputs = {"ft_circle", "ft_A"};
    t.labels = {0, 1, 1, 0};
    return t;
}

struct EquivalenceWitness {
    bool equivalent = false;
    std::vector<int> input_flips;       // 1 where the input bit is inverted
    std::vector<int> label_map_from;    // label_map_from[i] in t1 maps to label_map_to[i] in t2
    std::vector<int> label_map_to;
};

// True iff some combination of per-input bit flips plus a bijection between
// the label alphabets maps t1 onto t2 (captures features learned with
// inverted semantics and relabelled classes).
inline EquivalenceWitness table_equivalence(const TruthTable& t1, const TruthTable& t2) {
    if (t1.arity() != t2.arity())
        throw ConfigError("table_equivalence: arity mismatch (" + std::to_string(t1.arity()) + " vs " +
                          std::to_string(t2.arity()) + ")");
    EquivalenceWitness w;
    std::vector<int> alpha1, alpha2;
    for (int l : t1.labels)
        if (std::find(alpha1.begin(), alpha1.end(), l) == alpha1.end()) alpha1.push_back(l);
    for (int l : t2.labels)
        if (std::find(alpha2.begin(), alpha2.end(), l) == alpha2.end()) alpha2.push_back(l);
    std::sort(alpha1.begin(), alpha1.end());
    std::sort(alpha2.begin(), alpha2.end());
    if (alpha1.size() != alpha2.size()) return w;

    int k = t1.arity();
    std::vector<int> perm = iota_indices(static_cast<int>(alpha2.size()));
    std::sort(perm.begin(), perm.end());
    for (int flips = 0; flips < (1 << k); ++flips) {
        std::vector<int> p = perm;
        do {
            bool ok = true;
            for (int r = 0; r < t1.rows() && ok; ++r) {
                // apply input flips to t1's row index
                int r2 = 0;
                for (int j = 0; j < k; ++j) {
                    int b = t1.bit(r, j) ^ ((flips >> (k - 1 - j)) & 1);
                    r2 = (r2 << 1) | b;
                }
                int l1 = t1.labels[static_cast<size_t>(r)];
                size_t pos = static_cast<size_t>(std::find(alpha1.begin(), alpha1.end(), l1) - alpha1.begin());
                int mapped = alpha2[static_cast<size_t>(p[pos])];
                if (mapped != t2.labels[static_cast<size_t>(r2)]) ok = false;
            }
            if (ok) {
                w.equivalent = true;
                for (int j = 0; j < k; ++j) w.input_flips.push_back((flips >> (k - 1 - j)) & 1);
                for (size_t i = 0; i < alpha1.size(); ++i) {
                    w.label_map_from.push_back(alpha1[i]);
                    w.label_map_to.push_back(alpha2[static_cast<size_t>(p[i])]);
                }
                return w;
            }
        } while (std::next_permutation(p.begin(), p.end()));
    }
    return w;
}

}  // namespace multifix::explain
