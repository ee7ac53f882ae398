#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "multifix/common.hpp"

namespace multifix::pipeline {

// Unweighted mean of per-class recalls; classes absent from the labels are
// excluded from the mean.
inline double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels, int n_classes) {
    if (preds.empty() || labels.empty()) throw DataError("balanced_accuracy: empty input");
    if (preds.size() != labels.size()) throw DataError("balanced_accuracy: size mismatch");
    std::vector<int> correct(static_cast<size_t>(n_classes), 0), total(static_cast<size_t>(n_classes), 0);
    for (size_t i = 0; i < preds.size(); ++i) {
        int y = labels[i];
        if (y < 0 || y >= n_classes) throw DataError("balanced_accuracy: label " + std::to_string(y) + " out of range");
        total[static_cast<size_t>(y)]++;
        if (preds[i] == y) correct[static_cast<size_t>(y)]++;
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (total[static_cast<size_t>(c)] == 0) continue;
        ++present;
        sum += static_cast<double>(correct[static_cast<size_t>(c)]) / total[static_cast<size_t>(c)];
    }
    return sum / present;
}

enum class Alternative { two_sided, greater };

// Exact paired permutation test on fold scores: all 2^n sign assignments of
// the paired differences, statistic = mean difference. With five folds the
// smallest attainable two-sided p is 2/32; the one-sided variant reaches 1/32.
inline double significance_test(const std::vector<double>& a, const std::vector<double>& b,
                                Alternative alt = Alternative::two_sided) {
    if (a.size() != b.size()) throw DataError("significance_test: fold score lengths differ");
    size_t n = a.size();
    if (n < 2) throw DataError("significance_test: needs at least 2 paired scores");
    if (n > 20) throw ConfigError("significance_test: exact enumeration limited to 20 pairs");
    std::vector<double> d(n);
    double obs = 0.0;
    for (size_t i = 0; i < n; ++i) {
        d[i] = a[i] - b[i];
        obs += d[i];
    }
    obs /= static_cast<double>(n);
    const double eps = 1e-12;
    int64_t count = 0, totalc = int64_t{1} << n;
    for (int64_t mask = 0; mask < totalc; ++mask) {
        double m = 0.0;
        for (size_t i = 0; i < n; ++i) m += (mask >> i) & 1 ? -d[i] : d[i];
        m /= static_cast<double>(n);
        if (alt == Alternative::two_sided ? std::abs(m) >= std::abs(obs) - eps : m >= obs - eps) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(totalc);
}

inline std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

// Spearman rank correlation (average ranks on ties).
inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("spearman: needs two equal-length series");
    auto rx = ranks_with_ties(x), ry = ranks_with_ties(y);
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double num = 0, dx = 0, dy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0 || dy == 0) return 0.0;
    return num / std::sqrt(dx * dy);
}

struct MeanStd {
    double mean = 0.0, stddev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
    if (v.empty()) return {};
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace multifix::pipeline
