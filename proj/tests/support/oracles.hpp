#pragma once

// Brute-force reference implementations used only by tests. They follow the
// textbook definitions directly and share no code with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

/// Half the summed absolute pmf difference over the union of labels.
inline double tvd_labels(const std::map<std::string, double> &p, const std::map<std::string, double> &q) {
    std::map<std::string, std::pair<double, double>> joint;
    for (const auto &[k, v] : p) {
        joint[k].first = v;
    }
    for (const auto &[k, v] : q) {
        joint[k].second = v;
    }
    double sum = 0.0;
    for (const auto &[k, pq] : joint) {
        sum += std::fabs(pq.first - pq.second);
    }
    return sum / 2.0;
}

/// Direct histogram TVD: K equal bins over the pooled range; each sample is placed by
/// scanning the edges (x in [e_i, e_{i+1}), last bin closed).
inline double tvd_histogram(const std::vector<double> &a, const std::vector<double> &b, int k) {
    double lo = a[0], hi = a[0];
    for (double x : a) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    for (double x : b) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (lo == hi) {
        return 0.0;
    }
    std::vector<double> edges(k + 1);
    for (int i = 0; i < k; ++i) {
        edges[i] = lo + i * ((hi - lo) / k);
    }
    edges[k] = hi;
    auto place = [&](double x) {
        for (int i = 0; i < k - 1; ++i) {
            if (x >= edges[i] && x < edges[i + 1]) {
                return i;
            }
        }
        return k - 1;
    };
    std::vector<double> pa(k, 0.0), pb(k, 0.0);
    for (double x : a) {
        pa[place(x)] += 1.0;
    }
    for (double x : b) {
        pb[place(x)] += 1.0;
    }
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        sum += std::fabs(pa[i] / a.size() - pb[i] / b.size());
    }
    return sum / 2.0;
}

/// Per-class F1 from an explicit confusion matrix, weighted by true-class support.
inline double weighted_f1(const std::vector<std::string> &truth, const std::vector<std::string> &pred) {
    std::map<std::string, std::map<std::string, int>> confusion;
    std::map<std::string, int> support, predicted;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        confusion[truth[i]][pred[i]]++;
        support[truth[i]]++;
        predicted[pred[i]]++;
    }
    double total = 0.0;
    for (const auto &[cls, n] : support) {
        const double tp = confusion[cls][cls];
        const double precision = predicted[cls] ? tp / predicted[cls] : 0.0;
        const double recall = tp / n;
        const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        total += f1 * n;
    }
    return total / truth.size();
}

/// Mean of truth[i] over i whose key[i] falls in [lo, hi] with the given openness.
inline double filtered_mean(const std::vector<double> &truth, const std::vector<double> &key, double lo,
                            bool lo_open, double hi, int *count) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool above = lo_open ? key[i] > lo : key[i] >= lo;
        if (above && key[i] <= hi) {
            sum += truth[i];
            ++n;
        }
    }
    *count = n;
    return n ? sum / n : std::nan("");
}

/// Plug-in entropy of one column, natural log.
inline double column_entropy(const std::vector<double> &column) {
    std::map<double, int> counts;
    for (double v : column) {
        counts[v]++;
    }
    double h = 0.0;
    for (const auto &[v, c] : counts) {
        const double p = static_cast<double>(c) / column.size();
        h -= p * std::log(p);
    }
    return h;
}

/// Best single-threshold rule on 1-D data by exhaustive scan: every midpoint between
/// distinct sorted values, weighted Gini recomputed from scratch, earliest threshold
/// kept unless a later one beats it by more than 1e-12. Returns (threshold, left class,
/// right class); threshold is NaN when no split improves on the parent.
struct Stump {
    double threshold;
    int left;
    int right;
};

inline Stump best_stump(const std::vector<double> &x, const std::vector<int> &y, int classes) {
    auto impurity_of = [&](auto &&in_side) {
        std::vector<double> counts(classes, 0.0);
        double n = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (in_side(x[i])) {
                counts[y[i]] += 1;
                n += 1;
            }
        }
        double g = 1.0;
        for (double c : counts) {
            g -= (c / n) * (c / n);
        }
        return std::pair{n, g};
    };
    auto majority = [&](auto &&in_side) {
        std::vector<int> counts(classes, 0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (in_side(x[i])) {
                counts[y[i]]++;
            }
        }
        return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    };
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const double total = static_cast<double>(x.size());
    double best = impurity_of([](double) { return true; }).second;
    double best_t = std::nan("");
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double t = (sorted[i] + sorted[i + 1]) / 2.0;
        const auto [nl, gl] = impurity_of([&](double v) { return v <= t; });
        const auto [nr, gr] = impurity_of([&](double v) { return v > t; });
        const double imp = (nl * gl + nr * gr) / total;
        if (imp < best - 1e-12) {
            best = imp;
            best_t = t;
        }
    }
    if (std::isnan(best_t)) {
        const int all = majority([](double) { return true; });
        return {best_t, all, all};
    }
    return {best_t, majority([&](double v) { return v <= best_t; }), majority([&](double v) { return v > best_t; })};
}

} // namespace oracle
