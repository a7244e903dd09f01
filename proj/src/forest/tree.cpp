#include "surveysim/forest/forest.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/parallel.hpp"
#include "surveysim/common/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace surveysim::forest {

std::string to_string(Task t) {
    return t == Task::classification ? "classification" : "regression";
}

double gini(const std::vector<double> &counts) {
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (n <= 0.0) {
        return 0.0;
    }
    double sq = 0.0;
    for (double c : counts) {
        sq += (c / n) * (c / n);
    }
    return std::max(0.0, 1.0 - sq);
}

double variance(const std::vector<double> &values) {
    if (values.empty()) {
        return 0.0;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return ss / static_cast<double>(values.size());
}

std::size_t Tree::depth() const {
    if (nodes.empty()) {
        return 0;
    }
    std::size_t deepest = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [id, d] = stack.back();
        stack.pop_back();
        const auto &node = nodes[static_cast<std::size_t>(id)];
        deepest = std::max(deepest, d);
        if (!node.is_leaf()) {
            stack.emplace_back(node.left, d + 1);
            stack.emplace_back(node.right, d + 1);
        }
    }
    return deepest;
}

std::size_t Tree::leaf_of(const double *row) const {
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
        const auto &node = nodes[id];
        id = static_cast<std::size_t>(row[node.feature] <= node.threshold ? node.left : node.right);
    }
    return id;
}

std::size_t ForestModel::predict_class(const double *row) const {
    std::vector<double> share(class_labels.size(), 0.0);
    for (const auto &tree : trees) {
        const auto &dist = tree.nodes[tree.leaf_of(row)].distribution;
        for (std::size_t c = 0; c < share.size(); ++c) {
            share[c] += dist[c];
        }
    }
    return static_cast<std::size_t>(std::max_element(share.begin(), share.end()) - share.begin());
}

double ForestModel::predict_value(const double *row) const {
    double sum = 0.0;
    for (const auto &tree : trees) {
        sum += tree.nodes[tree.leaf_of(row)].value;
    }
    return sum / static_cast<double>(trees.size());
}

namespace {

constexpr double kTieTolerance = 1e-12;

struct Candidate {
    double impurity;
    int feature = -1;
    double threshold = 0.0;
};

class TreeBuilder {
  public:
    TreeBuilder(const FeatureMatrix &x, const std::vector<double> &y, Task task, std::size_t n_classes,
                const Hyperparameters &hp, std::size_t max_features, Rng &rng)
        : x_(x), y_(y), task_(task), n_classes_(n_classes), hp_(hp), max_features_(max_features), rng_(rng) {
        features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(features_.begin(), features_.end(), 0);
    }

    Tree build(std::vector<std::size_t> rows) {
        grow(rows, 0);
        return std::move(tree_);
    }

  private:
    /// Node summary and impurity of a row multiset.
    double summarize(const std::vector<std::size_t> &rows, TreeNode &node) const {
        node.samples = rows.size();
        if (task_ == Task::classification) {
            std::vector<double> counts(n_classes_, 0.0);
            for (auto r : rows) {
                counts[static_cast<std::size_t>(y_[r])] += 1.0;
            }
            node.distribution.resize(n_classes_);
            for (std::size_t c = 0; c < n_classes_; ++c) {
                node.distribution[c] = counts[c] / static_cast<double>(rows.size());
            }
            return gini(counts);
        }
        std::vector<double> values;
        values.reserve(rows.size());
        for (auto r : rows) {
            values.push_back(y_[r]);
        }
        node.value = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        return variance(values);
    }

    /// Scans every threshold between distinct consecutive values of one feature.
    void scan(const std::vector<std::size_t> &rows, int feature, Candidate &best) {
        const auto n = rows.size();
        pairs_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            pairs_[i] = {x_(static_cast<Eigen::Index>(rows[i]), feature), y_[rows[i]]};
        }
        std::sort(pairs_.begin(), pairs_.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        if (pairs_.front().first == pairs_.back().first) {
            return;
        }
        const double total_n = static_cast<double>(n);
        const std::size_t leaf = std::max<std::size_t>(1, hp_.min_samples_leaf);

        std::vector<double> left(n_classes_, 0.0), right(n_classes_, 0.0);
        double sum_l = 0.0, sq_l = 0.0, sum_r = 0.0, sq_r = 0.0;
        for (const auto &[v, t] : pairs_) {
            if (task_ == Task::classification) {
                right[static_cast<std::size_t>(t)] += 1.0;
            } else {
                sum_r += t;
                sq_r += t * t;
            }
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double t = pairs_[i].second;
            if (task_ == Task::classification) {
                left[static_cast<std::size_t>(t)] += 1.0;
                right[static_cast<std::size_t>(t)] -= 1.0;
            } else {
                sum_l += t;
                sq_l += t * t;
                sum_r -= t;
                sq_r -= t * t;
            }
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (pairs_[i].first == pairs_[i + 1].first || nl < leaf || nr < leaf) {
                continue;
            }
            double impurity = 0.0;
            if (task_ == Task::classification) {
                impurity = (static_cast<double>(nl) * gini(left) + static_cast<double>(nr) * gini(right)) / total_n;
            } else {
                const double ss_l = std::max(0.0, sq_l - sum_l * sum_l / static_cast<double>(nl));
                const double ss_r = std::max(0.0, sq_r - sum_r * sum_r / static_cast<double>(nr));
                impurity = (ss_l + ss_r) / total_n;
            }
            // Near-ties keep the earlier threshold so results do not hinge on rounding.
            if (impurity < best.impurity - kTieTolerance) {
                best.impurity = impurity;
                best.feature = feature;
                double mid = (pairs_[i].first + pairs_[i + 1].first) / 2.0;
                if (!(mid < pairs_[i + 1].first)) {
                    mid = pairs_[i].first;
                }
                best.threshold = mid;
            }
        }
    }

    int grow(const std::vector<std::size_t> &rows, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        TreeNode node;
        const double impurity = summarize(rows, node);

        const bool can_split = depth < hp_.max_depth && rows.size() >= hp_.min_samples_split &&
                               rows.size() >= 2 * std::max<std::size_t>(1, hp_.min_samples_leaf) && impurity > 1e-15;
        if (can_split) {
            // Partial Fisher-Yates draws max_features distinct features.
            const auto p = features_.size();
            for (std::size_t i = 0; i < max_features_; ++i) {
                const auto j = i + static_cast<std::size_t>(uniform_index(rng_, p - i));
                std::swap(features_[i], features_[j]);
            }
            Candidate best{impurity};
            for (std::size_t i = 0; i < max_features_; ++i) {
                scan(rows, features_[i], best);
            }
            if (best.feature >= 0) {
                std::vector<std::size_t> left, right;
                for (auto r : rows) {
                    (x_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
                }
                node.feature = best.feature;
                node.threshold = best.threshold;
                tree_.nodes[static_cast<std::size_t>(id)] = node;
                const int l = grow(left, depth + 1);
                const int r = grow(right, depth + 1);
                tree_.nodes[static_cast<std::size_t>(id)].left = l;
                tree_.nodes[static_cast<std::size_t>(id)].right = r;
                return id;
            }
        }
        tree_.nodes[static_cast<std::size_t>(id)] = std::move(node);
        return id;
    }

    const FeatureMatrix &x_;
    const std::vector<double> &y_;
    Task task_;
    std::size_t n_classes_;
    Hyperparameters hp_;
    std::size_t max_features_;
    Rng &rng_;
    std::vector<int> features_;
    std::vector<std::pair<double, double>> pairs_;
    Tree tree_;
};

} // namespace

ForestModel train_forest(const FeatureMatrix &x, const std::vector<double> &y, const std::vector<std::size_t> &rows,
                         Task task, const std::vector<std::string> &class_labels,
                         const std::vector<std::string> &feature_names, const TrainOptions &options) {
    const auto &hp = options.hp;
    if (hp.n_estimators == 0 || hp.max_depth == 0) {
        throw ConfigurationError("n_estimators and max_depth must be positive");
    }
    if (x.cols() == 0) {
        throw TrainingError("design matrix has no feature columns");
    }
    if (rows.empty()) {
        throw TrainingError("no training rows");
    }
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw ValidationError("feature rows and targets disagree in length");
    }
    if (task == Task::classification) {
        if (class_labels.empty()) {
            throw ConfigurationError("classification needs class labels");
        }
        const double first = y[rows.front()];
        if (std::all_of(rows.begin(), rows.end(), [&](auto r) { return y[r] == first; })) {
            throw TrainingError("training split holds a single class ('" +
                                class_labels[static_cast<std::size_t>(first)] + "')");
        }
    } else {
        const double first = y[rows.front()];
        if (std::all_of(rows.begin(), rows.end(), [&](auto r) { return y[r] == first; })) {
            throw TrainingError("training target is constant");
        }
    }

    const auto p = static_cast<std::size_t>(x.cols());
    std::size_t max_features = options.max_features;
    if (max_features == 0) {
        max_features = task == Task::classification
                           ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))))
                           : p / 3;
    }
    max_features = std::clamp<std::size_t>(max_features, 1, p);

    ForestModel model;
    model.task = task;
    model.hp = hp;
    model.seed = options.seed;
    model.max_features = max_features;
    model.feature_names = feature_names;
    model.class_labels = class_labels;
    model.trees.resize(hp.n_estimators);
    parallel_for(hp.n_estimators, options.workers, [&](std::size_t t) {
        Rng rng = SeedSequence(options.seed).mix("tree").mix(static_cast<std::uint64_t>(t)).engine();
        std::vector<std::size_t> sample;
        if (options.bootstrap) {
            sample.resize(rows.size());
            for (auto &s : sample) {
                s = rows[static_cast<std::size_t>(uniform_index(rng, rows.size()))];
            }
        } else {
            sample = rows;
        }
        TreeBuilder builder(x, y, task, class_labels.size(), hp, max_features, rng);
        model.trees[t] = builder.build(std::move(sample));
    });
    return model;
}

} // namespace surveysim::forest
