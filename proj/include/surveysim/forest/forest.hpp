#pragma once

#include "surveysim/corpus/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace surveysim::forest {

/// Row-major so a row can be handed to prediction as a contiguous pointer.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Task { classification, regression };

std::string to_string(Task t);

struct Hyperparameters {
    std::size_t n_estimators = 10;
    std::size_t max_depth = 5;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;

    bool operator==(const Hyperparameters &) const = default;
};

struct TreeNode {
    int feature = -1; ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;  ///< rows with x[feature] <= threshold
    int right = -1;
    double value = 0.0;               ///< regression: leaf mean
    std::vector<double> distribution; ///< classification: class shares at the node
    std::size_t samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode &) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes; ///< nodes[0] is the root

    std::size_t depth() const;
    std::size_t node_count() const noexcept { return nodes.size(); }
    std::size_t leaf_of(const double *row) const;
    bool operator==(const Tree &) const = default;
};

struct TrainOptions {
    Hyperparameters hp;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    bool bootstrap = true;
    /// Features tried per split; 0 = floor(sqrt(p)) for classification, floor(p/3) for regression.
    std::size_t max_features = 0;
};

struct ForestModel {
    Task task = Task::classification;
    Hyperparameters hp;
    std::uint64_t seed = 0;
    std::size_t max_features = 0;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_labels; ///< classification only
    std::vector<Tree> trees;

    /// Class index with the highest mean leaf share (ties: lowest index).
    std::size_t predict_class(const double *row) const;
    double predict_value(const double *row) const;

    bool operator==(const ForestModel &) const = default;
};

/// Trains on rows `rows` of `x`. `y` holds class indices (classification) or values.
/// Each tree draws a bootstrap multiset of `rows` of the same size with its own derived seed.
/// Throws TrainingError when the training rows hold a single class (or a constant target).
ForestModel train_forest(const FeatureMatrix &x, const std::vector<double> &y, const std::vector<std::size_t> &rows,
                         Task task, const std::vector<std::string> &class_labels,
                         const std::vector<std::string> &feature_names, const TrainOptions &options);

/// Gini impurity of class counts; 0 for a pure node.
double gini(const std::vector<double> &counts);
/// Population variance; 0 for a constant target.
double variance(const std::vector<double> &values);

// ---------------------------------------------------------------------------
// Preprocessing

struct DesignMatrix {
    Task task = Task::classification;
    std::string target_code;
    std::vector<std::string> row_ids;
    std::vector<std::string> column_names;
    FeatureMatrix x;                       ///< rows x columns, imputed
    std::vector<double> y;                 ///< class index or value
    std::vector<std::string> class_labels; ///< classification only, instrument order
    std::vector<std::string> dropped_columns; ///< source items removed by the missingness rule
    std::vector<double> imputed_values;       ///< per column, from the train split
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct PreprocessOptions {
    std::set<std::string> countries; ///< empty keeps every country
    std::set<std::string> excluded_items;
    double max_missing_share = 0.30; ///< columns with a larger share of missing values are dropped
    double train_share = 0.6;
    double validation_share = 0.2;
    std::size_t min_rows = 10;
    std::uint64_t seed = 0;
};

struct PreparedData {
    DesignMatrix matrix;
    SplitIndices split;
};

/// Country filter, non-null target, Refusal/Don't-know targets dropped, sparse columns dropped,
/// one-hot encoding, seeded 60/20/20 split, then train-split mode (indicators) / median imputation.
/// Country and age enter as features. Throws InsufficientDataError below `min_rows`.
PreparedData preprocess(const corpus::SurveyCorpus &corpus, const std::string &target, const PreprocessOptions &options);

// ---------------------------------------------------------------------------
// Grid search and evaluation

struct Grid {
    std::vector<std::size_t> n_estimators{5, 10, 20, 50};
    std::vector<std::size_t> max_depth{3, 5, 7};
    std::vector<std::size_t> min_samples_split{10, 20, 50};
    std::vector<std::size_t> min_samples_leaf{5, 10, 20};

    std::vector<Hyperparameters> points() const;
};

struct GridScore {
    Hyperparameters hp;
    double validation_score = 0.0; ///< weighted F1 or Pearson r; NaN when undefined
};

struct GridSearchResult {
    ForestModel best;
    double best_score = 0.0;
    std::vector<GridScore> table; ///< grid order
};

/// Fits every grid point on the train split and keeps the best validation score.
/// Ties: fewer trees, then shallower, then grid order. Undefined scores rank last.
GridSearchResult grid_search_train(const DesignMatrix &matrix, const SplitIndices &split, const Grid &grid,
                                   std::uint64_t seed, std::size_t workers = 0);

struct EvaluationRecord {
    std::string target_code;
    Task task = Task::classification;
    std::string metric; ///< "weighted_f1" | "pearson"
    double train_score = 0.0; ///< NaN when undefined
    double test_score = 0.0;
    bool train_defined = true;
    bool test_defined = true;
    double test_tvd = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    Hyperparameters hp;
};

EvaluationRecord evaluate(const ForestModel &model, const DesignMatrix &matrix, const SplitIndices &split);

/// Self-describing JSON (metadata plus node arrays per tree).
void write_model(std::ostream &out, const ForestModel &model);
/// Throws ParseError on malformed input.
ForestModel read_model(std::istream &in);

} // namespace surveysim::forest
