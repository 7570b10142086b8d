#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icsdetect/core.hpp"

namespace icsdetect::learn {

// ---------------------------------------------------------------------------
// Random forest

struct TreeNode {
    int feature = -1;        ///< -1 marks a leaf
    double threshold = 0.0;  ///< go left when row[feature] <= threshold
    int left = -1;
    int right = -1;
    std::uint32_t counts[2] = {0, 0}; ///< training class counts reaching the node

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; ///< nodes[0] is the root
    int max_depth = 16;
    int min_samples_split = 2;

    int predict(std::span<const double> row) const;
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 16;
    int min_samples_split = 2;
    /// Features sampled per split; 0 selects ceil(sqrt(d)).
    int feature_subset_size = 0;
    /// Worker threads; 0 uses the hardware concurrency. Output does not
    /// depend on it.
    unsigned threads = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    int n_trees = 0;
    int feature_subset_size = 0;
    std::size_t dimension = 0;
    RngSeed seed;
    ForestParams params;
};

/// Bootstrap-aggregated Gini trees. Throws PreconditionError on empty or
/// single-class data.
ForestModel train_forest(const LabeledDataset& data, const ForestParams& params, RngSeed seed);

/// Majority vote; ties go to class 0.
int predict_forest(const ForestModel& model, std::span<const double> row);

/// Majority vote over explicit tree votes (ties -> 0).
int majority_vote(std::span<const int> votes);

// ---------------------------------------------------------------------------
// Linear SVM

struct SvmParams {
    double lambda = 1e-4;
    int epochs = 50;
};

struct SvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_stddevs;
    std::vector<bool> frozen; ///< zero-variance features, weight fixed at 0
    double lambda = 1e-4;
    int epochs = 50;
    RngSeed seed;

    double decision_value(std::span<const double> row) const;
};

/// Stochastic sub-gradient descent on the L2-regularized hinge loss with
/// step 1/(lambda t) over standardized features.
SvmModel train_svm(const LabeledDataset& data, const SvmParams& params, RngSeed seed);

/// sign(w . standardize(row) + b); a zero decision value maps to class 0.
int predict_svm(const SvmModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// Nearest neighbours and clustering

/// Euclidean k-NN majority vote. Distance ties prefer the lower row index,
/// vote ties go to class 0.
int knn_predict(const LabeledDataset& train, std::span<const double> row, std::size_t k = 5);

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignments;
    int iterations = 0;
};

/// Farthest-point seeding from a seeded start, then Lloyd iterations until
/// the assignment is stable or 100 iterations have run.
KMeansResult kmeans(const std::vector<std::vector<double>>& rows, std::size_t k, RngSeed seed);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Confusion counts with attack (1) as the positive class.
EvalReport evaluate_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
EvalReport evaluate_predictions(std::span<const int> predicted, std::span<const int> actual);
EvalReport evaluate(const std::function<int(std::span<const double>)>& predict, const LabeledDataset& test);
EvalReport evaluate(const ForestModel& model, const LabeledDataset& test);
EvalReport evaluate(const SvmModel& model, const LabeledDataset& test);

/// Stratified split: each class is shuffled with the seed and its first
/// round(fraction * count) rows go to training. Rows keep input order.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double train_fraction, RngSeed seed);

// ---------------------------------------------------------------------------
// Serialization (JSON with all hyperparameters and the seed)

std::string to_json(const ForestModel& model);
std::string to_json(const SvmModel& model);
std::string to_json(const EvalReport& report);
ForestModel forest_from_json(std::string_view text);
SvmModel svm_from_json(std::string_view text);
/// "rf" or "svm" as recorded in a model file.
std::string model_kind(std::string_view text);

} // namespace icsdetect::learn
