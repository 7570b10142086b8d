#include "icsdetect/learn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "icsdetect/error.hpp"

namespace icsdetect::learn {

namespace {

using nlohmann::json;

void require_trainable(const LabeledDataset& data) {
    validate(data);
    if (data.rows.empty()) {
        throw PreconditionError("training data is empty");
    }
    if (data.dimension() == 0) {
        throw PreconditionError("training data has no features");
    }
    if (data.count(0) == 0 || data.count(1) == 0) {
        throw PreconditionError("training data holds a single class; both benign and attack rows are required");
    }
}

void require_dimension(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw UsageError("row has " + std::to_string(got) + " features, model expects " + std::to_string(expected));
    }
}

double gini(double c0, double c1) {
    const double n = c0 + c1;
    if (n <= 0.0) {
        return 0.0;
    }
    const double p0 = c0 / n;
    const double p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = -1.0;
};

class TreeBuilder {
public:
    TreeBuilder(const LabeledDataset& data, const ForestParams& params, int subset, Rng rng)
        : data_(data), params_(params), subset_(subset), rng_(std::move(rng)) {}

    DecisionTree build(std::vector<std::size_t> sample) {
        tree_.max_depth = params_.max_depth;
        tree_.min_samples_split = params_.min_samples_split;
        grow(sample, 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t>& sample, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        std::uint32_t counts[2] = {0, 0};
        for (auto r : sample) {
            ++counts[data_.labels[r]];
        }
        tree_.nodes[static_cast<std::size_t>(id)].counts[0] = counts[0];
        tree_.nodes[static_cast<std::size_t>(id)].counts[1] = counts[1];

        const bool pure = counts[0] == 0 || counts[1] == 0;
        if (pure || depth >= params_.max_depth || sample.size() < static_cast<std::size_t>(params_.min_samples_split)) {
            return id;
        }
        const Split best = find_split(sample, counts);
        if (best.feature < 0) {
            return id;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : sample) {
            (data_.rows[r][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(r);
        }
        sample.clear();
        sample.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& sample, const std::uint32_t counts[2]) {
        const std::size_t d = data_.dimension();
        // Partial Fisher-Yates draw of `subset_` distinct features, then
        // evaluated in ascending order so ties go to the smaller index.
        std::vector<int> features(d);
        std::iota(features.begin(), features.end(), 0);
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(subset_), d);
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + rng_.below(d - i);
            std::swap(features[i], features[j]);
        }
        features.resize(take);
        std::sort(features.begin(), features.end());

        const double n = static_cast<double>(sample.size());
        const double parent = gini(counts[0], counts[1]);
        Split best;
        for (int f : features) {
            values_.clear();
            for (auto r : sample) {
                values_.emplace_back(data_.rows[r][static_cast<std::size_t>(f)], data_.labels[r]);
            }
            std::sort(values_.begin(), values_.end());
            double left[2] = {0.0, 0.0};
            for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
                left[values_[i].second] += 1.0;
                const double a = values_[i].first;
                const double b = values_[i + 1].first;
                if (a == b) {
                    continue;
                }
                const double nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                const double right0 = counts[0] - left[0];
                const double right1 = counts[1] - left[1];
                const double weighted = (nl / n) * gini(left[0], left[1]) + (nr / n) * gini(right0, right1);
                const double decrease = parent - weighted;
                if (decrease > best.decrease) {
                    double mid = a + (b - a) / 2.0;
                    if (!(mid < b)) {
                        mid = a;
                    }
                    best = {f, mid, decrease};
                }
            }
        }
        return best;
    }

    const LabeledDataset& data_;
    const ForestParams& params_;
    int subset_;
    Rng rng_;
    DecisionTree tree_;
    std::vector<std::pair<double, int>> values_;
};

std::vector<double> standardize(const SvmModel& model, std::span<const double> row) {
    std::vector<double> z(row.size());
    for (std::size_t f = 0; f < row.size(); ++f) {
        z[f] = model.frozen[f] ? 0.0 : (row[f] - model.feature_means[f]) / model.feature_stddevs[f];
    }
    return z;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace

// ---------------------------------------------------------------------------
// Forest

int DecisionTree::predict(std::span<const double> row) const {
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& node = nodes[id];
        id = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                     : node.right);
    }
    return nodes[id].counts[1] > nodes[id].counts[0] ? 1 : 0;
}

int majority_vote(std::span<const int> votes) {
    const auto ones = std::count(votes.begin(), votes.end(), 1);
    return 2 * ones > static_cast<std::ptrdiff_t>(votes.size()) ? 1 : 0;
}

ForestModel train_forest(const LabeledDataset& data, const ForestParams& params, RngSeed seed) {
    require_trainable(data);
    if (params.n_trees < 1) {
        throw UsageError("n_trees must be at least 1");
    }
    if (params.max_depth < 1 || params.min_samples_split < 2) {
        throw UsageError("max_depth must be >= 1 and min_samples_split >= 2");
    }
    const std::size_t d = data.dimension();
    const int subset = params.feature_subset_size > 0
                           ? std::min(params.feature_subset_size, static_cast<int>(d))
                           : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

    ForestModel model;
    model.n_trees = params.n_trees;
    model.feature_subset_size = subset;
    model.dimension = d;
    model.seed = seed;
    model.params = params;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    // Each tree owns the stream derive_seed(seed, tree index), so the
    // forest does not depend on scheduling.
    auto train_one = [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        const std::size_t n = data.size();
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) {
            s = rng.below(n);
        }
        TreeBuilder builder(data, params, subset, std::move(rng));
        model.trees[t] = builder.build(std::move(sample));
    };

    unsigned threads = params.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : params.threads;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(params.n_trees));
    if (threads <= 1) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            train_one(t);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < model.trees.size(); t = next++) {
                    train_one(t);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return model;
}

int predict_forest(const ForestModel& model, std::span<const double> row) {
    require_dimension(model.dimension, row.size());
    std::vector<int> votes;
    votes.reserve(model.trees.size());
    for (const auto& tree : model.trees) {
        votes.push_back(tree.predict(row));
    }
    return majority_vote(votes);
}

// ---------------------------------------------------------------------------
// SVM

double SvmModel::decision_value(std::span<const double> row) const {
    require_dimension(weights.size(), row.size());
    double acc = bias;
    for (std::size_t f = 0; f < row.size(); ++f) {
        if (!frozen[f]) {
            acc += weights[f] * (row[f] - feature_means[f]) / feature_stddevs[f];
        }
    }
    return acc;
}

SvmModel train_svm(const LabeledDataset& data, const SvmParams& params, RngSeed seed) {
    require_trainable(data);
    if (!(params.lambda > 0.0) || params.epochs < 1) {
        throw UsageError("lambda must be positive and epochs >= 1");
    }
    const std::size_t n = data.size();
    const std::size_t d = data.dimension();

    SvmModel model;
    model.lambda = params.lambda;
    model.epochs = params.epochs;
    model.seed = seed;
    model.weights.assign(d, 0.0);
    model.feature_means.assign(d, 0.0);
    model.feature_stddevs.assign(d, 1.0);
    model.frozen.assign(d, false);
    for (std::size_t f = 0; f < d; ++f) {
        double sum = 0.0;
        for (const auto& row : data.rows) {
            sum += row[f];
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& row : data.rows) {
            ss += (row[f] - mean) * (row[f] - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        model.feature_means[f] = mean;
        if (sd > 0.0) {
            model.feature_stddevs[f] = sd;
        } else {
            model.frozen[f] = true;
        }
    }

    std::vector<std::vector<double>> x;
    x.reserve(n);
    for (const auto& row : data.rows) {
        x.push_back(standardize(model, row));
    }

    // The bias is trained as the weight of a constant feature.
    std::vector<double> w(d + 1, 0.0);
    const double radius = 1.0 / std::sqrt(params.lambda);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (auto r : order) {
            ++t;
            const double eta = 1.0 / (params.lambda * static_cast<double>(t));
            const double y = data.labels[r] == 1 ? 1.0 : -1.0;
            double score = w[d];
            for (std::size_t f = 0; f < d; ++f) {
                score += w[f] * x[r][f];
            }
            const double shrink = 1.0 - eta * params.lambda;
            for (auto& wf : w) {
                wf *= shrink;
            }
            if (y * score < 1.0) {
                for (std::size_t f = 0; f < d; ++f) {
                    w[f] += eta * y * x[r][f];
                }
                w[d] += eta * y;
            }
            double norm2 = 0.0;
            for (double wf : w) {
                norm2 += wf * wf;
            }
            if (norm2 > radius * radius) {
                const double scale = radius / std::sqrt(norm2);
                for (auto& wf : w) {
                    wf *= scale;
                }
            }
        }
    }
    for (std::size_t f = 0; f < d; ++f) {
        model.weights[f] = model.frozen[f] ? 0.0 : w[f];
    }
    model.bias = w[d];
    return model;
}

int predict_svm(const SvmModel& model, std::span<const double> row) { return model.decision_value(row) > 0.0 ? 1 : 0; }

// ---------------------------------------------------------------------------
// kNN / k-means

int knn_predict(const LabeledDataset& train, std::span<const double> row, std::size_t k) {
    if (k == 0 || k > train.size()) {
        throw PreconditionError("k must be within 1..|train| (k = " + std::to_string(k) + ")");
    }
    require_dimension(train.dimension(), row.size());
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        dist.emplace_back(squared_distance(train.rows[i], row), i);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<int> votes;
    for (std::size_t i = 0; i < k; ++i) {
        votes.push_back(train.labels[dist[i].second]);
    }
    return majority_vote(votes);
}

KMeansResult kmeans(const std::vector<std::vector<double>>& rows, std::size_t k, RngSeed seed) {
    const std::size_t n = rows.size();
    if (k == 0 || k > n) {
        throw PreconditionError("k must be within 1..n (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
    }
    const std::size_t d = rows.front().size();
    for (const auto& r : rows) {
        require_dimension(d, r.size());
    }

    KMeansResult out;
    Rng rng(seed);
    out.centroids.push_back(rows[rng.below(n)]);
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = squared_distance(rows[i], out.centroids[0]);
    }
    while (out.centroids.size() < k) {
        const auto far = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
        out.centroids.push_back(rows[far]);
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(rows[i], out.centroids.back()));
        }
    }

    auto assign = [&](std::vector<std::size_t>& a, std::vector<double>& dist) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(rows[i], out.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double dd = squared_distance(rows[i], out.centroids[c]);
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            a[i] = best;
            dist[i] = best_d;
        }
    };

    std::vector<std::size_t> assignment(n, 0);
    std::vector<double> dist(n, 0.0);
    assign(assignment, dist);
    for (out.iterations = 1; out.iterations <= 100; ++out.iterations) {
        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++sizes[assignment[i]];
            for (std::size_t f = 0; f < d; ++f) {
                sums[assignment[i]][f] += rows[i][f];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) {
                // Empty cluster: move it onto the point farthest from its centroid.
                const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
                out.centroids[c] = rows[far];
                dist[far] = 0.0;
                continue;
            }
            for (std::size_t f = 0; f < d; ++f) {
                out.centroids[c][f] = sums[c][f] / static_cast<double>(sizes[c]);
            }
        }
        std::vector<std::size_t> next(n);
        assign(next, dist);
        if (next == assignment) {
            break;
        }
        assignment = std::move(next);
    }
    out.iterations = std::min(out.iterations, 100);
    out.assignments = std::move(assignment);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalReport evaluate_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    EvalReport r{tp, fp, tn, fn};
    const double n = static_cast<double>(tp + fp + tn + fn);
    r.accuracy = n > 0 ? static_cast<double>(tp + tn) / n : 0.0;
    r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

EvalReport evaluate_predictions(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.size() != actual.size()) {
        throw UsageError("prediction and label counts differ");
    }
    if (actual.empty()) {
        throw PreconditionError("test set is empty");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (predicted[i] == 1) {
            (actual[i] == 1 ? tp : fp)++;
        } else {
            (actual[i] == 1 ? fn : tn)++;
        }
    }
    return evaluate_counts(tp, fp, tn, fn);
}

EvalReport evaluate(const std::function<int(std::span<const double>)>& predict, const LabeledDataset& test) {
    validate(test);
    std::vector<int> predicted;
    predicted.reserve(test.size());
    for (const auto& row : test.rows) {
        predicted.push_back(predict(row));
    }
    return evaluate_predictions(predicted, test.labels);
}

EvalReport evaluate(const ForestModel& model, const LabeledDataset& test) {
    return evaluate([&](std::span<const double> row) { return predict_forest(model, row); }, test);
}

EvalReport evaluate(const SvmModel& model, const LabeledDataset& test) {
    return evaluate([&](std::span<const double> row) { return predict_svm(model, row); }, test);
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double train_fraction, RngSeed seed) {
    validate(data);
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
        throw UsageError("train fraction must be within [0, 1]");
    }
    Rng rng(seed);
    std::vector<bool> to_train(data.size(), false);
    for (int label : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.labels[i] == label) {
                idx.push_back(i);
            }
        }
        rng.shuffle(idx.begin(), idx.end());
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < n_train; ++i) {
            to_train[idx[i]] = true;
        }
    }
    LabeledDataset train;
    LabeledDataset test;
    train.feature_names = test.feature_names = data.feature_names;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto& dst = to_train[i] ? train : test;
        dst.rows.push_back(data.rows[i]);
        dst.labels.push_back(data.labels[i]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const ForestModel& model) {
    nlohmann::ordered_json j;
    j["model"] = "rf";
    j["seed"] = model.seed.value;
    j["n_trees"] = model.n_trees;
    j["max_depth"] = model.params.max_depth;
    j["min_samples_split"] = model.params.min_samples_split;
    j["feature_subset_size"] = model.feature_subset_size;
    j["dimension"] = model.dimension;
    auto trees = nlohmann::ordered_json::array();
    for (const auto& tree : model.trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (const auto& n : tree.nodes) {
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]});
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j.dump() + "\n";
}

std::string to_json(const SvmModel& model) {
    nlohmann::ordered_json j;
    j["model"] = "svm";
    j["seed"] = model.seed.value;
    j["lambda"] = model.lambda;
    j["epochs"] = model.epochs;
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["feature_means"] = model.feature_means;
    j["feature_stddevs"] = model.feature_stddevs;
    std::vector<int> frozen(model.frozen.begin(), model.frozen.end());
    j["frozen"] = frozen;
    return j.dump(2) + "\n";
}

std::string to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["tn"] = r.tn;
    j["fn"] = r.fn;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    return j.dump(2) + "\n";
}

std::string model_kind(std::string_view text) {
    try {
        return json::parse(text).at("model").get<std::string>();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    }
}

ForestModel forest_from_json(std::string_view text) {
    try {
        const auto j = json::parse(text);
        if (j.at("model") != "rf") {
            throw InputError("model file does not hold a random forest");
        }
        ForestModel m;
        m.seed.value = j.at("seed").get<std::uint64_t>();
        m.n_trees = j.at("n_trees").get<int>();
        m.params.n_trees = m.n_trees;
        m.params.max_depth = j.at("max_depth").get<int>();
        m.params.min_samples_split = j.at("min_samples_split").get<int>();
        m.feature_subset_size = j.at("feature_subset_size").get<int>();
        m.params.feature_subset_size = m.feature_subset_size;
        m.dimension = j.at("dimension").get<std::size_t>();
        for (const auto& jt : j.at("trees")) {
            DecisionTree tree;
            tree.max_depth = m.params.max_depth;
            tree.min_samples_split = m.params.min_samples_split;
            for (const auto& jn : jt) {
                TreeNode n;
                n.feature = jn.at(0).get<int>();
                n.threshold = jn.at(1).get<double>();
                n.left = jn.at(2).get<int>();
                n.right = jn.at(3).get<int>();
                n.counts[0] = jn.at(4).get<std::uint32_t>();
                n.counts[1] = jn.at(5).get<std::uint32_t>();
                tree.nodes.push_back(n);
            }
            const auto size = static_cast<int>(tree.nodes.size());
            for (const auto& n : tree.nodes) {
                if (!n.is_leaf() && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size ||
                                     n.feature >= static_cast<int>(m.dimension))) {
                    throw InputError("model file holds a malformed tree");
                }
            }
            if (tree.nodes.empty()) {
                throw InputError("model file holds an empty tree");
            }
            m.trees.push_back(std::move(tree));
        }
        if (m.trees.size() != static_cast<std::size_t>(m.n_trees) || m.n_trees < 1) {
            throw InputError("tree count does not match n_trees");
        }
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed forest model: ") + e.what());
    }
}

SvmModel svm_from_json(std::string_view text) {
    try {
        const auto j = json::parse(text);
        if (j.at("model") != "svm") {
            throw InputError("model file does not hold an SVM");
        }
        SvmModel m;
        m.seed.value = j.at("seed").get<std::uint64_t>();
        m.lambda = j.at("lambda").get<double>();
        m.epochs = j.at("epochs").get<int>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.feature_means = j.at("feature_means").get<std::vector<double>>();
        m.feature_stddevs = j.at("feature_stddevs").get<std::vector<double>>();
        for (int f : j.at("frozen").get<std::vector<int>>()) {
            m.frozen.push_back(f != 0);
        }
        const auto d = m.weights.size();
        if (m.feature_means.size() != d || m.feature_stddevs.size() != d || m.frozen.size() != d) {
            throw InputError("SVM model vectors differ in length");
        }
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed SVM model: ") + e.what());
    }
}

} // namespace icsdetect::learn
