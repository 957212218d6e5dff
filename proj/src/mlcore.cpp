#include "cohort/mlcore.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cohort::ml {

void check_binary_input(const Matrix& x, const Labels& y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch, fmt::format("{} feature rows vs {} labels", x.size(), y.size()));
    }
    std::size_t positives = 0;
    for (int label : y) {
        if (label != 0 && label != 1) throw Error(ErrorKind::SingleClassInput, fmt::format("label {} is not binary", label));
        positives += static_cast<std::size_t>(label);
    }
    if (positives == 0 || positives == y.size()) {
        throw Error(ErrorKind::SingleClassInput, "training data needs both met and not-met samples");
    }
    const std::size_t width = x.front().size();
    for (const auto& row : x) {
        if (row.size() != width) throw Error(ErrorKind::LengthMismatch, "ragged feature matrix");
    }
}

namespace {

double dot(const std::vector<double>& w, const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size() && i < x.size(); ++i) s += w[i] * x[i];
    return s;
}

double sign_of(int label) { return label == 1 ? 1.0 : -1.0; }

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

double LinearModel::decision(const std::vector<double>& row) const { return dot(weights, row) + bias; }

int predict(const LinearModel& model, const std::vector<double>& row) { return model.decision(row) > 0.0 ? 1 : 0; }

double predict_proba(const LinearModel& model, const std::vector<double>& row) { return sigmoid(model.decision(row)); }

// ---------------------------------------------------------------------------
// Logistic regression

double logistic_objective(const Matrix& x, const Labels& y, const std::vector<double>& weights, double bias, double l2) {
    double total = 0.5 * l2 * norm2(weights);
    for (std::size_t i = 0; i < x.size(); ++i) total += softplus(-sign_of(y[i]) * (dot(weights, x[i]) + bias));
    return total;
}

std::vector<double> logistic_gradient(const Matrix& x, const Labels& y, const std::vector<double>& weights, double bias,
                                      double l2) {
    const std::size_t d = weights.size();
    std::vector<double> grad(d + 1, 0.0);
    for (std::size_t j = 0; j < d; ++j) grad[j] = l2 * weights[j];
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = sign_of(y[i]);
        // d/dz softplus(-s z) = -s * sigmoid(-s z)
        const double coef = -s * sigmoid(-s * (dot(weights, x[i]) + bias));
        const auto& row = x[i];
        for (std::size_t j = 0; j < d; ++j) {
            if (row[j] != 0.0) grad[j] += coef * row[j];
        }
        grad[d] += coef;
    }
    return grad;
}

LinearModel train_logistic(const Matrix& x, const Labels& y, const LogisticOptions& options) {
    check_binary_input(x, y);
    const std::size_t d = x.front().size();
    std::vector<double> theta(d + 1, 0.0);  // weights then bias
    auto split = [&](const std::vector<double>& t) {
        return std::pair{std::vector<double>(t.begin(), t.end() - 1), t.back()};
    };
    auto objective = [&](const std::vector<double>& t) {
        auto [w, b] = split(t);
        return logistic_objective(x, y, w, b, options.l2);
    };
    auto gradient = [&](const std::vector<double>& t) {
        auto [w, b] = split(t);
        return logistic_gradient(x, y, w, b, options.l2);
    };

    double f = objective(theta);
    std::vector<double> g = gradient(theta);
    // Initial step from a curvature bound: 0.25 * sum |x_i|^2 + l2.
    double curvature = options.l2;
    for (const auto& row : x) curvature += 0.25 * (norm2(row) + 1.0);
    double step = 1.0 / curvature;

    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        const double gnorm2 = norm2(g);
        if (std::sqrt(gnorm2) <= options.tolerance) break;
        std::vector<double> next(theta.size());
        double f_next = 0.0;
        double t = step;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t j = 0; j < theta.size(); ++j) next[j] = theta[j] - t * g[j];
            f_next = objective(next);
            if (f_next <= f - 1e-4 * t * gnorm2) break;
            t *= 0.5;
        }
        if (!(f_next <= f)) break;  // no progress possible at machine precision
        std::vector<double> g_next = gradient(next);
        double sy = 0.0, ss = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double s = next[j] - theta[j];
            sy += s * (g_next[j] - g[j]);
            ss += s * s;
        }
        step = sy > 0.0 ? ss / sy : 2.0 * t;
        theta = std::move(next);
        g = std::move(g_next);
        f = f_next;
    }

    LinearModel model;
    model.kind = LinearKind::Logistic;
    model.regularization = options.l2;
    std::tie(model.weights, model.bias) = split(theta);
    return model;
}

// ---------------------------------------------------------------------------
// Linear SVM

double svm_objective(const Matrix& x, const Labels& y, const std::vector<double>& weights, double bias, double c) {
    double total = 0.5 * norm2(weights);
    for (std::size_t i = 0; i < x.size(); ++i) {
        total += c * std::max(0.0, 1.0 - sign_of(y[i]) * (dot(weights, x[i]) + bias));
    }
    return total;
}

LinearModel train_linear_svm(const Matrix& x, const Labels& y, const SvmOptions& options) {
    check_binary_input(x, y);
    const std::size_t d = x.front().size();
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    double f = svm_objective(x, y, w, b, options.c);
    if (options.objective_trace) options.objective_trace->assign(1, f);

    // Plain subgradient steps can raise the objective, so the best iterate is kept.
    std::vector<double> best_w = w;
    double best_b = b;
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        std::vector<double> gw = w;
        double gb = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = sign_of(y[i]);
            if (s * (dot(w, x[i]) + b) < 1.0) {
                for (std::size_t j = 0; j < d; ++j) gw[j] -= options.c * s * x[i][j];
                gb -= options.c * s;
            }
        }
        const double gnorm = std::sqrt(norm2(gw) + gb * gb);
        if (gnorm == 0.0) {
            if (options.objective_trace) options.objective_trace->push_back(f);
            break;
        }
        const double t = options.step / std::sqrt(static_cast<double>(epoch));
        for (std::size_t j = 0; j < d; ++j) w[j] -= t * gw[j] / gnorm;
        b -= t * gb / gnorm;
        const double f_now = svm_objective(x, y, w, b, options.c);
        if (f_now < f) {
            f = f_now;
            best_w = w;
            best_b = b;
        }
        if (options.objective_trace) options.objective_trace->push_back(f);
    }
    w = std::move(best_w);
    b = best_b;

    LinearModel model;
    model.kind = LinearKind::LinearSvm;
    model.regularization = options.c;
    model.weights = std::move(w);
    model.bias = b;
    return model;
}

// ---------------------------------------------------------------------------
// Naive Bayes

NaiveBayesModel train_naive_bayes(const Matrix& counts, const Labels& y, double alpha) {
    check_binary_input(counts, y);
    if (!(alpha > 0.0)) throw Error(ErrorKind::BadModel, "naive Bayes smoothing alpha must be positive");
    const std::size_t d = counts.front().size();
    NaiveBayesModel model;
    model.alpha = alpha;
    std::array<double, 2> docs{};
    std::array<std::vector<double>, 2> totals{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto c = static_cast<std::size_t>(y[i]);
        docs[c] += 1.0;
        for (std::size_t j = 0; j < d; ++j) totals[c][j] += counts[i][j];
    }
    const double n = docs[0] + docs[1];
    for (std::size_t c = 0; c < 2; ++c) {
        model.class_log_prior[c] = std::log(docs[c] / n);
        const double mass = std::accumulate(totals[c].begin(), totals[c].end(), 0.0) + alpha * static_cast<double>(d);
        model.feature_log_prob[c].resize(d);
        for (std::size_t j = 0; j < d; ++j) model.feature_log_prob[c][j] = std::log((totals[c][j] + alpha) / mass);
    }
    return model;
}

std::array<double, 2> nb_posterior(const NaiveBayesModel& model, const std::vector<double>& x) {
    std::array<double, 2> joint{};
    for (std::size_t c = 0; c < 2; ++c) {
        joint[c] = model.class_log_prior[c];
        for (std::size_t j = 0; j < x.size() && j < model.feature_log_prob[c].size(); ++j) {
            joint[c] += x[j] * model.feature_log_prob[c][j];
        }
    }
    const double m = std::max(joint[0], joint[1]);
    const double z = std::exp(joint[0] - m) + std::exp(joint[1] - m);
    return {std::exp(joint[0] - m) / z, std::exp(joint[1] - m) / z};
}

int predict(const NaiveBayesModel& model, const std::vector<double>& row) {
    const auto p = nb_posterior(model, row);
    return p[1] > p[0] ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Decision tree

double gini(std::size_t negatives, std::size_t positives) {
    const double n = static_cast<double>(negatives + positives);
    if (n == 0.0) return 0.0;
    const double p0 = static_cast<double>(negatives) / n;
    const double p1 = static_cast<double>(positives) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

namespace {

constexpr double kMinGain = 1e-12;

int grow(DecisionTreeModel& tree, const Matrix& x, const Labels& y, const std::vector<std::size_t>& idx, int depth) {
    TreeNode node;
    for (std::size_t i : idx) ++node.counts[static_cast<std::size_t>(y[i])];
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);

    const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
    if (pure || depth >= tree.max_depth || idx.size() < 2 * static_cast<std::size_t>(tree.min_leaf)) return id;

    const double parent = gini(node.counts[0], node.counts[1]);
    const double n = static_cast<double>(idx.size());
    double best_gain = kMinGain;
    int best_feature = -1;
    double best_threshold = 0.0;
    const std::size_t d = x.front().size();
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<double> values;
        values.reserve(idx.size());
        for (std::size_t i : idx) values.push_back(x[i][f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double threshold = 0.5 * (values[v] + values[v + 1]);
            std::array<std::size_t, 2> left{}, right{};
            for (std::size_t i : idx) {
                auto& side = x[i][f] <= threshold ? left : right;
                ++side[static_cast<std::size_t>(y[i])];
            }
            const std::size_t nl = left[0] + left[1];
            const std::size_t nr = right[0] + right[1];
            if (nl < static_cast<std::size_t>(tree.min_leaf) || nr < static_cast<std::size_t>(tree.min_leaf)) continue;
            const double gain = parent - (static_cast<double>(nl) / n) * gini(left[0], left[1]) -
                                (static_cast<double>(nr) / n) * gini(right[0], right[1]);
            if (gain > best_gain + kMinGain || (best_feature < 0 && gain > kMinGain)) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = threshold;
            }
        }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    const int left = grow(tree, x, y, left_idx, depth + 1);
    const int right = grow(tree, x, y, right_idx, depth + 1);
    TreeNode& self = tree.nodes[static_cast<std::size_t>(id)];
    self.feature = best_feature;
    self.threshold = best_threshold;
    self.left = left;
    self.right = right;
    return id;
}

}  // namespace

DecisionTreeModel train_decision_tree(const Matrix& x, const Labels& y, const TreeOptions& options) {
    check_binary_input(x, y);
    DecisionTreeModel tree;
    tree.max_depth = options.max_depth;
    tree.min_leaf = std::max(1, options.min_leaf);
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    grow(tree, x, y, idx, 0);
    return tree;
}

int predict(const DecisionTreeModel& model, const std::vector<double>& row) {
    if (model.nodes.empty()) return 0;
    int id = 0;
    while (model.nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const TreeNode& node = model.nodes[static_cast<std::size_t>(id)];
        const double v = static_cast<std::size_t>(node.feature) < row.size() ? row[static_cast<std::size_t>(node.feature)] : 0.0;
        id = v <= node.threshold ? node.left : node.right;
    }
    const TreeNode& leaf = model.nodes[static_cast<std::size_t>(id)];
    return leaf.counts[1] > leaf.counts[0] ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Folds

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        // Rejection sampling keeps the draw unbiased and independent of the standard library.
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r = rng();
        while (r >= limit) r = rng();
        std::swap(items[i - 1], items[static_cast<std::size_t>(r % bound)]);
    }
}

std::vector<std::vector<std::size_t>> stratified_folds(const Labels& y, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > y.size()) {
        throw Error(ErrorKind::TooFewSamples, fmt::format("cannot make {} folds from {} samples", k, y.size()));
    }
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] == 1 ? 1 : 0].push_back(i);
    seeded_shuffle(by_class[0], seed);
    seeded_shuffle(by_class[1], seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t next = 0;
    for (const auto& members : by_class) {
        for (std::size_t i : members) folds[next++ % folds.size()].push_back(i);
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void require_version(const nlohmann::json& doc, std::string_view type) {
    if (!doc.contains("version") || doc["version"].get<int>() != kModelFormatVersion) {
        throw Error(ErrorKind::BadModel, fmt::format("unsupported model version (expected {})", kModelFormatVersion));
    }
    if (doc.value("type", "") != type) {
        throw Error(ErrorKind::BadModel, fmt::format("expected model type '{}', got '{}'", type, doc.value("type", "")));
    }
}

}  // namespace

nlohmann::json to_json(const LinearModel& model) {
    const bool logistic = model.kind == LinearKind::Logistic;
    return {{"version", kModelFormatVersion},
            {"type", logistic ? "logistic" : "linear_svm"},
            {"feature_names", model.feature_names},
            {"weights", model.weights},
            {"bias", model.bias},
            {"hyperparameters", {{logistic ? "l2" : "c", model.regularization}}}};
}

nlohmann::json to_json(const NaiveBayesModel& model) {
    return {{"version", kModelFormatVersion},
            {"type", "naive_bayes"},
            {"feature_names", model.feature_names},
            {"class_log_prior", model.class_log_prior},
            {"feature_log_prob", model.feature_log_prob},
            {"hyperparameters", {{"alpha", model.alpha}}}};
}

nlohmann::json to_json(const DecisionTreeModel& model) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : model.nodes) {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}, {"counts", n.counts}});
    }
    return {{"version", kModelFormatVersion},
            {"type", "decision_tree"},
            {"feature_names", model.feature_names},
            {"nodes", nodes},
            {"hyperparameters", {{"max_depth", model.max_depth}, {"min_leaf", model.min_leaf}}}};
}

LinearModel linear_model_from_json(const nlohmann::json& doc) {
    const std::string type = doc.value("type", "");
    require_version(doc, type == "linear_svm" ? "linear_svm" : "logistic");
    try {
        LinearModel model;
        model.kind = type == "linear_svm" ? LinearKind::LinearSvm : LinearKind::Logistic;
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.weights = doc.at("weights").get<std::vector<double>>();
        model.bias = doc.at("bias").get<double>();
        const auto& hp = doc.at("hyperparameters");
        model.regularization = hp.value(model.kind == LinearKind::Logistic ? "l2" : "c", 1.0);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadModel, e.what());
    }
}

NaiveBayesModel naive_bayes_from_json(const nlohmann::json& doc) {
    require_version(doc, "naive_bayes");
    try {
        NaiveBayesModel model;
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.class_log_prior = doc.at("class_log_prior").get<std::array<double, 2>>();
        model.feature_log_prob = doc.at("feature_log_prob").get<std::array<std::vector<double>, 2>>();
        model.alpha = doc.at("hyperparameters").value("alpha", 1.0);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadModel, e.what());
    }
}

DecisionTreeModel decision_tree_from_json(const nlohmann::json& doc) {
    require_version(doc, "decision_tree");
    try {
        DecisionTreeModel model;
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        for (const auto& n : doc.at("nodes")) {
            TreeNode node;
            node.feature = n.at("feature").get<int>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<int>();
            node.right = n.at("right").get<int>();
            node.counts = n.at("counts").get<std::array<std::size_t, 2>>();
            model.nodes.push_back(node);
        }
        model.max_depth = doc.at("hyperparameters").value("max_depth", 3);
        model.min_leaf = doc.at("hyperparameters").value("min_leaf", 1);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadModel, e.what());
    }
}

}  // namespace cohort::ml
