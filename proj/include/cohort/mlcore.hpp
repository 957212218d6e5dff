#pragma once

#include "cohort/error.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

namespace cohort::ml {

/// Dense row-major feature matrix; one row per sample.
using Matrix = std::vector<std::vector<double>>;
/// Binary labels: 1 = met (positive class), 0 = not met.
using Labels = std::vector<int>;

void check_binary_input(const Matrix& x, const Labels& y);

// ---------------------------------------------------------------------------
// Linear models

enum class LinearKind { Logistic, LinearSvm };

struct LinearModel {
    LinearKind kind = LinearKind::Logistic;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<std::string> feature_names;
    double regularization = 1.0;  // l2 for logistic, C for the SVM

    double decision(const std::vector<double>& row) const;
};

int predict(const LinearModel& model, const std::vector<double>& row);
/// Logistic probability of the positive class.
double predict_proba(const LinearModel& model, const std::vector<double>& row);

struct LogisticOptions {
    double l2 = 1.0;
    int max_epochs = 20000;
    double tolerance = 1e-6;  // on the gradient norm
};

/// Objective: sum of per-sample negative log-likelihoods + (l2 / 2) * |w|^2 (bias unpenalized).
double logistic_objective(const Matrix& x, const Labels& y, const std::vector<double>& weights, double bias, double l2);
/// Analytic gradient of logistic_objective; the last element is d/d(bias).
std::vector<double> logistic_gradient(const Matrix& x, const Labels& y, const std::vector<double>& weights, double bias,
                                      double l2);

/// Full-batch gradient descent from zero weights (Barzilai-Borwein steps with an Armijo
/// safeguard) until the gradient norm falls below the tolerance.
LinearModel train_logistic(const Matrix& x, const Labels& y, const LogisticOptions& options = {});

struct SvmOptions {
    double c = 1.0;
    int epochs = 500;
    double step = 1.0;
    /// When set, receives the objective after initialization and after every epoch.
    std::vector<double>* objective_trace = nullptr;
};

/// 0.5 * |w|^2 + C * sum of hinge losses.
double svm_objective(const Matrix& x, const Labels& y, const std::vector<double>& weights, double bias, double c);

/// Deterministic subgradient descent on the primal with step length step/sqrt(epoch) along
/// the normalized subgradient; a step is halved until the objective does not increase.
LinearModel train_linear_svm(const Matrix& x, const Labels& y, const SvmOptions& options = {});

// ---------------------------------------------------------------------------
// Multinomial naive Bayes

struct NaiveBayesModel {
    std::array<double, 2> class_log_prior{};
    std::array<std::vector<double>, 2> feature_log_prob;
    double alpha = 1.0;
    std::vector<std::string> feature_names;
};

NaiveBayesModel train_naive_bayes(const Matrix& counts, const Labels& y, double alpha = 1.0);
/// Posterior {P(not met | x), P(met | x)}.
std::array<double, 2> nb_posterior(const NaiveBayesModel& model, const std::vector<double>& x);
int predict(const NaiveBayesModel& model, const std::vector<double>& row);

// ---------------------------------------------------------------------------
// Decision tree (Gini)

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;   // x[feature] <= threshold
    int right = -1;  // x[feature] > threshold
    std::array<std::size_t, 2> counts{};
};

struct DecisionTreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_depth = 3;
    int min_leaf = 1;
    std::vector<std::string> feature_names;
};

struct TreeOptions {
    int max_depth = 3;
    int min_leaf = 1;
};

double gini(std::size_t negatives, std::size_t positives);
DecisionTreeModel train_decision_tree(const Matrix& x, const Labels& y, const TreeOptions& options = {});
int predict(const DecisionTreeModel& model, const std::vector<double>& row);

// ---------------------------------------------------------------------------
// Cross-validation

/// Portable deterministic Fisher-Yates shuffle driven by mt19937_64.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

/// Stratified folds: validation index sets, sizes differing by at most one.
std::vector<std::vector<std::size_t>> stratified_folds(const Labels& y, int k, std::uint64_t seed);

template <class Model>
struct CvResult {
    std::vector<Model> models;
    std::vector<std::vector<std::size_t>> folds;
    Labels predictions;  // out-of-fold prediction per sample
};

template <class Trainer>
auto kfold_cross_validate(Trainer&& train, const Matrix& x, const Labels& y, int k, std::uint64_t seed) {
    using Model = std::decay_t<std::invoke_result_t<Trainer&, const Matrix&, const Labels&>>;
    if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "feature rows and labels differ in length");
    if (k < 2 || static_cast<std::size_t>(k) > x.size()) {
        throw Error(ErrorKind::TooFewSamples, "k-fold needs 2 <= k <= number of samples");
    }
    CvResult<Model> result;
    result.folds = stratified_folds(y, k, seed);
    result.predictions.assign(x.size(), 0);
    std::vector<char> held_out(x.size());
    for (const auto& fold : result.folds) {
        std::fill(held_out.begin(), held_out.end(), 0);
        for (std::size_t i : fold) held_out[i] = 1;
        Matrix train_x;
        Labels train_y;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (held_out[i]) continue;
            train_x.push_back(x[i]);
            train_y.push_back(y[i]);
        }
        Model model = train(train_x, train_y);
        for (std::size_t i : fold) result.predictions[i] = predict(model, x[i]);
        result.models.push_back(std::move(model));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization (versioned JSON)

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const LinearModel& model);
nlohmann::json to_json(const NaiveBayesModel& model);
nlohmann::json to_json(const DecisionTreeModel& model);
LinearModel linear_model_from_json(const nlohmann::json& doc);
NaiveBayesModel naive_bayes_from_json(const nlohmann::json& doc);
DecisionTreeModel decision_tree_from_json(const nlohmann::json& doc);

}  // namespace cohort::ml
