#pragma once

// Independent reference computations for the classifier checks.

#include "cohort/mlcore.hpp"

#include <array>
#include <cstdint>

namespace cohort::oracle {

/// Largest relative error between logistic_gradient and a central finite difference of
/// logistic_objective over `points` random (weights, bias) points on a random dataset.
double logistic_gradient_max_rel_error(int points = 10, std::uint64_t seed = 11);

/// Two labeled count documents and a query.
struct NbFixture {
    ml::Matrix docs;
    ml::Labels y;
    std::vector<double> query;
};
NbFixture two_doc_fixture();

/// Posterior {P(not met), P(met)} by direct products of Laplace-smoothed word
/// probabilities, no logarithms.
std::array<double, 2> brute_force_nb_posterior(const NbFixture& f, double alpha);

/// Twelve labeled 2-D points.
struct TreeFixture {
    ml::Matrix x;
    ml::Labels y;
};
TreeFixture twelve_point_fixture();

/// Best training accuracy over every tree of depth <= 2 with midpoint thresholds.
double exhaustive_depth2_accuracy(const ml::Matrix& x, const ml::Labels& y);

double training_accuracy(const ml::DecisionTreeModel& model, const ml::Matrix& x, const ml::Labels& y);

}  // namespace cohort::oracle
