#pragma once

#include "cohort/embeddings.hpp"
#include "cohort/lexicon.hpp"
#include "cohort/mlcore.hpp"
#include "cohort/record_io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cohort::iels {

struct IelsConfig {
    int max_ngram_order = 4;
    int folds = 5;
    /// Fixed coefficient threshold; unset means pick one from the grid by cross-validation.
    std::optional<double> coef_threshold;
    double sim_threshold = 0.6;
    int expansion_iterations = 2;
    int min_doc_freq = 2;
    /// Candidate thresholds; empty means the default grid (see default_grid).
    std::vector<double> grid;
    std::size_t neighbors_k_max = 25;
    double l2 = 1.0;
    std::uint64_t seed = 20180101;

    /// Throws Config on out-of-range values.
    void validate() const;
};

struct NgramFeatures {
    ml::Matrix x;                     // one row per record, n-gram counts
    std::vector<std::string> names;   // sorted
    ml::Labels y;                     // 1 = met
};

/// Lowercased word n-grams (1..max order) inside sentences, pooled over a patient's notes.
/// Punctuation tokens are dropped before n-grams are formed. Throws NoGoldLabels.
NgramFeatures build_ngram_features(const std::vector<PatientRecord>& records, CriterionId criterion,
                                   const IelsConfig& config);

/// Sentence-level word n-grams of one text (no frequency filtering), in order of occurrence.
std::vector<std::string> text_ngrams(std::string_view text, int max_order);

struct CvCoefficients {
    std::vector<double> average;                  // aligned with the feature names
    std::vector<std::vector<double>> fold_weights;
    std::vector<std::vector<std::size_t>> folds;  // validation indices per fold
};

/// Trains one logistic model per stratified fold and averages the coefficient vectors.
CvCoefficients average_cv_coefficients(const ml::Matrix& x, const ml::Labels& y, const IelsConfig& config);

/// Quantile deciles (0.1..0.9) of |coef| together with i/10 * max|coef| for i = 0..9, ascending.
std::vector<double> default_grid(const std::vector<double>& coefficients);

struct ThresholdChoice {
    double threshold = 0.0;
    std::vector<std::size_t> kept;  // feature indices with |avg coef| > threshold
    std::vector<std::pair<double, double>> cv_scores;  // (threshold, mean held-out overall F)
};

/// Signed-presence stub classifier: sum of sign(coef) over kept features present in `row`.
int stub_predict(const std::vector<double>& coefficients, const std::vector<std::size_t>& kept,
                 const std::vector<double>& row);

/// Scores every grid threshold with the stub classifier on held-out folds (each fold uses its
/// own model's coefficients) and returns the best; ties go to the larger threshold.
/// Throws EmptyGrid.
ThresholdChoice select_threshold(const CvCoefficients& cv, const ml::Matrix& x, const ml::Labels& y,
                                 const IelsConfig& config);

/// Iteratively adds embedding neighbors of the current terms. Each added term records its
/// parent in `neighbors_of` and the similarity to it in `weight`. Sorted by similarity.
std::vector<LexTerm> expand_terms(const std::vector<LexTerm>& kept, const EmbeddingTable& table,
                                  const IelsConfig& config);

struct IelsResult {
    std::vector<LexTerm> internal_terms;  // weight = averaged coefficient
    std::vector<LexTerm> expanded_terms;  // weight = similarity to neighbors_of
    double chosen_threshold = 0.0;
    std::vector<std::pair<double, double>> cv_scores;
    std::uint64_t seed = 0;
    std::size_t feature_count = 0;
};

IelsResult curate_lexicon(const std::vector<PatientRecord>& records, CriterionId criterion,
                          const EmbeddingTable* table, const IelsConfig& config);

/// Splits a result into lexicons named `<base>_pos`, `<base>_neg` (internal terms) and
/// `<base>_pos_expanded`, `<base>_neg_expanded`. Expanded terms inherit the polarity of the
/// internal term their seed chain starts from. Empty lexicons are omitted.
std::vector<Lexicon> to_lexicons(const IelsResult& result, const std::string& base, SemanticType type);

}  // namespace cohort::iels
