#include "cohort/iels.hpp"

#include "cohort/error.hpp"
#include "cohort/strings.hpp"
#include "cohort/textproc.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace cohort::iels {

void IelsConfig::validate() const {
    if (max_ngram_order < 1 || max_ngram_order > static_cast<int>(kMaxNgramOrder)) {
        throw Error(ErrorKind::Config, fmt::format("max_ngram_order must be in [1,4], got {}", max_ngram_order));
    }
    if (folds < 2) throw Error(ErrorKind::Config, fmt::format("folds must be >= 2, got {}", folds));
    if (expansion_iterations < 0) throw Error(ErrorKind::Config, "expansion_iterations must be >= 0");
    if (min_doc_freq < 1) throw Error(ErrorKind::Config, "min_doc_freq must be >= 1");
}

std::vector<std::string> text_ngrams(std::string_view text, int max_order) {
    const auto tokens = tokenize(text);
    const auto sentences = split_sentences(text, tokens);
    std::vector<std::string> out;
    std::vector<std::string> words;
    for (const Sentence& s : sentences) {
        words.clear();
        for (std::size_t t = s.token_begin; t < s.token_end; ++t) {
            const std::string& w = tokens[t].text;
            if (std::any_of(w.begin(), w.end(), [](char c) { return is_word_char(c); })) words.push_back(to_lower(w));
        }
        for (std::size_t i = 0; i < words.size(); ++i) {
            std::string gram;
            for (int n = 1; n <= max_order && i + static_cast<std::size_t>(n) <= words.size(); ++n) {
                if (n > 1) gram.push_back(' ');
                gram += words[i + static_cast<std::size_t>(n) - 1];
                out.push_back(gram);
            }
        }
    }
    return out;
}

NgramFeatures build_ngram_features(const std::vector<PatientRecord>& records, CriterionId criterion,
                                   const IelsConfig& config) {
    config.validate();
    std::vector<std::unordered_map<std::string, double>> per_record;
    NgramFeatures out;
    for (const PatientRecord& r : records) {
        const auto gold = r.gold.find(criterion);
        if (gold == r.gold.end()) {
            throw Error(ErrorKind::NoGoldLabels,
                        fmt::format("patient {} has no gold label for {}", r.patient_id, display_name(criterion)));
        }
        out.y.push_back(gold->second == Label::Met ? 1 : 0);
        auto& counts = per_record.emplace_back();
        for (const ClinicalNote& note : r.notes) {
            for (std::string& g : text_ngrams(note.text, config.max_ngram_order)) counts[std::move(g)] += 1.0;
        }
    }
    std::map<std::string, int> doc_freq;
    for (const auto& counts : per_record) {
        for (const auto& [g, c] : counts) ++doc_freq[g];
    }
    std::unordered_map<std::string, std::size_t> column;
    for (const auto& [g, df] : doc_freq) {
        if (df < config.min_doc_freq) continue;
        column.emplace(g, out.names.size());
        out.names.push_back(g);
    }
    for (const auto& counts : per_record) {
        std::vector<double> row(out.names.size(), 0.0);
        for (const auto& [g, c] : counts) {
            if (const auto it = column.find(g); it != column.end()) row[it->second] = c;
        }
        out.x.push_back(std::move(row));
    }
    return out;
}

CvCoefficients average_cv_coefficients(const ml::Matrix& x, const ml::Labels& y, const IelsConfig& config) {
    ml::check_binary_input(x, y);
    const ml::LogisticOptions options{config.l2};
    auto cv = ml::kfold_cross_validate([&](const ml::Matrix& tx, const ml::Labels& ty) { return ml::train_logistic(tx, ty, options); },
                                       x, y, config.folds, config.seed);
    CvCoefficients out;
    out.folds = std::move(cv.folds);
    out.average.assign(x.front().size(), 0.0);
    for (const auto& model : cv.models) {
        for (std::size_t j = 0; j < out.average.size(); ++j) out.average[j] += model.weights[j];
        out.fold_weights.push_back(model.weights);
    }
    for (double& v : out.average) v /= static_cast<double>(cv.models.size());
    return out;
}

std::vector<double> default_grid(const std::vector<double>& coefficients) {
    std::vector<double> mags;
    mags.reserve(coefficients.size());
    for (double c : coefficients) mags.push_back(std::fabs(c));
    std::sort(mags.begin(), mags.end());
    std::set<double> grid;
    if (mags.empty()) return {};
    const double top = mags.back();
    for (int i = 1; i <= 9; ++i) {
        // Linear interpolation between order statistics.
        const double pos = (static_cast<double>(i) / 10.0) * static_cast<double>(mags.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, mags.size() - 1);
        grid.insert(mags[lo] + (pos - static_cast<double>(lo)) * (mags[hi] - mags[lo]));
    }
    for (int i = 0; i <= 9; ++i) grid.insert(top * static_cast<double>(i) / 10.0);
    return {grid.begin(), grid.end()};
}

int stub_predict(const std::vector<double>& coefficients, const std::vector<std::size_t>& kept,
                 const std::vector<double>& row) {
    double score = 0.0;
    for (std::size_t j : kept) {
        if (row[j] > 0.0) score += coefficients[j] > 0.0 ? 1.0 : (coefficients[j] < 0.0 ? -1.0 : 0.0);
    }
    return score > 0.0 ? 1 : 0;
}

namespace {

std::vector<std::size_t> kept_above(const std::vector<double>& coefficients, double threshold) {
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
        if (std::fabs(coefficients[j]) > threshold) kept.push_back(j);
    }
    return kept;
}

double f1(double tp, double fp, double fn) {
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

// Mean of the met and not-met F1 scores.
double overall_f(const ml::Labels& gold, const ml::Labels& predicted) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == 1) (predicted[i] == 1 ? tp : fn) += 1;
        else (predicted[i] == 1 ? fp : tn) += 1;
    }
    return 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
}

}  // namespace

ThresholdChoice select_threshold(const CvCoefficients& cv, const ml::Matrix& x, const ml::Labels& y,
                                 const IelsConfig& config) {
    std::vector<double> grid;
    if (config.coef_threshold) grid = {*config.coef_threshold};
    else if (!config.grid.empty()) grid = config.grid;
    else grid = default_grid(cv.average);
    if (grid.empty()) throw Error(ErrorKind::EmptyGrid, "no candidate coefficient thresholds");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    ThresholdChoice best;
    double best_score = -1.0;
    for (double t : grid) {
        double total = 0.0;
        for (std::size_t f = 0; f < cv.folds.size(); ++f) {
            const auto& weights = cv.fold_weights[f];
            const auto kept = kept_above(weights, t);
            ml::Labels gold, predicted;
            for (std::size_t i : cv.folds[f]) {
                gold.push_back(y[i]);
                predicted.push_back(stub_predict(weights, kept, x[i]));
            }
            total += overall_f(gold, predicted);
        }
        const double score = cv.folds.empty() ? 0.0 : total / static_cast<double>(cv.folds.size());
        best.cv_scores.emplace_back(t, score);
        if (score >= best_score) {  // ascending grid: ties move to the larger threshold
            best_score = score;
            best.threshold = t;
        }
    }
    best.kept = kept_above(cv.average, best.threshold);
    return best;
}

std::vector<LexTerm> expand_terms(const std::vector<LexTerm>& kept, const EmbeddingTable& table, const IelsConfig& config) {
    std::set<std::string> present;
    for (const LexTerm& t : kept) present.insert(normalize_phrase(t.text));
    std::vector<std::string> frontier;
    for (const LexTerm& t : kept) frontier.push_back(normalize_phrase(t.text));

    std::vector<LexTerm> added;
    for (int iter = 0; iter < config.expansion_iterations && !frontier.empty(); ++iter) {
        std::map<std::string, LexTerm> round;
        for (const std::string& term : frontier) {
            if (!table.vector_for(term)) {
                spdlog::info("no embedding for '{}', not expanded", term);
                continue;
            }
            for (const auto& [token, sim] : table.neighbors(term, config.sim_threshold, config.neighbors_k_max)) {
                std::string text = token;
                std::replace(text.begin(), text.end(), table.phrase_joiner(), ' ');
                text = normalize_phrase(text);
                if (text.empty() || word_count(text) > kMaxNgramOrder || present.contains(text)) continue;
                auto [it, fresh] = round.try_emplace(text, LexTerm{text, sim, term});
                if (!fresh && sim > *it->second.weight) it->second = LexTerm{text, sim, term};
            }
        }
        frontier.clear();
        for (auto& [text, t] : round) {
            present.insert(text);
            frontier.push_back(text);
            added.push_back(std::move(t));
        }
    }
    std::stable_sort(added.begin(), added.end(), [](const LexTerm& a, const LexTerm& b) {
        if (*a.weight != *b.weight) return *a.weight > *b.weight;
        return a.text < b.text;
    });
    return added;
}

IelsResult curate_lexicon(const std::vector<PatientRecord>& records, CriterionId criterion, const EmbeddingTable* table,
                          const IelsConfig& config) {
    const NgramFeatures features = build_ngram_features(records, criterion, config);
    if (features.names.empty()) throw Error(ErrorKind::TooFewSamples, "no n-gram reaches the minimum document frequency");
    const CvCoefficients cv = average_cv_coefficients(features.x, features.y, config);
    const ThresholdChoice choice = select_threshold(cv, features.x, features.y, config);

    IelsResult result;
    result.chosen_threshold = choice.threshold;
    result.cv_scores = choice.cv_scores;
    result.seed = config.seed;
    result.feature_count = features.names.size();
    for (std::size_t j : choice.kept) result.internal_terms.push_back(LexTerm{features.names[j], cv.average[j], std::nullopt});
    std::stable_sort(result.internal_terms.begin(), result.internal_terms.end(), [](const LexTerm& a, const LexTerm& b) {
        return std::fabs(*a.weight) > std::fabs(*b.weight);
    });
    if (table) result.expanded_terms = expand_terms(result.internal_terms, *table, config);
    return result;
}

std::vector<Lexicon> to_lexicons(const IelsResult& result, const std::string& base, SemanticType type) {
    std::map<std::string, bool> positive;  // term -> polarity of its chain root
    for (const LexTerm& t : result.internal_terms) positive[t.text] = *t.weight > 0.0;
    // Expanded terms are sorted by similarity, not by depth, so resolve roots until stable.
    for (bool changed = true; changed;) {
        changed = false;
        for (const LexTerm& t : result.expanded_terms) {
            if (positive.contains(t.text) || !t.neighbors_of) continue;
            const auto seed = positive.find(*t.neighbors_of);
            if (seed == positive.end()) continue;
            positive[t.text] = seed->second;
            changed = true;
        }
    }

    Lexicon pos(base + "_pos", type, Polarity::Positive, Provenance::IelsInternal);
    Lexicon neg(base + "_neg", type, Polarity::Negative, Provenance::IelsInternal);
    Lexicon pos_x(base + "_pos_expanded", type, Polarity::Positive, Provenance::IelsExpanded);
    Lexicon neg_x(base + "_neg_expanded", type, Polarity::Negative, Provenance::IelsExpanded);
    for (const LexTerm& t : result.internal_terms) {
        if (*t.weight == 0.0) continue;
        (*t.weight > 0.0 ? pos : neg).add(t);
    }
    for (const LexTerm& t : result.expanded_terms) {
        const auto it = positive.find(t.text);
        if (it == positive.end()) continue;
        (it->second ? pos_x : neg_x).add(t);
    }
    std::vector<Lexicon> out;
    for (Lexicon* l : {&pos, &neg, &pos_x, &neg_x}) {
        if (l->size() > 0) out.push_back(std::move(*l));
    }
    return out;
}

}  // namespace cohort::iels
