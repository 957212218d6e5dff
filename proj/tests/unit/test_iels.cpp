#include "cohort/error.hpp"
#include "cohort/iels.hpp"
#include "cohort/strings.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace cohort;
using namespace cohort::iels;

namespace {

const synth::PlantedCorpus& planted() {
    static const synth::PlantedCorpus corpus = synth::planted_corpus();
    return corpus;
}

struct PlantedRun {
    NgramFeatures features;
    CvCoefficients cv;
};

const PlantedRun& planted_run() {
    static const PlantedRun run = [] {
        PlantedRun r;
        IelsConfig config;
        r.features = build_ngram_features(planted().records, planted().criterion, config);
        r.cv = average_cv_coefficients(r.features.x, r.features.y, config);
        return r;
    }();
    return run;
}

double coef_of(const PlantedRun& run, const std::string& name) {
    const auto it = std::lower_bound(run.features.names.begin(), run.features.names.end(), name);
    if (it == run.features.names.end() || *it != name) throw std::runtime_error("no feature " + name);
    return run.cv.average[static_cast<std::size_t>(it - run.features.names.begin())];
}

PatientRecord labeled(std::string id, std::string text, Label label) {
    PatientRecord r = cohort::testing::single_note(text, Date{2090, 1, 1}, std::move(id));
    r.gold[CriterionId::AlcoholAbuse] = label;
    return r;
}

std::set<std::string> texts_of(const std::vector<LexTerm>& terms) {
    std::set<std::string> out;
    for (const LexTerm& t : terms) out.insert(t.text);
    return out;
}

// a -> b -> c with cos 0.9 per hop and cos(a, c) = 0.3 (angles in the plane).
EmbeddingTable chain_table() {
    EmbeddingTable t(2);
    const double hop = std::acos(0.9);
    t.add("a", {1.0f, 0.0f});
    t.add("b", {static_cast<float>(std::cos(hop)), static_cast<float>(std::sin(hop))});
    const double c_angle = std::acos(0.3);
    t.add("c", {static_cast<float>(std::cos(c_angle)), static_cast<float>(std::sin(c_angle))});
    return t;
}

}  // namespace

TEST(Ngrams, StayInsideSentences) {
    const auto grams = text_ngrams("Alcohol abuse noted. Quit drinking.", 4);
    const std::set<std::string> s(grams.begin(), grams.end());
    EXPECT_TRUE(s.contains("alcohol abuse noted"));
    EXPECT_TRUE(s.contains("quit drinking"));
    EXPECT_FALSE(s.contains("noted quit"));
    EXPECT_FALSE(s.contains("."));
}

TEST(Ngrams, FiveWordsGiveOnlyShorterGrams) {
    const auto grams = text_ngrams("one two three four five", 4);
    EXPECT_EQ(grams.size(), 5u + 4u + 3u + 2u);
    for (const auto& g : grams) EXPECT_LE(word_count(g), 4u);
}

TEST(Ngrams, SharedBigramIsOneColumn) {
    IelsConfig config;
    config.min_doc_freq = 1;
    config.max_ngram_order = 2;
    const auto f = build_ngram_features({labeled("a", "alcohol abuse alcohol abuse", Label::Met),
                                         labeled("b", "no alcohol abuse", Label::NotMet)},
                                        CriterionId::AlcoholAbuse, config);
    const auto it = std::find(f.names.begin(), f.names.end(), "alcohol abuse");
    ASSERT_NE(it, f.names.end());
    EXPECT_EQ(std::count(f.names.begin(), f.names.end(), "alcohol abuse"), 1);
    const auto j = static_cast<std::size_t>(it - f.names.begin());
    EXPECT_DOUBLE_EQ(f.x[0][j], 2.0);
    EXPECT_DOUBLE_EQ(f.x[1][j], 1.0);
    EXPECT_EQ(f.y, (ml::Labels{1, 0}));
    EXPECT_TRUE(std::is_sorted(f.names.begin(), f.names.end()));
}

TEST(Ngrams, MinDocFreqFilters) {
    IelsConfig config;
    config.max_ngram_order = 1;
    const auto f = build_ngram_features({labeled("a", "shared only", Label::Met), labeled("b", "shared rare", Label::NotMet)},
                                        CriterionId::AlcoholAbuse, config);
    EXPECT_EQ(f.names, (std::vector<std::string>{"shared"}));
}

TEST(Ngrams, UnlabeledInputIsRejected) {
    try {
        build_ngram_features({cohort::testing::single_note("text")}, CriterionId::AlcoholAbuse, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoGoldLabels);
    }
}

TEST(CvCoefficients, PlantedTermsOutrankNoise) {
    const auto& run = planted_run();
    double worst_planted = INFINITY;
    for (const auto& term : planted().planted) worst_planted = std::min(worst_planted, std::fabs(coef_of(run, term)));
    double best_noise = 0.0;
    for (const auto& word : planted().noise) {
        const auto it = std::lower_bound(run.features.names.begin(), run.features.names.end(), word);
        if (it == run.features.names.end() || *it != word) continue;
        best_noise = std::max(best_noise, std::fabs(run.cv.average[static_cast<std::size_t>(it - run.features.names.begin())]));
    }
    EXPECT_GT(worst_planted, best_noise);
    // The full-data model agrees on sign.
    ml::LogisticOptions opts;
    const auto full = ml::train_logistic(run.features.x, run.features.y, opts);
    for (const auto& term : planted().planted) {
        const auto j = static_cast<std::size_t>(std::lower_bound(run.features.names.begin(), run.features.names.end(), term) -
                                                run.features.names.begin());
        EXPECT_GT(full.weights[j], 0.0) << term;
        EXPECT_GT(run.cv.average[j], 0.0) << term;
    }
}

TEST(CvCoefficients, ConstantFeatureStaysBelowInformative) {
    auto records = planted().records;
    for (auto& r : records) {
        r.notes.back().text += "\nconstantword.\n";
    }
    IelsConfig config;
    const auto f = build_ngram_features(records, planted().criterion, config);
    const auto cv = average_cv_coefficients(f.x, f.y, config);
    const auto idx = [&](const std::string& name) {
        return static_cast<std::size_t>(std::lower_bound(f.names.begin(), f.names.end(), name) - f.names.begin());
    };
    for (const auto& term : planted().planted) EXPECT_LT(std::fabs(cv.average[idx("constantword")]), std::fabs(cv.average[idx(term)]));
}

TEST(CvCoefficients, Deterministic) {
    const auto& run = planted_run();
    const auto again = average_cv_coefficients(run.features.x, run.features.y, IelsConfig{});
    EXPECT_EQ(again.average, run.cv.average);
    EXPECT_EQ(again.folds, run.cv.folds);
}

TEST(DefaultGrid, DecilesAndFractionsOfMax) {
    const auto grid = default_grid({-1.0, 0.5, 2.0, 0.0, 1.0});
    EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
    EXPECT_DOUBLE_EQ(grid.front(), 0.0);
    EXPECT_NE(std::find(grid.begin(), grid.end(), 1.8), grid.end());  // 9/10 of max
    EXPECT_LT(grid.back(), 2.0);
}

TEST(SelectThreshold, PlantedCorpusIsSeparatedOutOfFold) {
    const auto& run = planted_run();
    const auto choice = select_threshold(run.cv, run.features.x, run.features.y, IelsConfig{});
    double chosen_score = -1.0;
    for (const auto& [t, s] : choice.cv_scores) {
        if (t == choice.threshold) chosen_score = s;
    }
    EXPECT_DOUBLE_EQ(chosen_score, 1.0);
    std::set<std::string> kept;
    for (std::size_t j : choice.kept) kept.insert(run.features.names[j]);
    for (const auto& term : planted().planted) EXPECT_TRUE(kept.contains(term)) << term;
}

TEST(SelectThreshold, SingleCandidate) {
    const auto& run = planted_run();
    IelsConfig config;
    config.grid = {0.05};
    EXPECT_DOUBLE_EQ(select_threshold(run.cv, run.features.x, run.features.y, config).threshold, 0.05);
}

TEST(SelectThreshold, AllZeroCoefficients) {
    const auto& run = planted_run();
    CvCoefficients zero = run.cv;
    std::fill(zero.average.begin(), zero.average.end(), 0.0);
    for (auto& w : zero.fold_weights) std::fill(w.begin(), w.end(), 0.0);
    IelsConfig config;
    config.grid = {0.0, 0.1, 0.3};
    const auto choice = select_threshold(zero, run.features.x, run.features.y, config);
    EXPECT_TRUE(choice.kept.empty());
    EXPECT_DOUBLE_EQ(choice.threshold, 0.3);
}

TEST(SelectThreshold, EmptyGridThrows) {
    const auto& run = planted_run();
    CvCoefficients empty = run.cv;
    empty.average.clear();
    try {
        select_threshold(empty, run.features.x, run.features.y, IelsConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyGrid);
    }
}

TEST(StubPredict, SignedPresence) {
    const std::vector<double> coef = {1.0, -2.0, 0.5};
    EXPECT_EQ(stub_predict(coef, {0, 1, 2}, {1, 0, 0}), 1);
    EXPECT_EQ(stub_predict(coef, {0, 1, 2}, {1, 1, 0}), 0);
    EXPECT_EQ(stub_predict(coef, {0, 1, 2}, {1, 1, 3}), 1);
    EXPECT_EQ(stub_predict(coef, {1}, {1, 0, 1}), 0);
}

TEST(Expand, OneIteration) {
    EmbeddingTable t(3);
    t.add("ketoacidosis", {1.0f, 0.0f, 0.0f});
    t.add("dka", {0.9f, static_cast<float>(std::sqrt(0.19)), 0.0f});
    IelsConfig config;
    config.expansion_iterations = 1;
    const auto added = expand_terms({LexTerm{"ketoacidosis", 1.0, std::nullopt}}, t, config);
    ASSERT_EQ(added.size(), 1u);
    EXPECT_EQ(added[0].text, "dka");
    EXPECT_EQ(added[0].neighbors_of, "ketoacidosis");
    EXPECT_NEAR(*added[0].weight, 0.9, 1e-6);
}

TEST(Expand, ZeroIterations) {
    IelsConfig config;
    config.expansion_iterations = 0;
    EXPECT_TRUE(expand_terms({LexTerm{"a", 1.0, std::nullopt}}, chain_table(), config).empty());
}

TEST(Expand, ChainNeedsTwoIterations) {
    IelsConfig config;
    config.expansion_iterations = 1;
    EXPECT_EQ(texts_of(expand_terms({LexTerm{"a", 1.0, std::nullopt}}, chain_table(), config)), (std::set<std::string>{"b"}));
    config.expansion_iterations = 2;
    const auto added = expand_terms({LexTerm{"a", 1.0, std::nullopt}}, chain_table(), config);
    EXPECT_EQ(texts_of(added), (std::set<std::string>{"b", "c"}));
    for (const auto& t : added) {
        if (t.text == "c") EXPECT_EQ(t.neighbors_of, "b");
    }
}

TEST(Curate, PlantedCorpusWithEmbeddings) {
    EmbeddingTable table(2);
    table.add("xyloquent", {1.0f, 0.0f});
    table.add("xylocaine", {0.95f, static_cast<float>(std::sqrt(1 - 0.95 * 0.95))});
    table.add("unrelated", {0.0f, 1.0f});
    IelsConfig config;
    config.expansion_iterations = 1;
    const auto result = curate_lexicon(planted().records, planted().criterion, &table, config);
    const auto internal = texts_of(result.internal_terms);
    for (const auto& term : planted().planted) EXPECT_TRUE(internal.contains(term)) << term;
    ASSERT_EQ(result.expanded_terms.size(), 1u);
    EXPECT_EQ(result.expanded_terms[0].text, "xylocaine");
    EXPECT_EQ(result.expanded_terms[0].neighbors_of, "xyloquent");

    const auto lexicons = to_lexicons(result, "major_diabetes", SemanticType::Problem);
    std::set<std::string> names;
    for (const auto& l : lexicons) names.insert(l.name());
    EXPECT_TRUE(names.contains("major_diabetes_pos"));
    EXPECT_TRUE(names.contains("major_diabetes_pos_expanded"));
    for (const auto& l : lexicons) {
        if (l.name() == "major_diabetes_pos_expanded") EXPECT_EQ(l.provenance(), Provenance::IelsExpanded);
        if (l.name() == "major_diabetes_pos") EXPECT_EQ(l.provenance(), Provenance::IelsInternal);
    }
}

TEST(Curate, NoTableMeansNoExpansion) {
    IelsConfig config;
    config.coef_threshold = 0.1;
    const auto result = curate_lexicon(planted().records, planted().criterion, nullptr, config);
    EXPECT_TRUE(result.expanded_terms.empty());
    EXPECT_FALSE(result.internal_terms.empty());
}

TEST(Curate, LargerThresholdKeepsSubset) {
    IelsConfig low;
    low.coef_threshold = 0.05;
    IelsConfig high = low;
    high.coef_threshold = 0.2;
    const auto a = texts_of(curate_lexicon(planted().records, planted().criterion, nullptr, low).internal_terms);
    const auto b = texts_of(curate_lexicon(planted().records, planted().criterion, nullptr, high).internal_terms);
    EXPECT_LE(b.size(), a.size());
    for (const auto& t : b) EXPECT_TRUE(a.contains(t)) << t;
}

TEST(ToLexicons, ExpandedInheritRootPolarity) {
    IelsResult r;
    r.internal_terms = {LexTerm{"good", 1.0, std::nullopt}, LexTerm{"bad", -1.0, std::nullopt}};
    r.expanded_terms = {LexTerm{"great", 0.9, std::string("good")}, LexTerm{"awful", 0.8, std::string("bad")},
                        LexTerm{"terrible", 0.7, std::string("awful")}};
    const auto lex = to_lexicons(r, "x", SemanticType::Problem);
    ASSERT_EQ(lex.size(), 4u);
    EXPECT_EQ(lex[0].name(), "x_pos");
    EXPECT_EQ(lex[1].name(), "x_neg");
    EXPECT_EQ(lex[2].name(), "x_pos_expanded");
    EXPECT_EQ(lex[3].name(), "x_neg_expanded");
    EXPECT_TRUE(lex[3].contains("terrible"));
    EXPECT_EQ(lex[1].polarity(), Polarity::Negative);
}

TEST(IelsConfig, Validation) {
    IelsConfig c;
    c.max_ngram_order = 5;
    EXPECT_THROW(c.validate(), Error);
    c = IelsConfig{};
    c.folds = 1;
    EXPECT_THROW(c.validate(), Error);
    EXPECT_NO_THROW(IelsConfig{}.validate());
}
