#include "cohort/error.hpp"
#include "cohort/scoring.hpp"
#include "table2.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace cohort;

namespace {

std::map<CriterionId, ConfusionCounts> table_counts() {
    std::map<CriterionId, ConfusionCounts> out;
    for (const auto& row : table2::rows()) out[row.id] = row.counts;
    return out;
}

}  // namespace

TEST(Confusion, Basic) {
    EXPECT_EQ(confusion({Label::Met, Label::NotMet}, {Label::Met, Label::Met}), (ConfusionCounts{1, 1, 0, 0}));
    const std::vector<Label> v = {Label::Met, Label::NotMet, Label::NotMet};
    const auto c = confusion(v, v);
    EXPECT_EQ(c.fp, 0);
    EXPECT_EQ(c.fn, 0);
    EXPECT_EQ(c.total(), 3);
    EXPECT_THROW(confusion({Label::Met}, {}), Error);
}

TEST(Confusion, PermutationInvariant) {
    std::vector<Label> g, s;
    for (int i = 0; i < 30; ++i) {
        g.push_back(i % 3 == 0 ? Label::Met : Label::NotMet);
        s.push_back(i % 4 == 0 ? Label::Met : Label::NotMet);
    }
    const auto before = confusion(g, s);
    std::vector<std::size_t> order(g.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
    std::vector<Label> g2, s2;
    for (std::size_t i : order) {
        g2.push_back(g[i]);
        s2.push_back(s[i]);
    }
    EXPECT_EQ(confusion(g2, s2), before);
}

TEST(Metrics, SwapTwiceIsIdentity) {
    const ConfusionCounts c{3, 5, 7, 11};
    EXPECT_EQ(swap_classes(swap_classes(c)), c);
}

TEST(Metrics, ZeroOverZeroIsZero) {
    const auto m = metrics_from_counts({0, 0, 0, 86});
    EXPECT_EQ(m.met.precision, 0.0);
    EXPECT_EQ(m.met.recall, 0.0);
    EXPECT_EQ(m.met.f1, 0.0);
    EXPECT_EQ(m.met.specificity, 1.0);
    EXPECT_EQ(m.overall_f1, 0.5);
}

TEST(Metrics, AbdominalRowFromCounts) {
    const auto& row = table2::rows()[0];
    const auto got = table2::flatten(metrics_from_counts(row.counts));
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(got[i], row.shown[i], 5e-4) << "column " << i;
}

TEST(Metrics, EveryTableRowFromCounts) {
    for (const auto& row : table2::rows()) {
        EXPECT_EQ(row.counts.total(), 86);
        const auto got = table2::flatten(metrics_from_counts(row.counts));
        for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(got[i], row.shown[i], 5e-4) << display_name(row.id) << " column " << i;
    }
}

TEST(Metrics, Invariants) {
    for (const auto& row : table2::rows()) {
        const auto m = metrics_from_counts(row.counts);
        EXPECT_NEAR(m.overall_f1, (m.met.f1 + m.notmet.f1) / 2, 1e-15);
        EXPECT_NEAR(m.auc, (m.met.recall + m.notmet.recall) / 2, 1e-15);
        for (double v : table2::flatten(m)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Aggregate, MacroOfDisplayedValues) {
    std::vector<CriterionMetrics> shown;
    for (const auto& row : table2::rows()) shown.push_back(table2::unflatten(row.shown));
    const auto macro = macro_average(shown);
    EXPECT_NEAR(macro.overall_f1, 0.7759, 5e-4);
    EXPECT_NEAR(macro.met.precision, 0.6976, 5e-4);
}

TEST(Aggregate, MicroAndMacroFromCounts) {
    const auto report = aggregate(table_counts());
    const auto micro = table2::flatten(report.micro);
    const auto macro = table2::flatten(report.macro);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_NEAR(micro[i], table2::kMicro[i], 5e-4) << "micro column " << i;
        EXPECT_NEAR(macro[i], table2::kMacro[i], 5e-4) << "macro column " << i;
    }
    double sum = 0.0;
    for (const auto& [id, m] : report.per_criterion) sum += m.overall_f1;
    EXPECT_NEAR(report.macro.overall_f1, sum / 13.0, 1e-12);
}

TEST(Aggregate, AllPerfect) {
    std::map<CriterionId, ConfusionCounts> counts;
    for (CriterionId id : kAllCriteria) counts[id] = {5, 0, 0, 5};
    const auto report = aggregate(counts);
    for (double v : table2::flatten(report.micro)) EXPECT_EQ(v, 1.0);
    for (double v : table2::flatten(report.macro)) EXPECT_EQ(v, 1.0);
}

TEST(Aggregate, MissingCriterion) {
    auto counts = table_counts();
    counts.erase(CriterionId::Keto1yr);
    try {
        aggregate(counts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingCriterion);
    }
}

TEST(Report, TableLayout) {
    const std::string text = format_report(aggregate(table_counts()));
    EXPECT_NE(text.find("Abdominal  0.9231  0.8000  0.9643  0.8571    0.9000  0.9643  0.9310    0.8941  0.8821"), std::string::npos)
        << text;
    EXPECT_NE(text.find("Overall (micro)"), std::string::npos);
    EXPECT_NE(text.find("Overall (macro)"), std::string::npos);
}

TEST(Report, Json) {
    const auto doc = report_to_json(aggregate(table_counts()));
    EXPECT_NEAR(doc["criteria"]["Abdominal"]["overall_f1"].get<double>(), 0.8941, 5e-4);
    EXPECT_EQ(doc["criteria"]["Abdominal"]["counts"]["tp"], 24);
    EXPECT_NEAR(doc["micro"]["overall_f1"].get<double>(), 0.9003, 5e-4);
}

TEST(CountRecords, PairsByPatient) {
    PatientRecord g1 = cohort::testing::single_note("a", Date{2090, 1, 1}, "p1");
    PatientRecord g2 = cohort::testing::single_note("b", Date{2090, 1, 1}, "p2");
    g1.gold = {{CriterionId::Abdominal, Label::Met}};
    g2.gold = {{CriterionId::Abdominal, Label::NotMet}};
    PatientRecord s1 = g1, s2 = g2;
    s2.gold[CriterionId::Abdominal] = Label::Met;
    const auto counts = count_records({g1, g2}, {s2, s1});
    EXPECT_EQ(counts.at(CriterionId::Abdominal), (ConfusionCounts{1, 1, 0, 0}));
    try {
        count_records({g1, g2}, {s1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingCriterion);
        EXPECT_NE(std::string(e.what()).find("p2"), std::string::npos);
    }
}
