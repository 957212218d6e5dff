#pragma once

#include "cohort/record_io.hpp"
#include "cohort/types.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace cohort {

/// 2x2 counts with Met as the positive class.
struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    long total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o);
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Same counts with not met as the positive class.
ConfusionCounts swap_classes(const ConfusionCounts& c);

struct MetMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
};

struct NotMetMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct CriterionMetrics {
    MetMetrics met;
    NotMetMetrics notmet;
    double overall_f1 = 0.0;
    double auc = 0.0;
};

ConfusionCounts confusion(const std::vector<Label>& gold, const std::vector<Label>& system);

/// Ratios use 0 for 0/0.
CriterionMetrics metrics_from_counts(const ConfusionCounts& c);

struct MetricsReport {
    std::map<CriterionId, ConfusionCounts> counts;
    std::map<CriterionId, CriterionMetrics> per_criterion;
    CriterionMetrics micro;
    CriterionMetrics macro;
};

/// Column-wise unweighted mean.
CriterionMetrics macro_average(const std::vector<CriterionMetrics>& rows);

/// Requires all 13 criteria; throws MissingCriterion.
MetricsReport aggregate(const std::map<CriterionId, ConfusionCounts>& counts);

/// Pairs gold and system records by patient id. Throws MissingCriterion when a system
/// record lacks a patient or a criterion present in the gold set.
std::map<CriterionId, ConfusionCounts> count_records(const std::vector<PatientRecord>& gold,
                                                     const std::vector<PatientRecord>& system);

/// Fixed-width table in the challenge score layout, 4 decimals.
std::string format_report(const MetricsReport& report);
nlohmann::ordered_json report_to_json(const MetricsReport& report);

}  // namespace cohort
