#include "cohort/scoring.hpp"

#include "cohort/error.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace cohort {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

ConfusionCounts swap_classes(const ConfusionCounts& c) { return {c.tn, c.fn, c.fp, c.tp}; }

ConfusionCounts confusion(const std::vector<Label>& gold, const std::vector<Label>& system) {
    if (gold.size() != system.size()) {
        throw Error(ErrorKind::LengthMismatch, fmt::format("{} gold labels vs {} system labels", gold.size(), system.size()));
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i] == Label::Met;
        const bool s = system[i] == Label::Met;
        if (g && s) ++c.tp;
        else if (!g && s) ++c.fp;
        else if (g && !s) ++c.fn;
        else ++c.tn;
    }
    return c;
}

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

CriterionMetrics metrics_from_counts(const ConfusionCounts& c) {
    CriterionMetrics m;
    m.met.precision = ratio(c.tp, c.tp + c.fp);
    m.met.recall = ratio(c.tp, c.tp + c.fn);
    m.met.specificity = ratio(c.tn, c.tn + c.fp);
    m.met.f1 = harmonic(m.met.precision, m.met.recall);
    m.notmet.precision = ratio(c.tn, c.tn + c.fn);
    m.notmet.recall = ratio(c.tn, c.tn + c.fp);
    m.notmet.f1 = harmonic(m.notmet.precision, m.notmet.recall);
    m.overall_f1 = (m.met.f1 + m.notmet.f1) / 2.0;
    m.auc = (m.met.recall + m.notmet.recall) / 2.0;
    return m;
}

CriterionMetrics macro_average(const std::vector<CriterionMetrics>& rows) {
    CriterionMetrics m;
    if (rows.empty()) return m;
    for (const CriterionMetrics& r : rows) {
        m.met.precision += r.met.precision;
        m.met.recall += r.met.recall;
        m.met.specificity += r.met.specificity;
        m.met.f1 += r.met.f1;
        m.notmet.precision += r.notmet.precision;
        m.notmet.recall += r.notmet.recall;
        m.notmet.f1 += r.notmet.f1;
        m.overall_f1 += r.overall_f1;
        m.auc += r.auc;
    }
    const double n = static_cast<double>(rows.size());
    for (double* v : {&m.met.precision, &m.met.recall, &m.met.specificity, &m.met.f1, &m.notmet.precision,
                      &m.notmet.recall, &m.notmet.f1, &m.overall_f1, &m.auc}) {
        *v /= n;
    }
    return m;
}

MetricsReport aggregate(const std::map<CriterionId, ConfusionCounts>& counts) {
    MetricsReport report;
    ConfusionCounts pooled;
    std::vector<CriterionMetrics> rows;
    for (CriterionId id : kAllCriteria) {
        const auto it = counts.find(id);
        if (it == counts.end()) throw Error(ErrorKind::MissingCriterion, fmt::format("no counts for {}", display_name(id)));
        report.counts[id] = it->second;
        report.per_criterion[id] = metrics_from_counts(it->second);
        rows.push_back(report.per_criterion[id]);
        pooled += it->second;
    }
    report.micro = metrics_from_counts(pooled);
    report.macro = macro_average(rows);
    return report;
}

std::map<CriterionId, ConfusionCounts> count_records(const std::vector<PatientRecord>& gold,
                                                     const std::vector<PatientRecord>& system) {
    std::map<std::string, const PatientRecord*> by_id;
    for (const PatientRecord& r : system) by_id[r.patient_id] = &r;
    std::map<CriterionId, ConfusionCounts> counts;
    for (CriterionId id : kAllCriteria) counts[id] = {};
    for (const PatientRecord& g : gold) {
        const auto it = by_id.find(g.patient_id);
        if (it == by_id.end()) {
            throw Error(ErrorKind::MissingCriterion, fmt::format("patient {} missing from system output", g.patient_id));
        }
        for (const auto& [id, label] : g.gold) {
            const auto s = it->second->gold.find(id);
            if (s == it->second->gold.end()) {
                throw Error(ErrorKind::MissingCriterion,
                            fmt::format("patient {}: system output lacks {}", g.patient_id, tag_name(id)));
            }
            counts[id] += confusion({label}, {s->second});
        }
    }
    return counts;
}

namespace {

std::string row(std::string_view name, const CriterionMetrics& m) {
    return fmt::format("{:>18}  {:.4f}  {:.4f}  {:.4f}  {:.4f}    {:.4f}  {:.4f}  {:.4f}    {:.4f}  {:.4f}\n", name,
                       m.met.precision, m.met.recall, m.met.specificity, m.met.f1, m.notmet.precision, m.notmet.recall,
                       m.notmet.f1, m.overall_f1, m.auc);
}

nlohmann::ordered_json metrics_json(const CriterionMetrics& m) {
    return {{"met", {{"precision", m.met.precision}, {"recall", m.met.recall}, {"specificity", m.met.specificity}, {"f1", m.met.f1}}},
            {"notmet", {{"precision", m.notmet.precision}, {"recall", m.notmet.recall}, {"f1", m.notmet.f1}}},
            {"overall_f1", m.overall_f1},
            {"auc", m.auc}};
}

}  // namespace

std::string format_report(const MetricsReport& report) {
    std::string out = fmt::format("{:>18}  {:-^30}    {:-^22}    {:-^14}\n", "", " met ", " not met ", " overall ");
    out += fmt::format("{:>18}  {:>6}  {:>6}  {:>6}  {:>6}    {:>6}  {:>6}  {:>6}    {:>6}  {:>6}\n", "", "Prec.", "Rec.",
                       "Speci.", "F(b=1)", "Prec.", "Rec.", "F(b=1)", "F(b=1)", "AUC");
    for (const auto& [id, m] : report.per_criterion) out += row(display_name(id), m);
    out += fmt::format("{:>18}  {:-^30}    {:-^22}    {:-^14}\n", "", "", "", "");
    out += row("Overall (micro)", report.micro);
    out += row("Overall (macro)", report.macro);
    return out;
}

nlohmann::ordered_json report_to_json(const MetricsReport& report) {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json criteria = nlohmann::ordered_json::object();
    for (const auto& [id, m] : report.per_criterion) {
        const ConfusionCounts& c = report.counts.at(id);
        auto entry = metrics_json(m);
        entry["counts"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
        criteria[std::string(display_name(id))] = std::move(entry);
    }
    doc["criteria"] = std::move(criteria);
    doc["micro"] = metrics_json(report.micro);
    doc["macro"] = metrics_json(report.macro);
    return doc;
}

}  // namespace cohort
