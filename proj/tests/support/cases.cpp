#include "cases.hpp"

#include "cohort/temporal.hpp"
#include "test_util.hpp"

namespace cohort::testing {

const std::vector<ResolveCase>& resolve_cases() {
    static const std::vector<ResolveCase> cases = {
        {"9 months ago", Date{2089, 11, 15}, Date{2089, 2, 15}},
        {"3/78", Date{2078, 6, 1}, Date{2078, 3, 1}},
        {"1 month ago", Date{2080, 3, 31}, Date{2080, 2, 29}},
        {"1 month ago", Date{2081, 3, 31}, Date{2081, 2, 28}},
        {"2 weeks ago", Date{2090, 1, 10}, Date{2089, 12, 27}},
        {"3 days ago", Date{2090, 3, 1}, Date{2090, 2, 26}},
        {"2 years ago", Date{2092, 2, 29}, Date{2090, 2, 28}},
        {"11/99", Date{2100, 2, 1}, Date{2099, 11, 1}},
        {"2/01", Date{2099, 12, 1}, Date{2101, 2, 1}},
        {"2084-07-04", Date{2090, 1, 1}, Date{2084, 7, 4}},
        {"7/4/2084", Date{2090, 1, 1}, Date{2084, 7, 4}},
        {"12/2079", Date{2090, 1, 1}, Date{2079, 12, 1}},
        {"last week", Date{2090, 1, 10}, Date{2090, 1, 3}},
        {"yesterday", Date{2090, 1, 1}, Date{2089, 12, 31}},
    };
    return cases;
}

std::optional<Date> resolve_text(std::string_view text, const Date& anchor) {
    const auto timexes = extract_timexes(text);
    if (timexes.size() != 1) return std::nullopt;
    return resolve(timexes[0], anchor);
}

const std::vector<Evidence>& negation_evidence() {
    static const std::vector<Evidence> evidence = {
        {CriterionId::Abdominal, "small bowel obstruction"},
        {CriterionId::AdvancedCad, "reversible ischemia and MI"},
        {CriterionId::AlcoholAbuse, "alcohol abuse"},
        {CriterionId::Creatinine, "elevated creatinine"},
        {CriterionId::Dietsupp2mos, "fish oil"},
        {CriterionId::DrugAbuse, "cocaine use"},
        {CriterionId::English, "an interpreter"},
        {CriterionId::Keto1yr, "DKA"},
        {CriterionId::Mi6mos, "an NSTEMI"},
        {CriterionId::MajorDiabetes, "diabetic retinopathy"},
        {CriterionId::AspForMi, "aspirin 81 mg after MI"},
    };
    return evidence;
}

Label default_label(CriterionId id) {
    return id == CriterionId::English || id == CriterionId::MakesDecisions ? Label::Met : Label::NotMet;
}

Label hpi_label(std::string_view sentence, CriterionId id) {
    const std::string text = "HISTORY OF PRESENT ILLNESS:\n" + std::string(sentence) + "\n";
    return label_of(shared_engine().evaluate(single_note(text, Date{2090, 6, 15})), id);
}

std::vector<DominanceResult> negation_dominance() {
    std::vector<DominanceResult> out;
    for (const auto& [id, phrase] : negation_evidence()) {
        out.push_back({id, hpi_label(std::string("The patient has ") + phrase + ".", id),
                       hpi_label(std::string("The patient denies ") + phrase + ".", id)});
    }
    return out;
}

}  // namespace cohort::testing
