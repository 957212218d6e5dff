#include "cohort/date.hpp"
#include "cohort/error.hpp"
#include "cohort/strings.hpp"
#include "cohort/types.hpp"

#include <fmt/format.h>

#include <charconv>

namespace cohort {

namespace {

constexpr std::array<std::string_view, kCriterionCount> kDisplayNames = {
    "Abdominal", "Advanced-cad",   "Alcohol-abuse", "Asp-for-mi",      "Creatinine",
    "Dietsupp-2mos", "Drug-abuse", "English",       "Hba1c",           "Keto-1yr",
    "Major-diabetes", "Makes-decisions", "Mi-6mos",
};

}  // namespace

std::string_view display_name(CriterionId id) { return kDisplayNames[static_cast<std::size_t>(id)]; }

std::string tag_name(CriterionId id) { return to_upper(display_name(id)); }

std::optional<CriterionId> parse_criterion(std::string_view name) {
    const std::string wanted = to_lower(trim(name));
    for (CriterionId id : kAllCriteria) {
        if (to_lower(display_name(id)) == wanted) return id;
    }
    return std::nullopt;
}

std::string_view to_string(Label label) { return label == Label::Met ? "met" : "not met"; }

std::optional<Label> parse_label(std::string_view text) {
    const std::string t = to_lower(trim(text));
    if (t == "met") return Label::Met;
    if (t == "not met") return Label::NotMet;
    return std::nullopt;
}

namespace {
constexpr std::array<std::pair<SectionKind, std::string_view>, 8> kSectionNames = {{
    {SectionKind::PastMedicalHistory, "PastMedicalHistory"},
    {SectionKind::HistoryPresentIllness, "HistoryPresentIllness"},
    {SectionKind::SocialHistory, "SocialHistory"},
    {SectionKind::FamilyHistory, "FamilyHistory"},
    {SectionKind::Medications, "Medications"},
    {SectionKind::Labs, "Labs"},
    {SectionKind::Allergies, "Allergies"},
    {SectionKind::Other, "Other"},
}};

constexpr std::array<std::pair<SemanticType, std::string_view>, 7> kTypeNames = {{
    {SemanticType::Problem, "Problem"},
    {SemanticType::Drug, "Drug"},
    {SemanticType::Treatment, "Treatment"},
    {SemanticType::LabTest, "LabTest"},
    {SemanticType::LabValue, "LabValue"},
    {SemanticType::Dosage, "Dosage"},
    {SemanticType::Other, "Other"},
}};
}  // namespace

std::string_view to_string(SectionKind kind) {
    for (const auto& [k, name] : kSectionNames) {
        if (k == kind) return name;
    }
    return "Other";
}

std::optional<SectionKind> parse_section_kind(std::string_view text) {
    const std::string t = to_lower(trim(text));
    for (const auto& [k, name] : kSectionNames) {
        if (to_lower(name) == t) return k;
    }
    return std::nullopt;
}

std::string_view to_string(SemanticType type) {
    for (const auto& [t, name] : kTypeNames) {
        if (t == type) return name;
    }
    return "Other";
}

std::optional<SemanticType> parse_semantic_type(std::string_view text) {
    const std::string t = to_lower(trim(text));
    for (const auto& [k, name] : kTypeNames) {
        if (to_lower(name) == t) return k;
    }
    return std::nullopt;
}

std::string_view to_string(Assertion assertion) {
    switch (assertion) {
        case Assertion::Present: return "Present";
        case Assertion::Absent: return "Absent";
        case Assertion::Hypothetical: return "Hypothetical";
        case Assertion::Family: return "Family";
        case Assertion::Historical: return "Historical";
    }
    return "Present";
}

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedHeader: return "MalformedHeader";
        case ErrorKind::EmptyRecord: return "EmptyRecord";
        case ErrorKind::UnknownCriterionTag: return "UnknownCriterionTag";
        case ErrorKind::MissingCriterion: return "MissingCriterion";
        case ErrorKind::BadHeader: return "BadHeader";
        case ErrorKind::BadTerm: return "BadTerm";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::TruncatedFile: return "TruncatedFile";
        case ErrorKind::UnknownTerm: return "UnknownTerm";
        case ErrorKind::SingleClassInput: return "SingleClassInput";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::NoGoldLabels: return "NoGoldLabels";
        case ErrorKind::EmptyGrid: return "EmptyGrid";
        case ErrorKind::MissingLexicon: return "MissingLexicon";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::BadModel: return "BadModel";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Config: return "Config";
    }
    return "Error";
}

// ---------------------------------------------------------------------------
// Date

std::optional<Date> Date::make(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::optional<Date> Date::parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [](std::string_view s, auto& out) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && ptr == s.data() + s.size();
    };
    if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d)) return std::nullopt;
    return make(y, m, d);
}

std::string Date::iso() const { return fmt::format("{:04d}-{:02d}-{:02d}", year(), month(), day()); }

Date Date::minus_months(int n) const {
    using namespace std::chrono;
    const year_month_day shifted = ymd_ - months{n};
    if (shifted.ok()) return Date{shifted};
    const year_month_day_last last{shifted.year(), month_day_last{shifted.month()}};
    return Date{year_month_day{last}};
}

}  // namespace cohort
