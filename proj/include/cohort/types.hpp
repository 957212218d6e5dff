#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cohort {

/// The thirteen eligibility criteria, in canonical (report) order.
enum class CriterionId : std::uint8_t {
    Abdominal,
    AdvancedCad,
    AlcoholAbuse,
    AspForMi,
    Creatinine,
    Dietsupp2mos,
    DrugAbuse,
    English,
    Hba1c,
    Keto1yr,
    MajorDiabetes,
    MakesDecisions,
    Mi6mos,
};

inline constexpr std::size_t kCriterionCount = 13;

inline constexpr std::array<CriterionId, kCriterionCount> kAllCriteria = {
    CriterionId::Abdominal,     CriterionId::AdvancedCad,   CriterionId::AlcoholAbuse,
    CriterionId::AspForMi,      CriterionId::Creatinine,    CriterionId::Dietsupp2mos,
    CriterionId::DrugAbuse,     CriterionId::English,       CriterionId::Hba1c,
    CriterionId::Keto1yr,       CriterionId::MajorDiabetes, CriterionId::MakesDecisions,
    CriterionId::Mi6mos,
};

/// Display name as used in score tables, e.g. "Advanced-cad".
std::string_view display_name(CriterionId id);
/// Tag name as used in patient files, e.g. "ADVANCED-CAD".
std::string tag_name(CriterionId id);
/// Case-insensitive lookup accepting either the display or the tag spelling.
std::optional<CriterionId> parse_criterion(std::string_view name);

enum class Label : std::uint8_t { NotMet, Met };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

enum class SectionKind : std::uint8_t {
    PastMedicalHistory,
    HistoryPresentIllness,
    SocialHistory,
    FamilyHistory,
    Medications,
    Labs,
    Allergies,
    Other,
};

std::string_view to_string(SectionKind kind);
std::optional<SectionKind> parse_section_kind(std::string_view text);

// Other covers lexicon-tagged cues that are not clinical concepts
// (languages, interpreter mentions).
enum class SemanticType : std::uint8_t { Problem, Drug, Treatment, LabTest, LabValue, Dosage, Other };

std::string_view to_string(SemanticType type);
std::optional<SemanticType> parse_semantic_type(std::string_view text);

enum class Assertion : std::uint8_t { Present, Absent, Hypothetical, Family, Historical };

std::string_view to_string(Assertion assertion);

/// Half-open character range into a note's text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
    friend bool operator==(const Span&, const Span&) = default;
    friend auto operator<=>(const Span&, const Span&) = default;
};

}  // namespace cohort
