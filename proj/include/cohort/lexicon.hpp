#pragma once

#include "cohort/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cohort {

struct Entity;

enum class Polarity : std::uint8_t { Positive, Negative };
enum class Provenance : std::uint8_t { Manual, IelsInternal, IelsExpanded };

std::string_view to_string(Polarity polarity);
std::string_view to_string(Provenance provenance);

struct LexTerm {
    std::string text;              // lowercase, trimmed, single-spaced
    std::optional<double> weight;  // coefficient or similarity for IELS-derived terms
    std::optional<std::string> neighbors_of;

    friend bool operator==(const LexTerm&, const LexTerm&) = default;
};

inline constexpr std::size_t kMaxNgramOrder = 4;

/// Named term list of one semantic type. Terms are unique and kept in insertion order.
class Lexicon {
public:
    Lexicon() = default;
    Lexicon(std::string name, SemanticType type, Polarity polarity = Polarity::Positive,
            Provenance provenance = Provenance::Manual);

    const std::string& name() const { return name_; }
    SemanticType semantic_type() const { return type_; }
    Polarity polarity() const { return polarity_; }
    Provenance provenance() const { return provenance_; }
    const std::vector<LexTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }

    /// Normalizes and appends `term`. Returns false (and leaves the lexicon unchanged)
    /// when the normalized text is already present. Throws BadTerm on an empty term,
    /// more than four words, or a weight that disagrees with the provenance.
    bool add(LexTerm term);
    bool add(std::string_view text) { return add(LexTerm{std::string(text), std::nullopt, std::nullopt}); }
    bool contains(std::string_view text) const;

    friend bool operator==(const Lexicon&, const Lexicon&) = default;

private:
    std::string name_;
    SemanticType type_ = SemanticType::Problem;
    Polarity polarity_ = Polarity::Positive;
    Provenance provenance_ = Provenance::Manual;
    std::vector<LexTerm> terms_;
};

Lexicon parse_lexicon(std::string_view content, std::string_view origin = "<memory>");
Lexicon load_lexicon(const std::filesystem::path& path);
std::string format_lexicon(const Lexicon& lexicon);
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);

/// True iff one lowercased, trimmed string contains the other.
bool two_way_substring_match(std::string_view s1, std::string_view s2);

enum class MatchMode : std::uint8_t { Exact, TwoWaySubstring };

/// Minimum length of the shorter string for a two-way substring hit.
inline constexpr std::size_t kDefaultMinSubstringLength = 3;

/// Filters `entities` to those whose surface matches a lexicon term under `mode`.
std::vector<Entity> match_lexicon(const std::vector<Entity>& entities, const Lexicon& lexicon, MatchMode mode,
                                  std::size_t min_substring_length = kDefaultMinSubstringLength);

/// Single-surface form of match_lexicon.
bool matches_lexicon(std::string_view surface, const Lexicon& lexicon, MatchMode mode,
                     std::size_t min_substring_length = kDefaultMinSubstringLength);

}  // namespace cohort
