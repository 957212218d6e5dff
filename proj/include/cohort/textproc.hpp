#pragma once

#include "cohort/date.hpp"
#include "cohort/lexicon.hpp"
#include "cohort/temporal.hpp"
#include "cohort/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cohort {

struct Token {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
};

struct Sentence {
    std::size_t token_begin = 0;
    std::size_t token_end = 0;
    Span span;
};

struct Section {
    SectionKind kind = SectionKind::Other;
    std::size_t sentence_begin = 0;
    std::size_t sentence_end = 0;
    std::string header;  // raw header label, empty for leading material
};

struct Dose {
    double value = 0.0;
    std::string unit;
    std::string frequency;
};

struct Entity {
    Span span;
    std::size_t token_begin = 0;
    std::size_t token_end = 0;
    std::size_t sentence = 0;
    std::string surface;
    SemanticType semantic_type = SemanticType::Problem;
    std::string source_lexicon;
    Assertion assertion = Assertion::Present;
    SectionKind section = SectionKind::Other;
    /// Dosage entities: the parsed dose. Drug entities: the dose attached to them, if any.
    std::optional<Dose> dose;
    /// Dosage entities: span of the drug mention the dose attaches to.
    std::optional<Span> attached_to;
};

enum class Specimen : std::uint8_t { Serum, Urine, Unknown };
std::string_view to_string(Specimen specimen);

struct ReferenceRange {
    double low = 0.0;
    double high = 0.0;
};

struct LabResult {
    std::string test_name;  // canonical, e.g. "creatinine"
    double value = 0.0;
    std::string unit;
    std::optional<ReferenceRange> reference_range;
    Specimen specimen = Specimen::Unknown;
    Span span;
};

/// Positive urine-ketone finding ("UA: ketones positive").
struct KetoneCue {
    Span span;
    std::size_t sentence = 0;
};

// ---------------------------------------------------------------------------
// Resources

/// Maps normalized header labels ("pmh", "past medical history") to section kinds.
class SectionSynonyms {
public:
    SectionSynonyms() = default;
    void add(std::string_view surface, SectionKind kind);
    std::optional<SectionKind> lookup(std::string_view label) const;
    bool empty() const { return table_.empty(); }

private:
    std::unordered_map<std::string, SectionKind> table_;
};

enum class TriggerKind : std::uint8_t { PreNegation, PostNegation, Hypothetical, Family, Historical, Cessation, Terminator };

struct TriggerSet {
    /// Lowercased token sequences per trigger kind.
    std::map<TriggerKind, std::vector<std::vector<std::string>>> triggers;
    std::size_t window = 6;

    void add(std::string_view surface, TriggerKind kind);
};

/// Lab-name surface forms mapped to canonical test names.
using LabNameTable = std::vector<std::pair<std::string, std::string>>;

struct TextResources {
    SectionSynonyms sections;
    TriggerSet triggers;
    LabNameTable lab_names;
};

/// Reads a `surface<TAB>canonical` resource file. Blank lines and `#` comments are skipped.
std::vector<std::pair<std::string, std::string>> read_tsv_resource(const std::filesystem::path& path);

/// Loads section_synonyms.tsv, assertion_triggers.tsv and lab_names.tsv from `dir`.
TextResources load_text_resources(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Operations

std::vector<Token> tokenize(std::string_view text);

/// Lowercased tokens joined by single spaces; the key used for dictionary matching.
std::string token_key(std::string_view text);

std::vector<Sentence> split_sentences(std::string_view text, const std::vector<Token>& tokens,
                                      const SectionSynonyms& synonyms = {});

std::vector<Section> identify_sections(std::string_view text, const std::vector<Token>& tokens,
                                       const std::vector<Sentence>& sentences, const SectionSynonyms& synonyms);

/// Section kind owning sentence `index`.
SectionKind section_of(const std::vector<Section>& sections, std::size_t sentence_index);

/// Assertion status for the entity occupying tokens [entity_begin, entity_end) of `sentence`.
Assertion detect_assertion(const std::vector<Token>& tokens, const Sentence& sentence, std::size_t entity_begin,
                           std::size_t entity_end, SectionKind section, const TriggerSet& triggers);

/// Lexicon compiled for token-sequence matching.
class LexiconMatcher {
public:
    explicit LexiconMatcher(const Lexicon& lexicon);

    const Lexicon& lexicon() const { return *lexicon_; }
    /// Longest-first, then leftmost, non-overlapping matches as token ranges within [begin, end).
    std::vector<std::pair<std::size_t, std::size_t>> find(const std::vector<Token>& tokens, std::size_t begin,
                                                          std::size_t end) const;

private:
    const Lexicon* lexicon_;
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_first_token_;
};

std::vector<Entity> tag_entities(std::string_view text, const std::vector<Token>& tokens,
                                 const std::vector<Sentence>& sentences, const std::vector<Section>& sections,
                                 const std::vector<LexiconMatcher>& lexicons, const TriggerSet& triggers);

/// Finds doses in sentence `sentence_index` and attaches each to the nearest preceding
/// Drug entity within five tokens (setting that entity's `dose`).
std::vector<Entity> extract_dosages(std::string_view text, const std::vector<Token>& tokens,
                                    const std::vector<Sentence>& sentences, std::size_t sentence_index,
                                    std::vector<Entity>& entities, SectionKind section);

std::vector<LabResult> extract_lab_results(std::string_view text, const std::vector<Section>& sections,
                                           const std::vector<Sentence>& sentences, const LabNameTable& lab_names);

std::vector<KetoneCue> extract_ketone_cues(std::string_view text, const std::vector<Section>& sections,
                                           const std::vector<Sentence>& sentences);

// ---------------------------------------------------------------------------

struct AnnotatedNote {
    std::size_t note_index = 0;
    Date record_date;
    std::string text;
    std::vector<Token> tokens;
    std::vector<Sentence> sentences;
    std::vector<Section> sections;
    std::vector<Entity> entities;  // sorted by span, dosage entities included
    std::vector<LabResult> lab_results;
    std::vector<KetoneCue> ketone_cues;
    std::vector<Timex> timexes;
    std::vector<std::size_t> timex_sentence;  // sentence index per timex

    SectionKind section_of_sentence(std::size_t sentence_index) const { return section_of(sections, sentence_index); }
    std::size_t sentence_at(std::size_t char_offset) const;
    /// Timex in the same sentence nearest to `span`, if any.
    const Timex* nearest_timex(std::size_t sentence_index, const Span& span) const;
};

/// Runs the full preprocessing pipeline over notes with a fixed set of lexicons.
class Annotator {
public:
    Annotator(TextResources resources, const std::vector<Lexicon>& lexicons);
    // Matchers point into lexicons_, so copies would dangle.
    Annotator(const Annotator&) = delete;
    Annotator& operator=(const Annotator&) = delete;
    Annotator(Annotator&&) = default;
    Annotator& operator=(Annotator&&) = default;

    AnnotatedNote annotate(std::string_view text, Date record_date, std::size_t note_index = 0) const;

    const TextResources& resources() const { return resources_; }

private:
    TextResources resources_;
    std::vector<Lexicon> lexicons_;
    std::vector<LexiconMatcher> matchers_;
};

}  // namespace cohort
