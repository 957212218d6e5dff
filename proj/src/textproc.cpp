#include "cohort/textproc.hpp"

#include "cohort/error.hpp"
#include "cohort/strings.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>

namespace cohort {

std::string_view to_string(Specimen specimen) {
    switch (specimen) {
        case Specimen::Serum: return "Serum";
        case Specimen::Urine: return "Urine";
        case Specimen::Unknown: return "Unknown";
    }
    return "Unknown";
}

// ---------------------------------------------------------------------------
// Resources

void SectionSynonyms::add(std::string_view surface, SectionKind kind) { table_[normalize_phrase(surface)] = kind; }

std::optional<SectionKind> SectionSynonyms::lookup(std::string_view label) const {
    std::string key = normalize_phrase(label);
    while (!key.empty() && (key.back() == ':' || key.back() == '.' || key.back() == ' ')) key.pop_back();
    const auto it = table_.find(key);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

void TriggerSet::add(std::string_view surface, TriggerKind kind) {
    std::vector<std::string> seq;
    for (const Token& t : tokenize(surface)) seq.push_back(to_lower(t.text));
    if (!seq.empty()) triggers[kind].push_back(std::move(seq));
}

std::vector<std::pair<std::string, std::string>> read_tsv_resource(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read resource '{}'", path.string()));
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorKind::Config, fmt::format("{}:{}: expected 'surface<TAB>canonical'", path.string(), line_no));
        }
        rows.emplace_back(std::string(trim(std::string_view(line).substr(0, tab))),
                          std::string(trim(std::string_view(line).substr(tab + 1))));
    }
    return rows;
}

namespace {

std::optional<TriggerKind> parse_trigger_kind(std::string_view text) {
    static const std::map<std::string, TriggerKind, std::less<>> kinds = {
        {"pre_negation", TriggerKind::PreNegation}, {"post_negation", TriggerKind::PostNegation},
        {"hypothetical", TriggerKind::Hypothetical}, {"family", TriggerKind::Family},
        {"historical", TriggerKind::Historical},     {"cessation", TriggerKind::Cessation},
        {"terminator", TriggerKind::Terminator},
    };
    const auto it = kinds.find(to_lower(text));
    if (it == kinds.end()) return std::nullopt;
    return it->second;
}

}  // namespace

TextResources load_text_resources(const std::filesystem::path& dir) {
    TextResources res;
    for (const auto& [surface, canonical] : read_tsv_resource(dir / "section_synonyms.tsv")) {
        const auto kind = parse_section_kind(canonical);
        if (!kind) throw Error(ErrorKind::Config, fmt::format("section_synonyms.tsv: unknown section kind '{}'", canonical));
        res.sections.add(surface, *kind);
    }
    for (const auto& [surface, canonical] : read_tsv_resource(dir / "assertion_triggers.tsv")) {
        const auto kind = parse_trigger_kind(canonical);
        if (!kind) throw Error(ErrorKind::Config, fmt::format("assertion_triggers.tsv: unknown trigger kind '{}'", canonical));
        res.triggers.add(surface, *kind);
    }
    res.lab_names = read_tsv_resource(dir / "lab_names.tsv");
    return res;
}

// ---------------------------------------------------------------------------
// Tokens and sentences

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        if (is_word_char(c)) {
            while (j < n) {
                if (is_word_char(text[j])) {
                    ++j;
                } else if ((text[j] == '.' || text[j] == '/' || text[j] == '-') && is_digit(text[j - 1]) && j + 1 < n &&
                           is_digit(text[j + 1])) {
                    ++j;
                } else {
                    break;
                }
            }
        }
        tokens.push_back(Token{std::string(text.substr(i, j - i)), i, j});
        i = j;
    }
    return tokens;
}

std::string token_key(std::string_view text) {
    std::string key;
    for (const Token& t : tokenize(text)) {
        if (!key.empty()) key.push_back(' ');
        key += to_lower(t.text);
    }
    return key;
}

namespace {

const std::set<std::string, std::less<>>& abbreviations() {
    static const std::set<std::string, std::less<>> abbrev = {"dr", "mr", "mrs", "ms", "jr", "sr", "st", "vs", "mg",
                                                              "mcg", "ml", "oz", "approx"};
    return abbrev;
}

struct LineInfo {
    std::size_t begin = 0;
    std::size_t end = 0;
};

LineInfo line_around(std::string_view text, std::size_t offset) {
    LineInfo info;
    const std::size_t prev = offset == 0 ? std::string_view::npos : text.rfind('\n', offset - 1);
    info.begin = prev == std::string_view::npos ? 0 : prev + 1;
    const std::size_t next = text.find('\n', offset);
    info.end = next == std::string_view::npos ? text.size() : next;
    return info;
}

struct HeaderInfo {
    bool standalone = false;  // the whole line is a header
    bool inline_label = false;  // "PMH: CAD, HTN"
    std::string label;
    std::size_t colon = 0;  // absolute offset of the inline label's colon
};

std::optional<HeaderInfo> header_of_line(std::string_view text, const LineInfo& line, const SectionSynonyms& synonyms) {
    const std::string_view raw = text.substr(line.begin, line.end - line.begin);
    const std::string_view t = trim(raw);
    if (t.empty()) return std::nullopt;
    HeaderInfo info;
    if (t.size() <= 60 && is_alpha(t.front())) {
        if (t.back() == ':') {
            info.standalone = true;
            info.label = std::string(trim(t.substr(0, t.size() - 1)));
            return info;
        }
        std::size_t letters = 0;
        bool lower = false;
        for (char c : t) {
            if (is_alpha(c)) {
                ++letters;
                if (std::islower(static_cast<unsigned char>(c))) lower = true;
            }
        }
        if (letters >= 2 && !lower) {
            info.standalone = true;
            info.label = std::string(t);
            return info;
        }
    }
    if (synonyms.empty()) return std::nullopt;
    static const std::regex inline_label(R"(^\s*([A-Za-z][A-Za-z /&'()\-]{0,40}?)\s*:)");
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(raw.begin(), raw.end(), m, inline_label) && synonyms.lookup(m[1].str())) {
        info.inline_label = true;
        info.label = m[1].str();
        info.colon = line.begin + static_cast<std::size_t>(m.position(0) + m.length(0)) - 1;
        return info;
    }
    return std::nullopt;
}

bool is_list_marker(const std::vector<Token>& tokens, std::size_t i) {
    const std::string& t = tokens[i].text;
    if (t == "-" || t == "*" || t == "+" || t == "\xE2\x80\xA2") return true;
    if (t.size() <= 2 && std::all_of(t.begin(), t.end(), is_digit) && i + 1 < tokens.size() &&
        tokens[i + 1].start == tokens[i].end && (tokens[i + 1].text == "." || tokens[i + 1].text == ")")) {
        return true;
    }
    return false;
}

}  // namespace

std::vector<Sentence> split_sentences(std::string_view text, const std::vector<Token>& tokens,
                                      const SectionSynonyms& synonyms) {
    const std::size_t n = tokens.size();
    std::vector<Sentence> sentences;
    if (n == 0) return sentences;

    std::vector<bool> cut_before(n, false);
    std::vector<bool> cut_after(n, false);
    std::vector<bool> keep_period(n, false);  // '.' of a numbered list marker

    std::size_t current_line_begin = std::string_view::npos;
    std::optional<HeaderInfo> current_header;
    for (std::size_t i = 0; i < n; ++i) {
        const Token& tok = tokens[i];
        const std::size_t gap_begin = i == 0 ? 0 : tokens[i - 1].end;
        const std::string_view gap = text.substr(gap_begin, tok.start - gap_begin);
        const auto newlines = static_cast<std::size_t>(std::count(gap.begin(), gap.end(), '\n'));
        const bool line_start = i == 0 || newlines > 0;
        const LineInfo line = line_around(text, tok.start);
        if (line.begin != current_line_begin) {
            current_line_begin = line.begin;
            current_header = header_of_line(text, line, synonyms);
        }
        if (newlines >= 2) cut_before[i] = true;
        if (line_start) {
            if (current_header) cut_before[i] = true;
            if (is_list_marker(tokens, i)) {
                cut_before[i] = true;
                if (i + 1 < n && tokens[i + 1].text == ".") keep_period[i + 1] = true;
            }
        }
        const bool last_on_line = i + 1 == n || tokens[i + 1].start > line.end;
        if (current_header && current_header->standalone && last_on_line) cut_after[i] = true;
        if (current_header && current_header->inline_label && tok.start == current_header->colon) cut_after[i] = true;
        if (tok.text == "!" || tok.text == "?") cut_after[i] = true;
        if (tok.text == "." && !keep_period[i]) {
            const bool abbreviation = i > 0 && tokens[i - 1].end == tok.start &&
                                      abbreviations().contains(to_lower(tokens[i - 1].text)) && i + 1 < n &&
                                      !(i + 1 < n && tokens[i + 1].start > line.end);
            if (!abbreviation) cut_after[i] = true;
        }
    }

    std::size_t start = 0;
    auto close = [&](std::size_t end) {
        if (end <= start) return;
        sentences.push_back(Sentence{start, end, Span{tokens[start].start, tokens[end - 1].end}});
        start = end;
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (cut_before[i]) close(i);
        if (cut_after[i]) close(i + 1);
    }
    close(n);
    return sentences;
}

std::vector<Section> identify_sections(std::string_view text, const std::vector<Token>& tokens,
                                       const std::vector<Sentence>& sentences, const SectionSynonyms& synonyms) {
    std::vector<Section> sections;
    Section current{SectionKind::Other, 0, 0, ""};
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        const Token& first = tokens[sentences[s].token_begin];
        const LineInfo line = line_around(text, first.start);
        const bool at_line_start = trim(text.substr(line.begin, first.start - line.begin)).empty();
        if (!at_line_start) continue;
        const auto header = header_of_line(text, line, synonyms);
        if (!header) continue;
        const auto kind = synonyms.lookup(header->label);
        if (!kind) continue;
        current.sentence_end = s;
        if (current.sentence_end > current.sentence_begin) sections.push_back(current);
        current = Section{*kind, s, s, header->label};
    }
    current.sentence_end = sentences.size();
    if (current.sentence_end > current.sentence_begin || sections.empty()) sections.push_back(current);
    return sections;
}

SectionKind section_of(const std::vector<Section>& sections, std::size_t sentence_index) {
    for (const Section& s : sections) {
        if (sentence_index >= s.sentence_begin && sentence_index < s.sentence_end) return s.kind;
    }
    return SectionKind::Other;
}

// ---------------------------------------------------------------------------
// Assertions

namespace {

struct Occurrence {
    std::size_t begin;
    std::size_t end;
};

std::vector<Occurrence> find_sequences(const std::vector<std::string>& lower, std::size_t begin, std::size_t end,
                                       const std::vector<std::vector<std::string>>& sequences) {
    std::vector<Occurrence> out;
    for (std::size_t i = begin; i < end; ++i) {
        for (const auto& seq : sequences) {
            if (i + seq.size() > end) continue;
            bool ok = true;
            for (std::size_t k = 0; k < seq.size() && ok; ++k) ok = lower[i + k] == seq[k];
            if (ok) out.push_back({i, i + seq.size()});
        }
    }
    return out;
}

}  // namespace

Assertion detect_assertion(const std::vector<Token>& tokens, const Sentence& sentence, std::size_t entity_begin,
                           std::size_t entity_end, SectionKind section, const TriggerSet& triggers) {
    std::vector<std::string> lower(tokens.size());
    for (std::size_t i = sentence.token_begin; i < sentence.token_end; ++i) lower[i] = to_lower(tokens[i].text);

    auto occurrences = [&](TriggerKind kind) {
        const auto it = triggers.triggers.find(kind);
        if (it == triggers.triggers.end()) return std::vector<Occurrence>{};
        return find_sequences(lower, sentence.token_begin, sentence.token_end, it->second);
    };
    const auto terminators = occurrences(TriggerKind::Terminator);
    auto blocked = [&](std::size_t from, std::size_t to) {
        return std::any_of(terminators.begin(), terminators.end(),
                           [&](const Occurrence& t) { return t.begin >= from && t.end <= to; });
    };
    const std::size_t window = triggers.window;
    auto in_pre_scope = [&](TriggerKind kind) {
        for (const Occurrence& o : occurrences(kind)) {
            if (o.end <= entity_begin && entity_begin - o.end < window && !blocked(o.end, entity_begin)) return true;
        }
        return false;
    };
    auto in_post_scope = [&](TriggerKind kind) {
        for (const Occurrence& o : occurrences(kind)) {
            if (o.begin >= entity_end && o.begin - entity_end < window && !blocked(entity_end, o.begin)) return true;
        }
        return false;
    };
    auto anywhere_outside_entity = [&](TriggerKind kind) {
        for (const Occurrence& o : occurrences(kind)) {
            if (o.end <= entity_begin || o.begin >= entity_end) return true;
        }
        return false;
    };

    if (in_pre_scope(TriggerKind::PreNegation) || in_post_scope(TriggerKind::PostNegation)) return Assertion::Absent;
    if (section == SectionKind::FamilyHistory || anywhere_outside_entity(TriggerKind::Family)) return Assertion::Family;
    if (in_pre_scope(TriggerKind::Hypothetical)) return Assertion::Hypothetical;
    if (section == SectionKind::PastMedicalHistory || in_pre_scope(TriggerKind::Historical) ||
        in_pre_scope(TriggerKind::Cessation) || in_post_scope(TriggerKind::Cessation)) {
        return Assertion::Historical;
    }
    return Assertion::Present;
}

// ---------------------------------------------------------------------------
// Dictionary tagging

LexiconMatcher::LexiconMatcher(const Lexicon& lexicon) : lexicon_(&lexicon) {
    for (const LexTerm& term : lexicon.terms()) {
        std::vector<std::string> seq;
        for (const Token& t : tokenize(term.text)) seq.push_back(to_lower(t.text));
        if (seq.empty()) continue;
        by_first_token_[seq.front()].push_back(std::move(seq));
    }
    for (auto& [first, seqs] : by_first_token_) {
        std::stable_sort(seqs.begin(), seqs.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    }
}

std::vector<std::pair<std::size_t, std::size_t>> LexiconMatcher::find(const std::vector<Token>& tokens,
                                                                      std::size_t begin, std::size_t end) const {
    struct Candidate {
        std::size_t start;
        std::size_t length;
    };
    std::vector<Candidate> candidates;
    std::vector<std::string> lower;
    lower.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) lower.push_back(to_lower(tokens[i].text));
    for (std::size_t i = begin; i < end; ++i) {
        const auto it = by_first_token_.find(lower[i - begin]);
        if (it == by_first_token_.end()) continue;
        for (const auto& seq : it->second) {
            if (i + seq.size() > end) continue;
            bool ok = true;
            for (std::size_t k = 1; k < seq.size() && ok; ++k) ok = lower[i + k - begin] == seq[k];
            if (ok) candidates.push_back({i, seq.size()});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.length != b.length) return a.length > b.length;
        return a.start < b.start;
    });
    std::vector<std::pair<std::size_t, std::size_t>> accepted;
    for (const Candidate& c : candidates) {
        const std::size_t c_end = c.start + c.length;
        const bool overlaps = std::any_of(accepted.begin(), accepted.end(),
                                          [&](const auto& a) { return c.start < a.second && a.first < c_end; });
        if (!overlaps) accepted.emplace_back(c.start, c_end);
    }
    std::sort(accepted.begin(), accepted.end());
    return accepted;
}

std::vector<Entity> tag_entities(std::string_view text, const std::vector<Token>& tokens,
                                 const std::vector<Sentence>& sentences, const std::vector<Section>& sections,
                                 const std::vector<LexiconMatcher>& lexicons, const TriggerSet& triggers) {
    std::vector<Entity> entities;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        const Sentence& sentence = sentences[s];
        const SectionKind kind = section_of(sections, s);
        for (const LexiconMatcher& matcher : lexicons) {
            for (const auto& [b, e] : matcher.find(tokens, sentence.token_begin, sentence.token_end)) {
                Entity entity;
                entity.span = Span{tokens[b].start, tokens[e - 1].end};
                entity.token_begin = b;
                entity.token_end = e;
                entity.sentence = s;
                entity.surface = std::string(text.substr(entity.span.begin, entity.span.size()));
                entity.semantic_type = matcher.lexicon().semantic_type();
                entity.source_lexicon = matcher.lexicon().name();
                entity.section = kind;
                entity.assertion = detect_assertion(tokens, sentence, b, e, kind, triggers);
                entities.push_back(std::move(entity));
            }
        }
    }
    return entities;
}

// ---------------------------------------------------------------------------
// Dosages

namespace {

const std::set<std::string, std::less<>>& dose_units() {
    static const std::set<std::string, std::less<>> units = {"mg",  "mcg", "g",    "gm",     "ml",      "unit", "units",
                                                             "tab", "tabs", "tablet", "tablets", "cap", "caps", "iu"};
    return units;
}

const std::set<std::string, std::less<>>& dose_frequencies() {
    static const std::set<std::string, std::less<>> freq = {"qd",  "bid", "tid", "qid", "prn",   "daily",
                                                            "qhs", "qam", "qpm", "qod", "weekly", "nightly"};
    return freq;
}

bool parse_number(std::string_view s, double& out) {
    if (s.empty() || !is_digit(s.front())) return false;
    std::size_t dots = 0;
    for (char c : s) {
        if (c == '.') {
            ++dots;
        } else if (!is_digit(c)) {
            return false;
        }
    }
    if (dots > 1 || s.back() == '.') return false;
    out = std::stod(std::string(s));
    return std::isfinite(out);
}

}  // namespace

std::vector<Entity> extract_dosages(std::string_view text, const std::vector<Token>& tokens,
                                    const std::vector<Sentence>& sentences, std::size_t sentence_index,
                                    std::vector<Entity>& entities, SectionKind section) {
    static const std::regex fused(R"(^(\d+(?:\.\d+)?)([a-z]+)$)", std::regex::icase);
    const Sentence& sentence = sentences[sentence_index];
    std::vector<Entity> doses;
    for (std::size_t i = sentence.token_begin; i < sentence.token_end; ++i) {
        Dose dose;
        std::size_t last = i;
        std::smatch m;
        const std::string& tok = tokens[i].text;
        double number = 0.0;
        if (std::regex_match(tok, m, fused) && dose_units().contains(to_lower(m[2].str()))) {
            dose.value = std::stod(m[1].str());
            dose.unit = to_lower(m[2].str());
        } else if (parse_number(tok, number) && i + 1 < sentence.token_end &&
                   dose_units().contains(to_lower(tokens[i + 1].text))) {
            dose.value = number;
            dose.unit = to_lower(tokens[i + 1].text);
            last = i + 1;
        } else {
            continue;
        }
        Entity entity;
        entity.span = Span{tokens[i].start, tokens[last].end};
        entity.token_begin = i;
        entity.token_end = last + 1;
        entity.sentence = sentence_index;
        entity.surface = std::string(text.substr(entity.span.begin, entity.span.size()));
        entity.semantic_type = SemanticType::Dosage;
        entity.source_lexicon = "dosage";
        entity.section = section;
        if (last + 1 < sentence.token_end && dose_frequencies().contains(to_lower(tokens[last + 1].text))) {
            dose.frequency = to_lower(tokens[last + 1].text);
        }
        entity.dose = dose;

        // Nearest preceding Drug mention in this sentence, at most five tokens away.
        const Entity* nearest = nullptr;
        for (const Entity& e : entities) {
            if (e.sentence != sentence_index || e.semantic_type != SemanticType::Drug || e.token_end > i) continue;
            if (i - e.token_end > 5) continue;
            if (nearest == nullptr || e.token_end > nearest->token_end) nearest = &e;
        }
        if (nearest != nullptr) {
            const Span target = nearest->span;
            entity.attached_to = target;
            for (Entity& e : entities) {
                if (e.semantic_type == SemanticType::Drug && e.span == target) e.dose = dose;
            }
        }
        doses.push_back(std::move(entity));
        i = last;
    }
    return doses;
}

// ---------------------------------------------------------------------------
// Lab values

namespace {

std::string escape_regex(std::string_view s) {
    static const std::string special = R"(\^$.|?*+()[]{}/-)";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::size_t sentence_index_at(const std::vector<Sentence>& sentences, std::size_t offset) {
    const auto it = std::upper_bound(sentences.begin(), sentences.end(), offset,
                                     [](std::size_t off, const Sentence& s) { return off < s.span.begin; });
    if (it == sentences.begin()) return 0;
    return static_cast<std::size_t>(std::distance(sentences.begin(), it) - 1);
}

const std::string& header_at(const std::vector<Section>& sections, const std::vector<Sentence>& sentences,
                             std::size_t offset) {
    static const std::string empty;
    if (sentences.empty()) return empty;
    const std::size_t s = sentence_index_at(sentences, offset);
    for (const Section& sec : sections) {
        if (s >= sec.sentence_begin && s < sec.sentence_end) return sec.header;
    }
    return empty;
}

const std::regex& urine_context() {
    static const std::regex re(R"(\b(urine|ua|u/a|urinalysis|urin\w*)\b)", std::regex::icase);
    return re;
}

const std::regex& serum_context() {
    static const std::regex re(R"(\b(serum|plasma|blood|chem\w*|bmp|cmp|bun)\b)", std::regex::icase);
    return re;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        f(pos, std::string(text.substr(pos, eol - pos)));
        pos = eol + 1;
    }
}

}  // namespace

std::vector<LabResult> extract_lab_results(std::string_view text, const std::vector<Section>& sections,
                                           const std::vector<Sentence>& sentences, const LabNameTable& lab_names) {
    std::vector<LabResult> results;
    if (lab_names.empty()) return results;

    std::vector<std::pair<std::string, std::string>> names(lab_names.begin(), lab_names.end());
    std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    std::string alternation;
    for (const auto& [surface, canonical] : names) {
        if (!alternation.empty()) alternation += '|';
        alternation += escape_regex(surface);
    }
    const std::regex name_re("(^|[^A-Za-z0-9])(" + alternation + ")(?![A-Za-z0-9])", std::regex::icase);
    static const std::regex value_re(
        R"(^\s*(?:\((?:serum|plasma|blood|urine)\)\s*)?)"
        R"((?:(?::|=|-|was|is|of|level|levels|value|at|to|up to|elevated to|increased to|now|today|result)\s*)*)"
        R"((\d+(?:\.\d+)?)\s*(%|mg/dl|mmol/l|mmol/mol|g/dl|umol/l|mg)?)"
        R"((?:\s*\((?:h|l|high|low)\)|\s+(?:h|l)(?![A-Za-z0-9]))?)"
        R"((?:\s*[\(\[]\s*(?:(?:ref|nl|normal|range)[:\s]*)?(\d+(?:\.\d+)?)\s*-\s*(\d+(?:\.\d+)?)\s*[\)\]])?)",
        std::regex::icase);

    auto canonical_of = [&](const std::string& surface) {
        const std::string lower = to_lower(surface);
        for (const auto& [s, c] : names) {
            if (to_lower(s) == lower) return c;
        }
        return lower;
    };

    for_each_line(text, [&](std::size_t line_offset, const std::string& line) {
        const std::string& header = header_at(sections, sentences, line_offset);
        for (auto it = std::sregex_iterator(line.begin(), line.end(), name_re); it != std::sregex_iterator(); ++it) {
            const std::smatch& nm = *it;
            const auto name_pos = static_cast<std::size_t>(nm.position(2));
            const std::size_t after = name_pos + static_cast<std::size_t>(nm.length(2));
            std::smatch vm;
            const std::string rest = line.substr(after);
            if (!std::regex_search(rest, vm, value_re, std::regex_constants::match_continuous)) {
                spdlog::debug("lab name '{}' without a value", nm[2].str());
                continue;
            }
            LabResult lab;
            lab.test_name = canonical_of(nm[2].str());
            lab.value = std::stod(vm[1].str());
            if (!std::isfinite(lab.value) || lab.value < 0) continue;
            lab.unit = to_lower(vm[2].str());
            if (vm[3].matched && vm[4].matched) {
                const double low = std::stod(vm[3].str());
                const double high = std::stod(vm[4].str());
                if (low < high) lab.reference_range = ReferenceRange{low, high};
            }
            lab.span = Span{line_offset + name_pos, line_offset + after + static_cast<std::size_t>(vm.length(0))};
            if (std::regex_search(line, urine_context()) || std::regex_search(header, urine_context())) {
                lab.specimen = Specimen::Urine;
            } else if (std::regex_search(line, serum_context()) || std::regex_search(header, serum_context())) {
                lab.specimen = Specimen::Serum;
            } else {
                lab.specimen = Specimen::Unknown;
            }
            results.push_back(std::move(lab));
        }
    });
    return results;
}

std::vector<KetoneCue> extract_ketone_cues(std::string_view text, const std::vector<Section>& sections,
                                           const std::vector<Sentence>& sentences) {
    static const std::regex positive(
        R"(\bketones?\s*(?:[:=]|was|were|is|are)?\s*(?:positive|pos(?![A-Za-z])|\d\+|\+|trace|small|moderate|large)|)"
        R"(\b(?:positive|\+)\s+(?:for\s+)?(?:urine\s+)?ketones?\b)",
        std::regex::icase);
    static const std::regex ketonuria(R"(\b(no|without|denies)?\s*ketonuria\b)", std::regex::icase);
    std::vector<KetoneCue> cues;
    for_each_line(text, [&](std::size_t line_offset, const std::string& line) {
        const std::string& header = header_at(sections, sentences, line_offset);
        const bool urine = std::regex_search(line, urine_context()) || std::regex_search(header, urine_context());
        if (urine) {
            for (auto it = std::sregex_iterator(line.begin(), line.end(), positive); it != std::sregex_iterator(); ++it) {
                const auto b = line_offset + static_cast<std::size_t>(it->position(0));
                cues.push_back({Span{b, b + static_cast<std::size_t>(it->length(0))}, sentence_index_at(sentences, b)});
            }
        }
        for (auto it = std::sregex_iterator(line.begin(), line.end(), ketonuria); it != std::sregex_iterator(); ++it) {
            if ((*it)[1].matched) continue;
            const auto b = line_offset + static_cast<std::size_t>(it->position(0));
            cues.push_back({Span{b, b + static_cast<std::size_t>(it->length(0))}, sentence_index_at(sentences, b)});
        }
    });
    return cues;
}

// ---------------------------------------------------------------------------
// AnnotatedNote / Annotator

std::size_t AnnotatedNote::sentence_at(std::size_t char_offset) const { return sentence_index_at(sentences, char_offset); }

const Timex* AnnotatedNote::nearest_timex(std::size_t sentence_index, const Span& span) const {
    const Timex* best = nullptr;
    std::size_t best_distance = 0;
    for (std::size_t i = 0; i < timexes.size(); ++i) {
        if (timex_sentence[i] != sentence_index) continue;
        const Span& t = timexes[i].span;
        std::size_t distance = 0;
        if (t.end <= span.begin) {
            distance = span.begin - t.end;
        } else if (t.begin >= span.end) {
            distance = t.begin - span.end;
        }
        if (best == nullptr || distance < best_distance) {
            best = &timexes[i];
            best_distance = distance;
        }
    }
    return best;
}

Annotator::Annotator(TextResources resources, const std::vector<Lexicon>& lexicons)
    : resources_(std::move(resources)), lexicons_(lexicons) {
    matchers_.reserve(lexicons_.size());
    for (const Lexicon& lex : lexicons_) matchers_.emplace_back(lex);
}

AnnotatedNote Annotator::annotate(std::string_view text, Date record_date, std::size_t note_index) const {
    AnnotatedNote note;
    note.note_index = note_index;
    note.record_date = record_date;
    note.text = std::string(text);
    note.tokens = tokenize(text);
    note.sentences = split_sentences(text, note.tokens, resources_.sections);
    note.sections = identify_sections(text, note.tokens, note.sentences, resources_.sections);
    note.entities = tag_entities(text, note.tokens, note.sentences, note.sections, matchers_, resources_.triggers);
    std::vector<Entity> doses;
    for (std::size_t s = 0; s < note.sentences.size(); ++s) {
        auto found = extract_dosages(text, note.tokens, note.sentences, s, note.entities, section_of(note.sections, s));
        std::move(found.begin(), found.end(), std::back_inserter(doses));
    }
    std::move(doses.begin(), doses.end(), std::back_inserter(note.entities));
    std::stable_sort(note.entities.begin(), note.entities.end(), [](const Entity& a, const Entity& b) {
        if (a.span != b.span) return a.span < b.span;
        return a.source_lexicon < b.source_lexicon;
    });
    note.lab_results = extract_lab_results(text, note.sections, note.sentences, resources_.lab_names);
    note.ketone_cues = extract_ketone_cues(text, note.sections, note.sentences);
    for (std::size_t s = 0; s < note.sentences.size(); ++s) {
        const Span& span = note.sentences[s].span;
        for (Timex& t : extract_timexes(text.substr(span.begin, span.size()), span.begin)) {
            note.timexes.push_back(std::move(t));
            note.timex_sentence.push_back(s);
        }
    }
    return note;
}

}  // namespace cohort
